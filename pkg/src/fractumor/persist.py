"""Config files, state snapshots, and trajectory CSV output."""
from __future__ import annotations

import csv
import dataclasses
import io
from pathlib import Path

import numpy as np

from .driver import ConfigError, SolverConfig, TumorState
from .fracmem import HistoryCache

SNAPSHOT_MAGIC = "fbp-snapshot"
SNAPSHOT_VERSION = "v1"
CSV_HEADER = ["t", "R", "max_c", "max_w", "max_p", "max_q", "max_d", "sum_drift"]


# -- config

_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(SolverConfig)}


def _convert(key, raw):
    kind = _FIELD_TYPES[key]
    raw = raw.strip()
    try:
        if kind == "bool":
            low = raw.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if kind == "int":
            as_float = float(raw)
            if as_float != int(as_float):
                raise ValueError(raw)
            return int(as_float)
        if kind == "float":
            return float(_fraction(raw))
    except ValueError:
        raise ConfigError(f"bad value for {key}: {raw!r} (expected {kind})") from None
    return raw.strip("'\"")


def _fraction(raw):
    # allow things like 1/12 for diffusion constants
    if "/" in raw:
        num, den = raw.split("/", 1)
        return float(num) / float(den)
    return float(raw)


def apply_overrides(config: SolverConfig, pairs) -> SolverConfig:
    """Apply ``key=value`` strings (or (key, value) tuples) to `config`."""
    changes = {}
    for item in pairs:
        if isinstance(item, str):
            if "=" not in item:
                raise ConfigError(f"override {item!r} is not key=value")
            key, value = item.split("=", 1)
        else:
            key, value = item
        key = key.strip()
        if key not in _FIELD_TYPES:
            raise ConfigError(f"unknown config key {key!r}")
        changes[key] = _convert(key, str(value))
    return dataclasses.replace(config, **changes)


def parse_config(text: str, base: SolverConfig | None = None) -> SolverConfig:
    pairs = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = line.split("=", 1)
        if key.strip() not in _FIELD_TYPES:
            raise ConfigError(f"line {lineno}: unknown config key {key.strip()!r}")
        pairs.append((key, value))
    return apply_overrides(base or SolverConfig(), pairs)


def read_config(path) -> SolverConfig:
    try:
        text = Path(path).read_text()
    except OSError as err:
        raise ConfigError(f"cannot read config {path}: {err}") from err
    return parse_config(text)


def config_text(config: SolverConfig) -> str:
    """Config file text that parses back to an identical config."""
    lines = []
    for f in dataclasses.fields(config):
        val = getattr(config, f.name)
        lines.append(f"{f.name} = {repr(val) if isinstance(val, float) else val}")
    return "\n".join(lines) + "\n"


def write_config(config: SolverConfig, path):
    Path(path).write_text(config_text(config))


# -- snapshots


class SnapshotError(ValueError):
    pass


def _hex(a):
    return " ".join(float(x).hex() for x in np.ravel(a))


def snapshot_text(state: TumorState, config_hash: str) -> str:
    out = [f"{SNAPSHOT_MAGIC} {SNAPSHOT_VERSION} {config_hash}"]
    for k in TumorState.COUNTERS:
        out.append(f"int {k} {int(getattr(state, k))}")
    for k in TumorState.SCALARS:
        out.append(f"float {k} {float(getattr(state, k)).hex()}")
    for k in TumorState.ARRAYS:
        a = getattr(state, k)
        out.append(f"array {k} {a.size} {_hex(a)}".rstrip())
    for k in ("hist_c", "hist_w"):
        cache = getattr(state, k)
        out.append(f"matrix {k} {len(cache)} {cache.width} {_hex(cache.entries)}".rstrip())
        out.append(f"int {k}_terms {cache.terms_summed}")
    return "\n".join(out) + "\n"


def save_snapshot(state: TumorState, path, config: SolverConfig):
    Path(path).write_text(snapshot_text(state, config.digest()))


def _floats(tokens, count, offset, label):
    if len(tokens) != count:
        raise SnapshotError(f"{label}: expected {count} values, found {len(tokens)} "
                            f"(byte offset {offset})")
    try:
        return np.array([float.fromhex(t) for t in tokens])
    except ValueError:
        raise SnapshotError(f"{label}: malformed float (byte offset {offset})") from None


def parse_snapshot(data: str, expect_hash: str | None = None) -> TumorState:
    raw = data.encode()
    lines = io.BytesIO(raw).readlines()
    if not lines:
        raise SnapshotError("empty snapshot (byte offset 0)")
    head = lines[0].decode().split()
    if len(head) != 3 or head[0] != SNAPSHOT_MAGIC:
        raise SnapshotError("missing snapshot header (byte offset 0)")
    if head[1] != SNAPSHOT_VERSION:
        raise SnapshotError(f"unsupported snapshot version {head[1]!r} (byte offset "
                            f"{len(SNAPSHOT_MAGIC) + 1})")
    if expect_hash is not None and head[2] != expect_hash:
        raise SnapshotError(f"snapshot was written for config {head[2]}, not {expect_hash}")
    values, hists = {}, {}
    offset = len(lines[0])
    for line in lines[1:]:
        here = offset
        offset += len(line)
        tok = line.decode().split()
        if not tok:
            continue
        kind = tok[0]
        try:
            if kind == "int":
                values[tok[1]] = int(tok[2])
            elif kind == "float":
                values[tok[1]] = float.fromhex(tok[2])
            elif kind == "array":
                values[tok[1]] = _floats(tok[3:], int(tok[2]), here, tok[1])
            elif kind == "matrix":
                rows, width = int(tok[2]), int(tok[3])
                vals = _floats(tok[4:], rows * width, here, tok[1])
                hists[tok[1]] = HistoryCache.from_array(vals, width)
            else:
                raise SnapshotError(f"unknown record type {kind!r} (byte offset {here})")
        except (IndexError, ValueError) as err:
            if isinstance(err, SnapshotError):
                raise
            raise SnapshotError(f"malformed record (byte offset {here})") from None
    needed = TumorState.COUNTERS + TumorState.SCALARS + TumorState.ARRAYS
    missing = [k for k in needed if k not in values] + \
              [k for k in ("hist_c", "hist_w") if k not in hists]
    if missing:
        raise SnapshotError(f"snapshot lacks {missing} (byte offset {len(raw)})")
    for k in ("hist_c", "hist_w"):
        hists[k].terms_summed = values.pop(f"{k}_terms", 0)
    state = TumorState(**{k: values[k] for k in needed}, **hists)
    if len(state.hist_c) != state.n or len(state.hist_w) != state.n:
        raise SnapshotError("history length does not match the step index")
    return state


def load_snapshot(path, config: SolverConfig | None = None) -> TumorState:
    expect = config.digest() if config is not None else None
    return parse_snapshot(Path(path).read_text(), expect)


# -- trajectory CSV


def trajectory_rows(sim, trajectory):
    grid = sim.grid
    n_total = sim.model.n_total
    V = sim.basis.value_matrix(grid)
    for snap in trajectory:
        c = V @ snap.c + snap.c_bar
        w = V @ snap.w + snap.w_bar
        total = snap.p + snap.q + snap.d
        yield [snap.t, snap.R, np.max(np.abs(c)), np.max(np.abs(w)),
               np.max(np.abs(snap.p)), np.max(np.abs(snap.q)), np.max(np.abs(snap.d)),
               np.max(np.abs(total - n_total)) / n_total]


def write_trajectory_csv(sim, trajectory, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for row in trajectory_rows(sim, trajectory):
            writer.writerow([repr(float(x)) for x in row])
