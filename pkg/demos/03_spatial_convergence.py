"""Spectral decay in N at fixed M.

The polynomial family lies inside the trial space, so we switch to the
boundary-layer family (a pole just outside rho = 1) and measure against an
N = 200 run with the same M.  That removes the time-stepping error, which at
M = 200 would otherwise hide everything past N = 10.
"""
from fractumor import SolverConfig
from fractumor.verify import run_convergence_study

base = SolverConfig(alpha=0.1, M=200, mms="boundary-layer")
study = run_convergence_study(base, "space", [10, 20, 40, 80, 100])

print("reference:", study.reference)
for k in ("c", "w"):
    print(k, "  ".join(f"N={n}: {e:.2e}" for n, e in zip(study.levels, study.errors[k])))
