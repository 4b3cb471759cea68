"""Deviation of the solution under a constant perturbation of every forcing term.

The deviation should shrink roughly in proportion to epsilon.
"""
from fractumor import SolverConfig
from fractumor.verify import stability_study

reports = stability_study(SolverConfig(M=200, N=20), [1e-1, 1e-2, 1e-3])
prev = None
for r in reports:
    ratio = "" if prev is None else f"  ratio {prev / r.deviation:.2f}"
    print(f"eps={r.epsilon:7.0e}  pqd {r.pqd:.3e}  R {r.R:.3e}  grad(c,w) {r.grad_cw:.3e}{ratio}")
    prev = r.deviation
