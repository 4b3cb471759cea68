"""Observed temporal order on the manufactured solution.

The expected rate for the fractional scheme is 2 - alpha/2; p, q, d are
advanced by a second-order leapfrog and usually show 2.
"""
from fractumor import SolverConfig
from fractumor.verify import run_convergence_study

levels = [250, 500, 1000]          # bump to 1000, 2000, 3000 for the full study (~2 min)
study = run_convergence_study(SolverConfig(alpha=0.1, N=20), "time", levels)

print("M      " + "  ".join(f"{k:>10}" for k in "cwpqd"))
for i, M in enumerate(levels):
    print(f"{M:<6} " + "  ".join(f"{study.errors[k][i]:10.3e}" for k in "cwpqd"))
for i in range(len(levels) - 1):
    pair = f"{levels[i]}->{levels[i + 1]}"
    print(f"order {pair}: " + "  ".join(f"{k}={study.orders[k][i]:.3f}" for k in "cwpqd"))
print(f"reference 2 - alpha/2 = {study.reference_order}")
