"""A single run on the polynomial manufactured solution, compared with the exact fields."""
import numpy as np

from fractumor import SolverConfig, Simulation, example1_solution
from fractumor.verify import error_norms

# defaults: alpha = 0.1, T = 1, N = 20, N_h = 200, D1 = D2 = 1/12, R(0) = 0.5
cfg = SolverConfig(M=400)
sim = Simulation(cfg)
res = sim.run()

exact = example1_solution()
print(f"R(T) = {res.state.R:.10f}   exact {exact.R(cfg.T):.10f}")

rep = error_norms(res.trajectory, exact)
for k, e in rep.max_error.items():
    print(f"max error {k}: {e:.3e}")   # over a 1001-point grid and every step

# the nutrient profile at the final time, a few sample points
rho = np.linspace(0, 1, 6)
snap = res.trajectory[-1]
c_num = sim.spectral(snap.c)(rho)
print(np.c_[rho, c_num, exact.c(rho, cfg.T)])

print("summary:", {k: v for k, v in res.summary.items() if k != "step_times"})
