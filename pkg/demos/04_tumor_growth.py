"""A tumor fed through its rim, with drug switched on gradually.

No manufactured forcing here: the full rate template with Michaelis-Menten
style growth, nutrient-dependent quiescence and drug-induced death.  The
total cell density p + q + d starts at N = 1 and should stay there.
"""
import sys

from fractumor import Simulation
from fractumor.persist import read_config, trajectory_rows, write_trajectory_csv

cfg = read_config(sys.argv[1] if len(sys.argv) > 1 else "demos/tumor.cfg")
sim = Simulation(cfg)
res = sim.run()

rows = list(trajectory_rows(sim, res.trajectory))
print(" t      R        max_c    max_w    max_p    max_q    max_d    drift")
for row in rows[:: max(1, len(rows) // 10)]:
    print(" ".join(f"{x:8.4f}" for x in row[:-1]), f"{row[-1]:.1e}")

write_trajectory_csv(sim, res.trajectory, "tumor_trajectory.csv")
print("written tumor_trajectory.csv; clamped fraction", res.summary["clamped_fraction"])
