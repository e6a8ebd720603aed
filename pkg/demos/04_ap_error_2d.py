"""Asymptotic behavior in planar geometry (smooth Gaussian bump, sigma = 1).

Runs the even/odd parity solver on the unit square for a ladder of Knudsen
numbers and records the l2 distance between f and its angular mean along
time. The distance shrinks proportionally to eps; the final densities are
also compared with the 2D diffusion limit rho_t = (1/2) div(grad rho / sigma).

Writes ap_eps*.csv time series plus ap_summary.csv under demo_out/example5.
"""

from implicitrt.cli import run_experiment
from implicitrt.config import preset_config
from implicitrt.csvio import read_csv

print(__doc__)

cfg = preset_config("example5", nx=40, nv=8, tmax=0.05, out_dir="demo_out/example5")
run_experiment(cfg)

_, _, data = read_csv("demo_out/example5/ap_summary.csv")
print("\n  eps        |f - rho|_2 at t_max   |rho_kinetic - rho_diffusion|_2")
for eps, ap, gap in data:
    print(f"  {eps:<10.0e} {ap:<22.6e} {gap:.6e}")
print("\nboth columns shrink with eps: the scheme lands on the diffusion"
      "\nlimit without resolving eps in the mesh or the time step")
