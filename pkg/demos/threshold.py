"""
Epidemic threshold
==================

Below R0 = 1 the infection dies out; above it the state settles on the
endemic equilibrium. Writes trajectories and a plot to ``demo-output/``.
"""

import os

import numpy as np

from epidde import ModelParams, endemic_equilibrium, reproduction_number, simulate
from epidde.io import write_csv
from epidde.svg import plot_svg

out = os.environ.get("EPIDDE_OUT", "demo-output")
os.makedirs(out, exist_ok=True)
params = ModelParams()

for beta in (0.5, 1.0):
    r0 = reproduction_number(params, beta)
    traj = simulate(params.with_beta(beta), horizon=600.0)
    eq = endemic_equilibrium(params, beta)
    target = 0.0 if eq is None else eq.i
    print(f"beta = {beta}: R0 = {r0:.4f}, I(600) = {traj.states[-1, 2]:.3e}, "
          f"equilibrium I = {target:.4e}")
    write_csv(traj, os.path.join(out, f"threshold_beta{beta}.csv"))

    # every 10th point is plenty for a picture
    t = traj.times[::10]
    plot_svg([(c, t, traj.states[::10, k]) for k, c in enumerate("SEIQRD")],
             os.path.join(out, f"threshold_beta{beta}.svg"),
             xlabel="t (days)", ylabel="fraction", title=f"beta = {beta}, R0 = {r0:.3f}")

# the total population stays at 1 because births balance deaths
print("max |sum - 1|:", np.abs(traj.states.sum(axis=1) - 1).max())
