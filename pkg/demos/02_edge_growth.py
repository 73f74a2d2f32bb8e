"""Watch the scaled edge counts converge to the solved fixed point.

Grows the two-group reference network once, recording per-group edge
counts at geometric checkpoints, and prints them next to the predicted
limits x_m (incoming) and y_m (outgoing). Writes the trajectory to
out/edge_growth/trajectory.csv for plotting.
"""

from pathlib import Path

import numpy as np

from recipnet import SimConfig, run, solve_equilibrium, validate_params
from recipnet import io as rio

params = validate_params(alpha=0.5, delta=1.0, pi=[0.5, 0.5],
                         rho=[[0.9, 0.9], [0.45, 0.45]])
sol = solve_equilibrium(params)

n_steps = 300_000
snapshots = tuple(int(s) for s in np.geomspace(100, n_steps, 12).round())
result = run(params, SimConfig(n_steps=n_steps, seed=7, snapshot_steps=snapshots))

print(f"limits: x = {np.round(sol.x, 5)}, y = {np.round(sol.y, 5)}, "
      f"|E|/n -> {1 + sol.rho_star:.5f}")
print(f"{'step':>8} {'|E|/n':>9}" + "".join(
    f" {'in_' + str(m + 1) + '/n':>9} {'out_' + str(m + 1) + '/n':>9}"
    for m in range(params.K)))
traj = result.trajectory
for i, step in enumerate(traj.steps):
    cells = [f"{step:>8}", f"{traj.total_edges[i] / step:>9.5f}"]
    for m in range(params.K):
        cells.append(f"{traj.group_in[i, m] / step:>9.5f}")
        cells.append(f"{traj.group_out[i, m] / step:>9.5f}")
    print(" ".join(cells))

final_in = np.array(result.state.group_in_edges) / n_steps
final_out = np.array(result.state.group_out_edges) / n_steps
print("\nrelative gap to the limit at the final step:")
print(f"  incoming: {np.round(np.abs(final_in - sol.x) / sol.x, 4)}")
print(f"  outgoing: {np.round(np.abs(final_out - sol.y) / sol.y, 4)}")

out_dir = Path("out/edge_growth")
out_dir.mkdir(parents=True, exist_ok=True)
rio.write_trajectory(out_dir / "trajectory.csv", traj)
print(f"\nwrote {out_dir / 'trajectory.csv'}")
