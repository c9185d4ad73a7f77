"""
How the line pipeline grows with the number of proposals
========================================================

Synthetic scenes put every worker's k* lines at the same k* spots along a
grid of canals.  Doubling the workers should roughly double the time.
"""
import time

from crowdplan import aggregate_lines
from crowdplan.fixtures import synthetic_line_scene

prev = None
for n in (500, 1000, 2000, 4000, 8000):
    batches, background, config = synthetic_line_scene(n, k_star=3, seed=0)
    t0 = time.perf_counter()
    consensus = aggregate_lines(batches, background, config.with_overrides(max_iter=20))
    dt = time.perf_counter() - t0
    ratio = f"x{dt / prev:.2f}" if prev else ""
    print(f"{3 * n:>6} lines  {dt:7.3f}s  {ratio:>6}  clusters {consensus.cluster_sizes}")
    prev = dt
