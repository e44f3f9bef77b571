"""A quadrotor commanded straight through a gap that is too narrow.

With the identified quadrotor velocity loop in the way, the relaxed filter
lets the vehicle clip an obstacle while the reshaped filter keeps the safety
distance.
"""

import warnings

from reshapeqp import fileio
from reshapeqp.sim import metrics, run

# both bundled scenarios use c_K = 1 on purpose
warnings.filterwarnings("ignore", message="c_K=")

scenario = fileio.load_scenario(fileio.bundled("sixB"))
D = scenario.filter.barrier.D
for variant in ("relaxed", "reshaped"):
    m = metrics(run(scenario.with_variant(variant)), scenario.dt)
    verdict = "collision" if m.min_distance < D else "safe"
    print(f"{variant:9s} min distance {m.min_distance:.4f} at t={m.min_distance_time:.3f} s -> {verdict}"
          f" (max |v*| {m.max_v_star:.3f}, max tracking error {m.max_v_err:.3f})")
