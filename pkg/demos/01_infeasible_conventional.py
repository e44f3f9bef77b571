"""An agent squeezed between two obstacles.

The conventional filter has no feasible velocity here: both obstacles sit
inside the margin distance, and their constraints point in opposite
directions.  Adding the relaxation variable fixes feasibility, since
delta = 0 with v = 0 always satisfies the homogeneous constraints.
"""

import numpy as np

from reshapeqp import FilterConfig, filter_velocity, fileio
from reshapeqp.world import WorldState

cfg = fileio.load_scenario(fileio.bundled("example2")).filter
world = WorldState([[0.0, 0.0], [0.5, 0.5], [-0.5, -0.5]], n_agents=1)
v_c = np.array([1.0, -1.0])

out = filter_velocity(0, v_c, world, cfg)
print(f"conventional: status={out.qp.status.value}")
print("  right-hand sides:", -out.constraints.a_o)

relaxed = FilterConfig(cfg.barrier, 100.0, "relaxed", offset_form=cfg.offset_form)
out = filter_velocity(0, v_c, world, relaxed)
print(f"relaxed:      v*={out.v_star}, delta_i={out.delta_i:.1e}, braked={out.braked}")
