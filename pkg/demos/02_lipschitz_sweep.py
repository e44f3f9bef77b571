"""How |v*| depends on the agent position for the relaxed and reshaped filters.

Both sweeps use two obstacles at +-[0.5, 0.5] and command [1, -1].  The
relaxed solution changes abruptly near the origin, where the two constraint
normals swap roles; the reshaped solution uses fixed normals and changes
smoothly.  Pass --full for the whole 3 x 3 region at step 0.01 (about two
minutes); the default looks at the neighbourhood of the origin only.
"""

import sys
import warnings

from reshapeqp import fileio
from reshapeqp.analysis import compare_lipschitz, lipschitz_report
from reshapeqp.sim import static_sweep

warnings.filterwarnings("ignore", message="c_K=")

overrides = [] if "--full" in sys.argv else ["region=[-0.3, 0.3, -0.3, 0.3]"]
reports = {}
for name in ("example3", "example4"):
    sweep = fileio.load_sweep(fileio.bundled(name), overrides)
    grid = static_sweep(sweep)
    reports[name] = lipschitz_report(grid)
    r = reports[name]
    print(f"{name} ({sweep.filter.variant.value}): max ratio {r.max_ratio:7.2f} at ({r.location[0]:.3f}, {r.location[1]:.3f}), "
          f"{r.n_braked_cells} braked cells")

cmp = compare_lipschitz(reports["example3"], reports["example4"])
print(f"relaxed / reshaped = {cmp['factor']:.2f}; relaxed spike at radius {cmp['rough_location_radius']:.3f}")

# Halving the step sharpens the relaxed spike but not the reshaped one.
for step in (0.01, 0.005):
    ratios = []
    for name in ("example3", "example4"):
        sw = fileio.load_sweep(fileio.bundled(name), ["region=[-0.2, 0.2, -0.2, 0.2]", f"step={step}"])
        ratios.append(static_sweep(sw).max_ratio()[0])
    print(f"step {step}: relaxed {ratios[0]:6.2f}, reshaped {ratios[1]:5.2f}")
