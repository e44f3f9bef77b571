"""Checks that do not need a simulation.

First the quadrotor velocity loop: it is Hurwitz, and a Lyapunov argument
with P = I gives a linear bound from the reference rate to the tracking
error.  Then a sampled small-gain check on the barrier interval for the
gap-passage parameters, and finally the positive-basis validator on a good
and a damaged basis.
"""

import numpy as np

from reshapeqp import BarrierSpec, PositiveBasis, polygon_basis, validate_basis
from reshapeqp.actuation import ios_gain, quadrotor_model, verify_assumption1
from reshapeqp.analysis import LinearSlope, small_gain_check, small_gain_interval

q = quadrotor_model()
g = ios_gain(q)
print(f"quadrotor: max Re eig {q.max_real_eig():.2f}, |C A^-1 B + I| = {q.dc_residual():.2e}")
print(f"  tracking error <= {g.c_v:.2f} e^(-{g.lam:.2f} t) |zeta0| + {g.slope:.3f} sup|v_ref'|"
      f" + {g.dc_residual:.1e} |v_ref|")
print(f"  empirical check: {verify_assumption1(q, g, trials=10, seed=0).violations} violations in 10 trials")

barrier = BarrierSpec(0.6, 0.65, 0.75)
interval = small_gain_interval(barrier)
for k in (0.5, 1.0):
    rep = small_gain_check(LinearSlope(k), LinearSlope(k), LinearSlope(0.1), LinearSlope(0.1), interval, 1000)
    print(f"small gain with slopes {k}: passed={rep.passed}, worst relative margin {rep.worst_relative_margin:+.4f}")

good = polygon_basis(11)
rows = good.rows.copy()
rows[4] = -rows[4]
for label, basis in (("11-gon", good), ("one row flipped", PositiveBasis(rows, good.c_A))):
    rep = validate_basis(basis, 10_000)
    print(f"basis {label}: passed={rep.passed}, min window size {rep.min_card}")
