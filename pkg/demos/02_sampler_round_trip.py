"""
Generation and inversion with the deterministic sampler
=======================================================

With a predictor whose output ignores x, every inversion hop undoes its
generation hop exactly. With a predictor that depends on x, the round trip
drifts, and the drift shrinks as the number of sampling steps grows.
"""

import numpy as np

from diffsteg import AnalyticOracle, build_linear_schedule, build_plan, generate, invert

schedule = build_linear_schedule(1000)
print("alpha_bar at t=1, 500, 1000:", schedule.abar(1), schedule.abar(500), schedule.abar(1000))

rng = np.random.default_rng(0)
x = rng.standard_normal((1, 4, 4))

oracle = AnalyticOracle.constant(0.3)
for S in (1, 10, 100):
    plan = build_plan(1000, S)
    err = np.max(np.abs(invert(generate(x, plan, oracle, schedule), plan, oracle, schedule) - x))
    print("constant oracle, S=%-4d round-trip max error %.1e" % (S, err))

# %%
# An affine predictor eps(x) = A x + b with a small Lipschitz constant.
A = 0.3 * rng.standard_normal((16, 16)) / 4
linear = AnalyticOracle.linear(A, 0.1 * rng.standard_normal(16))
print("Lipschitz constant %.3f" % linear.lipschitz)
for S in (5, 10, 20, 50, 100):
    plan = build_plan(1000, S)
    err = np.max(np.abs(invert(generate(x, plan, linear, schedule), plan, linear, schedule) - x))
    print("linear oracle,   S=%-4d round-trip max error %.2e" % (S, err))
