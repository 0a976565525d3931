"""Forward-path, approach and unified weights for two UAVs at constant velocity.

alpha is large when UAV 2 lies ahead of UAV 1's velocity, beta is large when the
pair is closing in along its line of sight, and xi = alpha * beta needs both.
"""
import numpy as np

from flatform import collision

for name, params in collision.WEIGHTS_DEMO_SCENARIOS.items():
    d = collision.weights_demo(**params, steps=20, step=0.1)
    print(f"\n{name}: p2(0) = {params['p2']}")
    print("   t     dist    alpha    beta     xi")
    for k in range(0, 20, 2):
        print(f"{d['t'][k]:4.1f}  {d['distance'][k]:6.3f}  {d['alpha'][k]:6.3f}  "
              f"{d['beta'][k]:6.3f}  {d['xi'][k]:6.3f}")
    assert np.all(d["xi"] <= np.minimum(d["alpha"], d["beta"]) + 1e-15)

# A hovering UAV 1 has no forward path, so neither alpha nor xi can act.
still = dict(collision.WEIGHTS_DEMO_SCENARIOS["scenario1"], v1=[0.0, 0.0, 0.0])
d = collision.weights_demo(**still)
print(f"\nhovering UAV 1: max alpha = {d['alpha'].max()}, max xi = {d['xi'].max()}")

# The penalty itself, for the 1.5 m / 3 m radii: zero outside the reaction band,
# unbounded at its inner edge.
cfg = collision.SafetyConfig.uniform(2, 1.5, 3.0)
for dist in (6.5, 5.0, 4.5, 3.5, 3.01, 3.001):
    p = np.array([[0.0, 0.0, 0.0], [dist, 0.0, 0.0]])
    print(f"distance {dist:6.3f} m   penalty {collision.penalty(p, (0, 1), cfg):12.4f}")
