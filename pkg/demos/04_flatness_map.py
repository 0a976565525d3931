"""Recover thrust, attitude, body rates and moments from flat outputs.

Any sufficiently smooth position/yaw trajectory maps to quadrotor inputs: the
acceleration fixes the thrust vector, yaw completes the body frame, the jerk
and yaw rate give the body rates, and differentiating those gives the moments.
"""
import numpy as np

from flatform import config, sim
from flatform.flatness import QuadrotorParams, physical_states, thrust_and_attitude

quad = QuadrotorParams()

u1, roll, pitch, _ = thrust_and_attitude(np.zeros(3), 0.0, quad)
print(f"hover: thrust {u1:.2f} N, roll {roll:.3f}, pitch {pitch:.3f}")
u1, roll, pitch, _ = thrust_and_attitude(np.array([1.0, 0.0, 0.0]), 0.0, quad)
print(f"1 m/s^2 forward: thrust {u1:.3f} N, pitch {np.degrees(pitch):.2f} deg "
      f"(atan(1/9.81) = {np.degrees(np.arctan2(1, 9.81)):.2f} deg)")

# A horizontal circle of radius 2 m flown at 1 rad/s with a slowly turning nose.
dt = 0.01
t = np.arange(0.0, 4 * np.pi, dt)
acc = np.stack([-2 * np.cos(t), -2 * np.sin(t), np.zeros_like(t)], axis=-1)
jerk = np.stack([2 * np.sin(t), -2 * np.cos(t), np.zeros_like(t)], axis=-1)
yaw, yaw_rate = 0.2 * t, np.full_like(t, 0.2)
state = physical_states(acc, jerk, yaw, yaw_rate, quad, dt=dt)
print(f"\ncircle: thrust in [{state.thrust.min():.3f}, {state.thrust.max():.3f}] N, "
      f"|omega| <= {np.linalg.norm(state.body_rates, axis=-1).max():.3f} rad/s, "
      f"|moment| <= {np.linalg.norm(state.moments, axis=-1).max():.2e} N m")

# The same map runs along every simulated trajectory.
trace = sim.run(config.load_fixture("four_uav").with_overrides(strategy="unified"))
phys = trace.physical
print("\nfour_uav/unified, per UAV:")
for i in range(trace.n_uavs):
    print(f"  UAV {i + 1}: thrust {phys.thrust[:, i].min():.2f}..{phys.thrust[:, i].max():.2f} N, "
          f"max |roll| {np.degrees(np.abs(phys.roll[:, i]).max()):5.2f} deg, "
          f"max |pitch| {np.degrees(np.abs(phys.pitch[:, i]).max()):5.2f} deg")
