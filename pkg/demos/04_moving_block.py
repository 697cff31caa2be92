"""Chase a block sliding along a line, then grasp it."""

from dqvs.sim import default_config, default_trajectory, run_episode

for kind in ("h_line", "ellipse", "sine"):
    r = run_episode(default_config(trajectory=default_trajectory(kind)))
    print(f"{kind:8s} success={r.success}  time {r.time_to_grasp:.2f} s  switches {r.switches}"
          f"  clamps {r.clamp_events}  rows {len(r.telemetry)}")

# A noisy camera makes the nearest grasp flicker; the hysteresis margin holds it steady.
from dqvs.sim import ObservationModel  # noqa: E402

for delta in (0.0, 0.05):
    cfg = default_config(trajectory=default_trajectory("ellipse"), delta=delta,
                         observation=ObservationModel(0.002, 0.0, 11),
                         pregrasp_threshold=1e-12, max_duration=20.0)
    print(f"noisy ellipse, delta={delta}: {run_episode(cfg).switches} switches")
