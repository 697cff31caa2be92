"""Deterministic reach-to-grasp episodes against scripted object motion."""

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import dq as dql
from .controller import (ControllerGains, ControllerState, error_metrics,
                         lyapunov_value, pose_error, step)
from .grasping import (GraspCandidate, Finger, SwitchState, initial_grasp,
                       locomo_score, select_grasp, to_world)
from .kinematics import reference_arm

KINDS = ("h_line", "v_line", "diagonal", "ellipse", "sine")

# Ready posture of the reference arm: tool pointing down above the table.
READY = np.array([0.0, 0.4, 0.0, 1.6, 0.0, 1.14, 0.0])
# READY with the upper-arm roll 0.07 rad short of its +170 deg limit.
NEAR_LIMIT = np.array([0.0, 0.4, 2.9, 1.6, 0.0, 1.14, 0.0])

_DIRECTIONS = {
    "h_line": (0.0, -1.0, 0.0),  # left to right, seen from the robot
    "v_line": (1.0, 0.0, 0.0),  # away from the robot
    "diagonal": (1.0 / math.sqrt(2.0), -1.0 / math.sqrt(2.0), 0.0),
    "sine": (0.0, -1.0, 0.0),
}

_STARTS = {
    "h_line": (0.50, 0.15, 0.10),
    "v_line": (0.40, 0.00, 0.10),
    "diagonal": (0.42, 0.12, 0.10),
    "ellipse": (0.50, 0.00, 0.10),
    "sine": (0.50, 0.15, 0.10),
}


@dataclass(frozen=True)
class TrajectoryScript:
    kind: str = "h_line"
    start_pose: np.ndarray = field(default_factory=lambda: dql.IDENTITY.copy())
    speed: float = 0.01
    length: float = 0.30
    radii: tuple = (0.15, 0.08)
    amplitude: float = 0.15
    frequency: float = 0.02
    with_rotation: bool = False
    rotation_rate: float = math.radians(5.0)
    rotation_axis: tuple = (0.0, 0.0, 1.0)
    direction: tuple = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown trajectory kind {self.kind!r}; expected one of {KINDS}")
        object.__setattr__(self, "start_pose", dql.check_pose(self.start_pose, "start pose", tol=1e-6))


def default_trajectory(kind, with_rotation=False, **overrides):
    start = dql.translation(_STARTS[kind])
    return TrajectoryScript(kind, start, with_rotation=with_rotation, **overrides)


def _offset(script, t):
    if script.kind == "ellipse":
        a, b = script.radii
        w = 2.0 * math.pi * script.frequency * t
        return np.array([a * math.cos(w), b * math.sin(w), 0.0])
    direction = np.asarray(script.direction or _DIRECTIONS[script.kind], dtype=float)
    s = min(script.speed * t, script.length)
    out = s * direction
    if script.kind == "sine":
        lateral = np.array([-direction[1], direction[0], 0.0])
        out = out + script.amplitude * math.sin(2.0 * math.pi * script.frequency * t) * lateral
    return out


def trajectory_pose(script, t):
    """Object pose at time t.

    Lines and the sine wave start at ``start_pose``; the ellipse is centred on
    it and starts at (+a, 0).  The rotating variant spins the object about its
    own axis at ``rotation_rate``.
    """
    if t < 0:
        raise ValueError("t must be >= 0")
    x = dql.dq_mul(dql.translation(_offset(script, t)), script.start_pose)
    if script.with_rotation:
        x = dql.dq_mul(x, dql.rotation(np.asarray(script.rotation_axis, float), script.rotation_rate * t))
    return dql.normalize_pose(x)


@dataclass(frozen=True)
class ObservationModel:
    sigma_t: float = 0.0
    sigma_r: float = 0.0
    seed: int = 0


def observe(true_pose, model, t):
    """Noisy copy of ``true_pose``; the noise depends only on (seed, t)."""
    if model.sigma_t == 0.0 and model.sigma_r == 0.0:
        return true_pose
    rng = np.random.default_rng([model.seed, int(round(t * 1e6))])
    dt = rng.normal(0.0, model.sigma_t, 3) if model.sigma_t > 0 else np.zeros(3)
    rv = rng.normal(0.0, model.sigma_r, 3) if model.sigma_r > 0 else np.zeros(3)
    r, tr = dql.pose_to_rt(true_pose)
    angle = float(np.linalg.norm(rv))
    if angle > 0.0:
        r = dql.quat_normalize(dql.quat_mul(dql.quat_from_axis_angle(rv / angle, angle), r))
    return dql.pose_from_rt(r, tr + dt)


@dataclass(frozen=True)
class EpisodeConfig:
    chain: object = field(default_factory=reference_arm)
    candidates: tuple = ()
    gains: ControllerGains = field(default_factory=lambda: ControllerGains(K=20.0, Ks=-0.05, lam=1e-3, dt=0.05))
    trajectory: TrajectoryScript = field(default_factory=lambda: default_trajectory("h_line"))
    observation: ObservationModel = field(default_factory=ObservationModel)
    k: int = 5
    delta: float = 0.05
    pregrasp_threshold: float = 1e-4
    grasp_translation_tol: float = 0.002
    grasp_rotation_tol: float = math.radians(0.5)
    max_duration: float = 60.0
    use_nullspace: bool = True
    use_rerank: bool = True
    q0: tuple = tuple(READY)
    max_joint_speed: float = 0.5
    ik_max_iter: int = 60
    hold_steps: int = 10
    name: str = ""

    def __post_init__(self):
        problems = []
        for f in ("pregrasp_threshold", "grasp_translation_tol", "grasp_rotation_tol", "max_duration"):
            if not getattr(self, f) > 0:
                problems.append(f"{f} must be > 0")
        if self.k < 1:
            problems.append("k must be >= 1")
        if self.delta < 0:
            problems.append("delta must be >= 0")
        if not self.max_joint_speed > 0:
            problems.append("max_joint_speed must be > 0")
        if len(self.q0) != self.chain.dof:
            problems.append(f"q0 needs {self.chain.dof} values")
        if problems:
            raise ValueError("; ".join(problems))
        object.__setattr__(self, "candidates", tuple(self.candidates))


@dataclass
class EpisodeResult:
    success: bool
    switches: int
    time_to_grasp: float
    telemetry: list
    clamp_events: int
    no_grasp_steps: int
    status: str = ""
    name: str = ""

    @property
    def no_grasp_intervals(self):
        """(start, end) times of stretches where no grasp was available."""
        out, start = [], None
        for row in self.telemetry:
            if row["no_grasp"] and start is None:
                start = row["t"]
            elif not row["no_grasp"] and start is not None:
                out.append((start, row["t"]))
                start = None
        if start is not None:
            out.append((start, self.telemetry[-1]["t"]))
        return out


def run_episode(config):
    """Pre-grasp / grasp reach against the scripted object.

    PRE-GRASP: the reference is the pre-grasp of the active grasp, re-ranked
    every step (unless disabled).  When the summed squared error
    coefficients |e - 1|^2 fall below ``pregrasp_threshold`` the episode moves
    to GRASP: the reference becomes the grasp pose of the same candidate and
    re-ranking stops.  Success is reaching the true grasp pose within the
    translation and rotation tolerances; the object then stops moving.
    """
    cfg = config
    chain, gains = cfg.chain, cfg.gains
    if not cfg.candidates:
        raise ValueError("episode has no grasp candidates")
    scores = {c.id: locomo_score(c) for c in cfg.candidates}
    cand_by_id = {c.id: c for c in cfg.candidates}
    n_steps = int(math.ceil(cfg.max_duration / gains.dt))

    x_o = trajectory_pose(cfg.trajectory, 0.0)
    state = ControllerState.start(chain, np.asarray(cfg.q0, float), dql.IDENTITY)
    switch = SwitchState(delta=cfg.delta)
    fixed_id = initial_grasp([to_world(c, x_o, scores[c.id]) for c in cfg.candidates]).id
    phase = "PRE-GRASP"
    reference = None
    telemetry = []
    clamp_events = no_grasp_steps = 0
    success, t_grasp, t_stop, stop_step = False, float("nan"), None, None

    for i in range(n_steps + cfg.hold_steps):
        t = i * gains.dt
        if t_stop is None:
            x_true = trajectory_pose(cfg.trajectory, t)
        else:
            x_true = trajectory_pose(cfg.trajectory, t_stop)
        x_obs = observe(x_true, cfg.observation, t)
        no_grasp = False
        if t_stop is not None:
            pass
        elif phase == "PRE-GRASP" and cfg.use_rerank:
            world = [to_world(c, x_obs, scores[c.id]) for c in cfg.candidates]
            switch, chosen = select_grasp(switch, state.x_c, world, chain, state.q,
                                          k=cfg.k, max_iter=cfg.ik_max_iter)
            if chosen is None:
                no_grasp = True
                no_grasp_steps += 1
            else:
                reference = chosen.world_pregrasp
        else:
            active = switch.active_id if cfg.use_rerank else fixed_id
            g = to_world(cand_by_id[active], x_obs, scores[active])
            reference = g.world_pregrasp if phase == "PRE-GRASP" else g.world_grasp
        if reference is None:
            reference = state.x_c
        state = state.retarget(reference)
        state, sample, _ = step(state, chain, gains, cfg.use_nullspace,
                                max_joint_step=cfg.max_joint_speed * gains.dt)
        clamp_events += state.clamped
        e = pose_error(state.x_c, reference)
        trans, rot = error_metrics(e)
        active = switch.active_id if cfg.use_rerank else fixed_id
        telemetry.append(dict(
            iteration=i, t=t, q=state.q.copy(), e=e, trans_err=trans, rot_err=rot,
            V=sample.V, V1=sample.V1, V2=sample.V2, clamped=state.clamped,
            object=x_true, active=active, phase=phase,
            upsilon=switch.upsilon.get(active, float("nan")) if cfg.use_rerank else float("nan"),
            no_grasp=no_grasp))
        if t_stop is not None:
            if i >= stop_step + cfg.hold_steps:
                break
            continue
        if phase == "PRE-GRASP" and active is not None and not no_grasp:
            if lyapunov_value(e).V < cfg.pregrasp_threshold:
                phase = "GRASP"
        elif phase == "GRASP":
            true_grasp = to_world(cand_by_id[active], x_true, scores[active]).world_grasp
            tt, rr = error_metrics(pose_error(state.x_c, true_grasp))
            if tt < cfg.grasp_translation_tol and rr < cfg.grasp_rotation_tol:
                success, t_grasp, t_stop, stop_step = True, t, t, i
        if t_stop is None and i + 1 >= n_steps:
            break

    status = "grasped" if success else "timeout"
    return EpisodeResult(success, switch.switches if cfg.use_rerank else None, t_grasp,
                         telemetry, clamp_events, no_grasp_steps, status, cfg.name)


VARIANTS = ("full", "no-nullspace", "no-rerank")


def variant_config(base, kind, with_rotation, variant):
    traj = default_trajectory(kind, with_rotation)
    name = f"{kind}{'+rot' if with_rotation else ''}/{variant}"
    return replace(base, trajectory=traj, name=name,
                   use_nullspace=variant != "no-nullspace",
                   use_rerank=variant != "no-rerank")


def ablation_grid(base, kinds=KINDS, rotations=(False, True), variants=VARIANTS):
    return [variant_config(base, k, r, v) for k in kinds for r in rotations for v in variants]


def _summary(result):
    return dict(name=result.name, success=result.success, switches=result.switches,
                time=result.time_to_grasp, clamps=result.clamp_events,
                no_grasp_steps=result.no_grasp_steps)


def _run_summary(cfg):
    try:
        return _summary(run_episode(cfg))
    except Exception as exc:  # a failed episode must not abort the grid
        return dict(name=cfg.name, success=False, switches=None, time=float("nan"),
                    clamps=0, no_grasp_steps=0, error=str(exc))


def ablation_suite(configs, jobs=1):
    """Run every config; rows come back in config order whatever ``jobs`` is."""
    configs = list(configs)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_run_summary, configs))
    return [_run_summary(cfg) for cfg in configs]


def format_table(rows):
    """Trajectory x variant table with Switch / Time / Success columns."""
    by_traj = {}
    for r in rows:
        traj, variant = r["name"].split("/")
        by_traj.setdefault(traj, {})[variant] = r
    variants = [v for v in VARIANTS if any(v in d for d in by_traj.values())]
    head = ["Trajectory"] + [f"{v}:{c}" for v in variants for c in ("Switch", "Time", "Success")]
    lines = [" | ".join(head)]
    for traj, d in by_traj.items():
        cells = [traj]
        for v in variants:
            r = d.get(v)
            if r is None:
                cells += ["", "", ""]
                continue
            sw = "NA" if r["switches"] is None else str(r["switches"])
            tm = "-" if not r["success"] else f"{r['time']:.2f}"
            cells += [sw, tm, "100" if r["success"] else "0"]
        lines.append(" | ".join(cells))
    return "\n".join(lines)


# -- bundled scene --------------------------------------------------------------


def _top_down(yaw):
    flip = dql.quat_from_axis_angle(np.array([1.0, 0.0, 0.0]), math.pi)
    spin = dql.quat_from_axis_angle(np.array([0.0, 0.0, 1.0]), yaw)
    return dql.quat_mul(spin, flip)


def block_grasps(offset=0.10, twin_gap=0.003):
    """Top-down grasps on a 0.2 m block lying along its x axis.

    Four stations along the block, two jaw orientations 180 deg apart, and a
    near-duplicate twin ``twin_gap`` away from each, as a grasp sampler would
    return.  Contact features make central stations score higher.
    """
    cands = []
    cid = 0
    for xs in (-0.06, -0.02, 0.02, 0.06):
        for yaw in (math.pi / 2, -math.pi / 2):
            for twin in (0.0, twin_gap):
                pose = dql.pose_from_rt(_top_down(yaw), [xs + twin, 0.0, 0.03])
                spread = 0.4 + 4.0 * abs(xs) + 2.0 * twin
                psi = np.array([[spread, 0.0], [0.0, spread], [0.5 * spread, 0.5 * spread]])
                fingers = [Finger(1.0, np.eye(2), psi), Finger(1.0, np.eye(2), 0.8 * psi)]
                cands.append(GraspCandidate(cid, pose, offset, fingers, gamma=1.0, ns=3.0))
                cid += 1
    return tuple(cands)


def default_config(**overrides):
    cfg = EpisodeConfig(candidates=block_grasps())
    return replace(cfg, **overrides)


def drift_out_of_reach_config(**overrides):
    """Block turned half a turn, drifting away from the robot at 1 cm/s.

    Its top-scored grasp starts on the far side at the edge of the workspace
    and leaves it; the near-end grasps stay reachable throughout.
    """
    start = dql.dq_mul(dql.translation([0.74, 0.0, 0.10]),
                       dql.rotation(np.array([0.0, 0.0, 1.0]), math.pi))
    traj = TrajectoryScript("v_line", start, speed=0.01, length=0.08)
    return default_config(trajectory=traj, max_duration=30.0, name="drift/full", **overrides)


def near_limit_config(**overrides):
    """h_line episode started from :data:`NEAR_LIMIT`."""
    return default_config(q0=tuple(NEAR_LIMIT), name="near-limit/full", **overrides)
