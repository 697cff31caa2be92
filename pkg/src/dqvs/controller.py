"""Joint-space pose regulation with the dual quaternion logarithm.

One iteration:

    e      = x_c* x_d                       (pose error, canonical sign)
    w_body = log(e)
    w      = Ad(x_c) w_body                 (twist in the base frame)
    q'     = q + K dt J_dagger vec6(w) + Ks P (q - q_mean)

K dt is the effective step size of the discrete loop; the last term is the
joint-limit secondary task projected through P = I - J_dagger J.
"""

import math
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

from . import dq as dql
from .kinematics import damped_pinv, fk_and_jacobian

# sigma_min^2 below this multiple of lambda counts as a damping-dominated step
DAMPING_RATIO = 10.0


@dataclass(frozen=True)
class ControllerGains:
    K: float = 2.0
    Ks: float = -0.05
    lam: float = 1e-3
    dt: float = 0.05

    def __post_init__(self):
        errors = []
        if not self.K > 0:
            errors.append(f"K must be > 0, got {self.K}")
        if not self.Ks <= 0:
            errors.append(f"Ks must be <= 0, got {self.Ks}")
        if not self.lam > 0:
            errors.append(f"lambda must be > 0, got {self.lam}")
        if not self.dt > 0:
            errors.append(f"dt must be > 0, got {self.dt}")
        if errors:
            raise ValueError("; ".join(errors))

    @property
    def step(self):
        return self.K * self.dt


@dataclass(frozen=True)
class ControllerState:
    q: np.ndarray
    x_c: np.ndarray
    x_d: np.ndarray
    iteration: int = 0
    clamped: bool = False
    damped: bool = False
    J: np.ndarray = None

    @classmethod
    def start(cls, chain, q, x_d):
        q = np.asarray(q, dtype=float)
        x_c, J = fk_and_jacobian(chain, q)
        return cls(q, x_c, dql.check_pose(x_d, "reference"), J=J)

    def jacobian(self, chain):
        if self.J is None:
            return fk_and_jacobian(chain, self.q)[1]
        return self.J

    def retarget(self, x_d):
        return replace(self, x_d=dql.check_pose(x_d, "reference"))


class LyapunovSample(NamedTuple):
    V: float
    V1: float
    V2: float


def pose_error(x_c, x_d):
    return dql.canonicalize(dql.dq_mul(dql.dq_conj(x_c), x_d))


def control_twist(e):
    """Body-frame twist that drives e to identity."""
    return dql.pose_log(e)


def twist_to_base(x_c, w_body):
    return dql.adjoint(x_c, w_body)


def lyapunov_value(e):
    e = dql.canonicalize(e)
    V1 = max(2.0 * (1.0 - float(e[0])), 0.0)
    V2 = float(np.dot(e[4:], e[4:]))
    return LyapunovSample(V1 + V2, V1, V2)


def error_metrics(e):
    """(translation error in m, rotation error in rad) of a pose error."""
    return float(np.linalg.norm(dql.translation_of(e))), dql.rotation_angle(e[:4])


def _primary_step(x_c, J, x_d, gains):
    e = pose_error(x_c, x_d)
    w = twist_to_base(x_c, control_twist(e))
    return gains.step * (damped_pinv(J, gains.lam) @ dql.vec6(w)), w


def joint_update(state, chain, gains):
    """q_{k+1} = q_k + K dt J_dagger vec6(Ad(x_c) log(e)); no clamping."""
    dq_, _ = _primary_step(state.x_c, state.jacobian(chain), state.x_d, gains)
    return state.q + dq_


def nullspace_term(q, J, chain, gains):
    """Ks P (q - q_mean): projected gradient of 0.5 sum (q - q_mean)^2."""
    if gains.Ks == 0.0:
        return np.zeros_like(q)
    P = np.eye(len(q)) - damped_pinv(J, gains.lam) @ J
    return gains.Ks * (P @ (q - chain.mean))


def joint_update_nullspace(state, chain, gains):
    q_next = joint_update(state, chain, gains)
    if gains.Ks == 0.0:
        return q_next
    return q_next + nullspace_term(state.q, state.jacobian(chain), chain, gains)


def step(state, chain, gains, use_nullspace=True, max_joint_step=None):
    """One control iteration; returns (new state, Lyapunov sample, base twist).

    ``max_joint_step`` (rad) scales the whole update down when any joint would
    move further, keeping its direction.  Commanded joints are clamped into
    the limits; the new state records whether a clamp happened and whether
    the Jacobian was close enough to singular for damping to dominate.
    """
    J = state.jacobian(chain)
    dq_, w = _primary_step(state.x_c, J, state.x_d, gains)
    if use_nullspace and gains.Ks != 0.0:
        dq_ = dq_ + nullspace_term(state.q, J, chain, gains)
    if max_joint_step is not None:
        peak = float(np.max(np.abs(dq_)))
        if peak > max_joint_step:
            dq_ = dq_ * (max_joint_step / peak)
    q_next = state.q + dq_
    q_clamped = chain.clamp(q_next)
    clamped = bool(np.any(q_clamped != q_next))
    sigma_min = float(np.linalg.svd(J, compute_uv=False)[-1])
    damped = sigma_min ** 2 < DAMPING_RATIO * gains.lam
    x_c, J_next = fk_and_jacobian(chain, q_clamped)
    new = ControllerState(q_clamped, x_c, state.x_d, state.iteration + 1, clamped, damped, J_next)
    return new, lyapunov_value(pose_error(x_c, state.x_d)), w


def ik_feasible(chain, q_start, target, gains=None, max_iter=300, tol=1e-3):
    """Run the regulation loop toward ``target``; report (feasible, final q).

    Feasible means the final dq_distance to the target is below ``tol`` and
    the final configuration respects the joint limits.
    """
    if gains is None:
        gains = ControllerGains(K=1.0, Ks=0.0, lam=1e-3, dt=1.0)
    q = chain.clamp(np.asarray(q_start, dtype=float))
    target = dql.canonicalize(target)
    for _ in range(max_iter + 1):
        x_c, J = fk_and_jacobian(chain, q)
        if dql.dq_distance(x_c, target) < tol:
            return chain.within_limits(q), q
        dq_, _ = _primary_step(x_c, J, target, gains)
        q = chain.clamp(q + dq_)
    return False, q


def regulate(chain, q0, x_d, gains, n_steps=500, use_nullspace=False):
    """Static-target run; returns per-step records of errors and V."""
    state = ControllerState.start(chain, q0, x_d)
    e0 = pose_error(state.x_c, x_d)
    rows = [dict(iteration=0, q=state.q, e=e0, lyapunov=lyapunov_value(e0),
                 clamped=False, damped=False)]
    for _ in range(n_steps):
        state, sample, _ = step(state, chain, gains, use_nullspace)
        rows.append(dict(iteration=state.iteration, q=state.q,
                         e=pose_error(state.x_c, x_d), lyapunov=sample,
                         clamped=state.clamped, damped=state.damped))
    return rows


def rotation_deg(e):
    return math.degrees(error_metrics(e)[1])
