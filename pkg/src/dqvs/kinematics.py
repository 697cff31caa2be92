"""Serial-chain kinematics of revolute manipulators on dual quaternions."""

import math
from dataclasses import dataclass, field

import numpy as np

from . import dq as dql


@dataclass(frozen=True)
class JointModel:
    """Revolute joint: fixed ``origin`` from the previous frame, then rotation about ``axis``."""

    axis: np.ndarray
    origin: np.ndarray = field(default_factory=lambda: dql.IDENTITY.copy())
    lower: float = -math.pi
    upper: float = math.pi
    mean: float = None

    def __post_init__(self):
        axis = np.asarray(self.axis, dtype=float)
        if axis.shape != (3,) or abs(np.linalg.norm(axis) - 1.0) > 1e-9:
            raise ValueError(f"joint axis must be a unit 3-vector, got {axis}")
        object.__setattr__(self, "axis", axis)
        object.__setattr__(self, "origin", dql.check_pose(self.origin, "joint origin"))
        if not self.lower < self.upper:
            raise ValueError(f"joint limits must satisfy lower < upper, got [{self.lower}, {self.upper}]")
        if self.mean is None:
            object.__setattr__(self, "mean", 0.5 * (self.lower + self.upper))
        if not self.lower <= self.mean <= self.upper:
            raise ValueError(f"joint mean {self.mean} outside [{self.lower}, {self.upper}]")


@dataclass(frozen=True)
class KinematicChain:
    joints: tuple
    tool: np.ndarray = field(default_factory=lambda: dql.IDENTITY.copy())

    def __post_init__(self):
        if len(self.joints) < 1:
            raise ValueError("a chain needs at least one joint")
        object.__setattr__(self, "joints", tuple(self.joints))
        object.__setattr__(self, "tool", dql.check_pose(self.tool, "tool"))

    @property
    def dof(self):
        return len(self.joints)

    @property
    def lower(self):
        return np.array([j.lower for j in self.joints])

    @property
    def upper(self):
        return np.array([j.upper for j in self.joints])

    @property
    def mean(self):
        return np.array([j.mean for j in self.joints])

    def within_limits(self, q, tol=0.0):
        q = np.asarray(q, dtype=float)
        return bool(np.all(q >= self.lower - tol) and np.all(q <= self.upper + tol))

    def clamp(self, q):
        return np.clip(q, self.lower, self.upper)


def reference_arm():
    """Bundled 7-DoF anthropomorphic arm.

    Axes alternate z/y, limits alternate +-170 deg / +-120 deg. Shoulder at
    0.34 m, upper arm and forearm 0.40 m each, flange 0.126 m.
    """
    z = np.array([0.0, 0.0, 1.0])
    y = np.array([0.0, 1.0, 0.0])
    up = lambda h: dql.translation([0.0, 0.0, h])  # noqa: E731
    wide, narrow = math.radians(170.0), math.radians(120.0)
    offsets = [0.0, 0.34, 0.20, 0.20, 0.20, 0.20, 0.0]
    joints = []
    for i, h in enumerate(offsets):
        lim = wide if i % 2 == 0 else narrow
        joints.append(JointModel(z if i % 2 == 0 else y, up(h), -lim, lim))
    return KinematicChain(joints, up(0.126))


def _check_q(chain, q):
    q = np.asarray(q, dtype=float)
    if q.shape != (chain.dof,):
        raise ValueError(f"expected {chain.dof} joint values, got shape {q.shape}")
    return q


def _joint_rotation(axis, angle):
    s = math.sin(angle / 2.0)
    return np.array([math.cos(angle / 2.0), axis[0] * s, axis[1] * s, axis[2] * s,
                     0.0, 0.0, 0.0, 0.0])


def _frames(chain, q):
    """World pose of every joint frame (before its rotation) and of the tool."""
    x = dql.IDENTITY
    frames = []
    for i, (joint, angle) in enumerate(zip(chain.joints, q)):
        x = dql.dq_mul(x, joint.origin)
        frames.append(x)
        x = dql.dq_mul(x, _joint_rotation(joint.axis, angle))
        if (i + 1) % 5 == 0:
            x = dql.normalize_pose(x)
    x = dql.normalize_pose(dql.dq_mul(x, chain.tool))
    return frames, x


def forward_kinematics(chain, q):
    """End-effector pose at joint configuration q."""
    q = _check_q(chain, q)
    return _frames(chain, q)[1]


def _axes_and_points(chain, frames):
    W = np.array([dql.quat_rotate(f[:4], j.axis) for j, f in zip(chain.joints, frames)])
    P = np.array([dql.translation_of(f) for f in frames])
    return W, P


def geometric_jacobian(chain, q, reference="inertial"):
    """6 x N Jacobian in (angular; linear) order.

    With ``reference="inertial"`` (default) the columns map joint rates to
    vec6 of the inertial twist w + eps (p_dot + p x w), the twist used by the
    controller.  With ``reference="point"`` the linear rows give the velocity
    of the end-effector origin instead.
    """
    if reference not in ("inertial", "point"):
        raise ValueError(f"unknown Jacobian reference {reference!r}")
    q = _check_q(chain, q)
    frames, x = _frames(chain, q)
    W, P = _axes_and_points(chain, frames)
    if reference == "inertial":
        lin = np.cross(P, W)
    else:
        lin = np.cross(W, dql.translation_of(x) - P)
    return np.vstack([W.T, lin.T])


def fk_and_jacobian(chain, q):
    """Forward kinematics and inertial Jacobian from one pass over the chain."""
    q = _check_q(chain, q)
    frames, x = _frames(chain, q)
    W, P = _axes_and_points(chain, frames)
    return x, np.vstack([W.T, np.cross(P, W).T])


def damped_pinv(J, lam):
    """J^T (J J^T + lam I)^-1."""
    if not lam > 0:
        raise ValueError(f"damping must be positive, got {lam}")
    J = np.asarray(J, dtype=float)
    A = J @ J.T + lam * np.eye(J.shape[0])
    return np.linalg.solve(A, J).T


def null_space_projector(J, lam):
    """I - J_dagger J for the damped pseudo-inverse."""
    J = np.asarray(J, dtype=float)
    return np.eye(J.shape[1]) - damped_pinv(J, lam) @ J


def finite_difference_error(chain, q, step=1e-6):
    """Max abs gap between the Jacobian and a numerical twist, over all columns.

    The reference twist for column i comes from the twist kinematics
    x_dot = (1/2) w x, i.e. w = 2 x_dot x*, with x_dot from a central
    difference of the dual quaternion coefficients.
    """
    q = _check_q(chain, q)
    J = geometric_jacobian(chain, q)
    x0 = forward_kinematics(chain, q)
    worst = 0.0
    for i in range(chain.dof):
        h = np.zeros(chain.dof)
        h[i] = step
        xp = forward_kinematics(chain, q + h)
        xm = forward_kinematics(chain, q - h)
        if np.dot(xp, x0) < 0.0:
            xp = -xp
        if np.dot(xm, x0) < 0.0:
            xm = -xm
        w = 2.0 * dql.dq_mul((xp - xm) / (2.0 * step), dql.dq_conj(x0))
        w[0] = w[4] = 0.0
        worst = max(worst, float(np.max(np.abs(dql.vec6(w) - J[:, i]))))
    return worst
