"""Quaternion and dual quaternion algebra.

Everything here works on plain numpy arrays:

* quaternion: shape (4,), ordered (eta, mu1, mu2, mu3)
* dual quaternion: shape (8,), primary part in [0:4], dual part in [4:8]
* pose: unit dual quaternion with canonical sign (primary eta >= 0)
* twist: pure dual quaternion (both real parts zero)

Functions never mutate their inputs.
"""

import math

import numpy as np

IDENTITY = np.array([1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0])

UNIT_TOL = 1e-9
RENORM_EVERY = 10
_SMALL_ANGLE = 1e-7


def _qmul(a0, a1, a2, a3, b0, b1, b2, b3):
    return (
        a0 * b0 - a1 * b1 - a2 * b2 - a3 * b3,
        a0 * b1 + a1 * b0 + a2 * b3 - a3 * b2,
        a0 * b2 - a1 * b3 + a2 * b0 + a3 * b1,
        a0 * b3 + a1 * b2 - a2 * b1 + a3 * b0,
    )


# -- quaternions --------------------------------------------------------------


def quat(eta=0.0, mu=(0.0, 0.0, 0.0)):
    return np.array([eta, mu[0], mu[1], mu[2]], dtype=float)


def pure(v):
    """Embed a 3-vector as a pure quaternion."""
    return np.array([0.0, v[0], v[1], v[2]])


def quat_mul(a, b):
    """Hamilton product."""
    return np.array(_qmul(*np.asarray(a, float).tolist(), *np.asarray(b, float).tolist()))


def quat_conj(a):
    a = np.asarray(a, dtype=float)
    return np.array([a[0], -a[1], -a[2], -a[3]])


def quat_norm(a):
    return float(np.linalg.norm(a))


def quat_normalize(a):
    a = np.asarray(a, dtype=float)
    n = np.linalg.norm(a)
    if n == 0.0:
        raise ValueError("cannot normalize a zero quaternion")
    return a / n


def quat_from_axis_angle(axis, phi):
    """Unit quaternion cos(phi/2) + n sin(phi/2) for a unit rotation axis n."""
    axis = np.asarray(axis, dtype=float)
    if axis.shape != (3,) or abs(np.linalg.norm(axis) - 1.0) > UNIT_TOL:
        raise ValueError(f"rotation axis must be a unit 3-vector, got {axis}")
    s = math.sin(phi / 2.0)
    return quat_normalize([math.cos(phi / 2.0), axis[0] * s, axis[1] * s, axis[2] * s])


def _check_pure(a, name):
    a = np.asarray(a, dtype=float)
    if a.shape != (4,) or a[0] != 0.0:
        raise ValueError(f"{name} must be a pure quaternion (zero real part), got {a}")
    return a


def quat_inner(a, b):
    """Inner product of pure quaternions, -(ab + ba)/2."""
    a = _check_pure(a, "a")
    b = _check_pure(b, "b")
    return float(-(quat_mul(a, b) + quat_mul(b, a))[0] / 2.0)


def quat_cross(a, b):
    """Vector product of pure quaternions, (ab - ba)/2."""
    a = _check_pure(a, "a")
    b = _check_pure(b, "b")
    c = (quat_mul(a, b) - quat_mul(b, a)) / 2.0
    c[0] = 0.0
    return c


def quat_rotate(r, v):
    """Rotate a 3-vector by the unit quaternion r (r v r*)."""
    r0, r1, r2, r3 = np.asarray(r, float).tolist()
    t = _qmul(r0, r1, r2, r3, 0.0, v[0], v[1], v[2])
    out = _qmul(*t, r0, -r1, -r2, -r3)
    return np.array(out[1:])


def quat_to_matrix(r):
    w, x, y, z = quat_normalize(r)
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def rotation_angle(r):
    """Rotation angle in [0, pi] of a unit quaternion, sign-invariant."""
    r = np.asarray(r, dtype=float)
    return 2.0 * math.atan2(float(np.linalg.norm(r[1:4])), abs(float(r[0])))


# -- dual quaternions ---------------------------------------------------------


def dq(primary, dual=(0.0, 0.0, 0.0, 0.0)):
    return np.concatenate([np.asarray(primary, float), np.asarray(dual, float)])


def primary(x):
    return np.asarray(x, dtype=float)[:4]


def dual(x):
    return np.asarray(x, dtype=float)[4:]


def dq_mul(a, b):
    """Dual quaternion product with eps^2 = 0."""
    a0, a1, a2, a3, a4, a5, a6, a7 = np.asarray(a, float).tolist()
    b0, b1, b2, b3, b4, b5, b6, b7 = np.asarray(b, float).tolist()
    p = _qmul(a0, a1, a2, a3, b0, b1, b2, b3)
    d1 = _qmul(a0, a1, a2, a3, b4, b5, b6, b7)
    d2 = _qmul(a4, a5, a6, a7, b0, b1, b2, b3)
    return np.array([p[0], p[1], p[2], p[3],
                     d1[0] + d2[0], d1[1] + d2[1], d1[2] + d2[2], d1[3] + d2[3]])


def dq_conj(x):
    x = np.asarray(x, dtype=float)
    return np.array([x[0], -x[1], -x[2], -x[3], x[4], -x[5], -x[6], -x[7]])


dq_conjugate = dq_conj


def canonicalize(x):
    """Pick the representative of {x, -x} whose primary real part is positive.

    When that part is zero the first nonzero imaginary component of the
    primary part decides.
    """
    x = np.asarray(x, dtype=float)
    lead = x[0]
    if lead == 0.0:
        for c in x[1:4]:
            if c != 0.0:
                lead = c
                break
    return -x if lead < 0.0 else x.copy()


def normalize_pose(x):
    """Project onto the unit dual quaternions and canonicalize.

    The primary part is scaled to unit norm and the dual part is made
    orthogonal to it.
    """
    x = np.asarray(x, dtype=float)
    n = np.linalg.norm(x[:4])
    if n == 0.0:
        raise ValueError("primary part is zero; not a rigid displacement")
    p = x[:4] / n
    d = x[4:] / n
    d = d - np.dot(p, d) * p
    return canonicalize(np.concatenate([p, d]))


def is_pose(x, tol=UNIT_TOL):
    x = np.asarray(x, dtype=float)
    if x.shape != (8,) or not np.all(np.isfinite(x)):
        return False
    return (abs(np.linalg.norm(x[:4]) - 1.0) <= tol
            and abs(np.dot(x[:4], x[4:])) <= tol)


def check_pose(x, name="pose", tol=UNIT_TOL):
    if not is_pose(x, tol):
        raise ValueError(f"{name} is not a unit dual quaternion: {np.asarray(x)}")
    return canonicalize(x)


def compose(*poses):
    """Left-to-right product of poses, renormalized every few products."""
    out = IDENTITY
    for i, x in enumerate(poses, start=1):
        out = dq_mul(out, x)
        if i % RENORM_EVERY == 0:
            out = normalize_pose(out)
    return normalize_pose(out)


def pose_from_rt(rotation, translation):
    """Rigid displacement r + eps (1/2) t r.

    ``translation`` may be a 3-vector or a pure quaternion, in meters.
    """
    r = np.asarray(rotation, dtype=float)
    if r.shape != (4,) or abs(np.linalg.norm(r) - 1.0) > UNIT_TOL:
        raise ValueError(f"rotation must be a unit quaternion, got {r}")
    t = np.asarray(translation, dtype=float)
    if t.shape == (4,):
        t = _check_pure(t, "translation")[1:]
    elif t.shape != (3,):
        raise ValueError(f"translation must have 3 components, got shape {t.shape}")
    d = 0.5 * np.array(_qmul(0.0, t[0], t[1], t[2], *r.tolist()))
    return canonicalize(np.concatenate([r, d]))


def pose_to_rt(x):
    """Inverse of :func:`pose_from_rt`: (unit quaternion, translation 3-vector)."""
    x = np.asarray(x, dtype=float)
    return x[:4].copy(), translation_of(x)


def translation_of(x):
    """World translation t = 2 x_D x_P*."""
    x0, x1, x2, x3, x4, x5, x6, x7 = np.asarray(x, float).tolist()
    t = _qmul(x4, x5, x6, x7, x0, -x1, -x2, -x3)
    return np.array([2.0 * t[1], 2.0 * t[2], 2.0 * t[3]])


def translation(t):
    return pose_from_rt(IDENTITY[:4], t)


def rotation(axis, phi):
    return pose_from_rt(quat_from_axis_angle(axis, phi), np.zeros(3))


def pose_to_matrix(x):
    T = np.eye(4)
    T[:3, :3] = quat_to_matrix(x[:4])
    T[:3, 3] = translation_of(x)
    return T


# -- twists -------------------------------------------------------------------


def twist(angular=(0.0, 0.0, 0.0), linear=(0.0, 0.0, 0.0)):
    return np.array([0.0, *angular, 0.0, *linear], dtype=float)


def is_pure_dq(y):
    y = np.asarray(y, dtype=float)
    return y.shape == (8,) and y[0] == 0.0 and y[4] == 0.0


def vec6(y):
    """Pure dual quaternion -> (angular; linear) 6-vector."""
    y = np.asarray(y, dtype=float)
    if not is_pure_dq(y):
        raise ValueError(f"vec6 needs a pure dual quaternion, got {y}")
    return np.concatenate([y[1:4], y[5:8]])


def unvec6(v):
    v = np.asarray(v, dtype=float)
    if v.shape != (6,):
        raise ValueError(f"expected a 6-vector, got shape {v.shape}")
    return twist(v[:3], v[3:])


def pose_log(x):
    """Logarithm phi n/2 + eps p/2, with p the translation of x."""
    x = canonicalize(np.asarray(x, dtype=float))
    eta = x[0]
    mu = x[1:4]
    s = float(np.linalg.norm(mu))
    if s < _SMALL_ANGLE:
        # sin(phi/2) ~ phi/2
        half = mu.copy()
    else:
        phi = 2.0 * math.atan2(s, eta)
        half = mu * (0.5 * phi / s)
    return twist(half, 0.5 * translation_of(x))


def adjoint(x, y):
    """Frame change of a twist: x y x*."""
    out = dq_mul(dq_mul(x, y), dq_conj(x))
    out[0] = 0.0
    out[4] = 0.0
    return out


def dq_distance(a, b):
    """Euclidean R^8 norm of 1 - a* b.

    The product a* b is canonicalized first, so the value does not depend on
    which of the two double-cover representatives is passed.
    """
    a0, a1, a2, a3, a4, a5, a6, a7 = np.asarray(a, float).tolist()
    b0, b1, b2, b3, b4, b5, b6, b7 = np.asarray(b, float).tolist()
    p = _qmul(a0, -a1, -a2, -a3, b0, b1, b2, b3)
    d1 = _qmul(a0, -a1, -a2, -a3, b4, b5, b6, b7)
    d2 = _qmul(a4, -a5, -a6, -a7, b0, b1, b2, b3)
    lead = p[0]
    if lead == 0.0:
        lead = next((c for c in p[1:] if c != 0.0), 0.0)
    s = -1.0 if lead < 0.0 else 1.0
    acc = (1.0 - s * p[0]) ** 2 + p[1] ** 2 + p[2] ** 2 + p[3] ** 2
    for u, v in zip(d1, d2):
        acc += (u + v) ** 2
    return math.sqrt(acc)


# -- text form ----------------------------------------------------------------


def format_pose(x):
    return " ".join(repr(float(c)) for c in np.asarray(x, dtype=float))


def parse_pose(tokens):
    vals = [float(t) for t in (tokens.split() if isinstance(tokens, str) else tokens)]
    if len(vals) != 8:
        raise ValueError(f"a pose needs 8 numbers, got {len(vals)}")
    check_pose(np.array(vals), tol=1e-6)
    return normalize_pose(np.array(vals))
