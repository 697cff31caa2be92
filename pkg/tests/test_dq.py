import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dqvs import dq as D
from oracles import T_to_dq, dq_to_T, quat_to_R, random_T, rotvec, sign_equal

I, J, K = D.quat(0, (1, 0, 0)), D.quat(0, (0, 1, 0)), D.quat(0, (0, 0, 1))

unit_floats = st.floats(-1.0, 1.0, allow_nan=False)


@st.composite
def poses(draw):
    v = np.array([draw(st.floats(-1, 1)) for _ in range(4)])
    if np.linalg.norm(v) < 1e-3:
        v = np.array([1.0, 0, 0, 0])
    t = [draw(st.floats(-2, 2)) for _ in range(3)]
    return D.pose_from_rt(v / np.linalg.norm(v), t)


def rand_pose(rng, scale=1.0):
    return T_to_dq(random_T(rng, scale))


# -- quaternions ----------------------------------------------------------------


def test_quat_identity_and_basis():
    b = np.array([0.3, -0.1, 0.7, 0.2])
    assert np.array_equal(D.quat_mul(D.quat(1.0), b), b)
    assert np.allclose(D.quat_mul(I, J), K)
    assert np.allclose(D.quat_mul(J, K), I)
    assert np.allclose(D.quat_mul(D.quat_mul(I, J), K), [-1, 0, 0, 0])


def test_quat_mul_matches_matrix_composition():
    rng = np.random.default_rng(1)
    for _ in range(50):
        a = D.quat_normalize(rng.normal(size=4))
        b = D.quat_normalize(rng.normal(size=4))
        ab = D.quat_mul(a, b)
        assert abs(np.linalg.norm(ab) - 1) < 1e-12
        assert np.allclose(quat_to_R(ab), quat_to_R(a) @ quat_to_R(b), atol=1e-12)


def test_axis_angle_examples():
    assert np.allclose(D.quat_from_axis_angle([0.6, 0.8, 0.0], 0.0), [1, 0, 0, 0])
    assert np.allclose(D.quat_from_axis_angle([0, 0, 1], math.pi), [0, 0, 0, 1], atol=1e-15)
    q = D.quat_from_axis_angle([1, 0, 0], math.pi / 2)
    assert np.allclose(q, [math.cos(math.pi / 4), math.sin(math.pi / 4), 0, 0])
    assert np.allclose(rotvec(quat_to_R(q)), [math.pi / 2, 0, 0])


def test_axis_angle_rejects_non_unit_axis():
    with pytest.raises(ValueError):
        D.quat_from_axis_angle([1.0, 1.0, 0.0], 0.3)


def test_inner_and_cross():
    assert D.quat_inner(I, I) == pytest.approx(1.0)
    assert np.allclose(D.quat_cross(I, J), K)
    rng = np.random.default_rng(2)
    for _ in range(20):
        a, b = rng.normal(size=3), rng.normal(size=3)
        assert D.quat_inner(D.pure(a), D.pure(b)) == pytest.approx(np.dot(a, b), abs=1e-12)
        assert np.allclose(D.quat_cross(D.pure(a), D.pure(b))[1:], np.cross(a, b), atol=1e-12)
    with pytest.raises(ValueError):
        D.quat_inner(D.quat(1.0, (1, 0, 0)), I)
    with pytest.raises(ValueError):
        D.quat_cross(I, D.quat(0.5))


# -- dual quaternions -------------------------------------------------------------


def test_dq_mul_identity_and_inverse():
    rng = np.random.default_rng(3)
    x = rand_pose(rng)
    assert np.allclose(D.dq_mul(D.IDENTITY, x), x)
    assert np.allclose(D.dq_mul(x, D.dq_conjugate(x)), D.IDENTITY, atol=1e-12)


def test_dq_mul_matches_homogeneous_product():
    rng = np.random.default_rng(4)
    for _ in range(50):
        Ta, Tb = random_T(rng), random_T(rng)
        ab = D.dq_mul(T_to_dq(Ta), T_to_dq(Tb))
        assert np.allclose(dq_to_T(ab), Ta @ Tb, atol=1e-12)


def test_conjugate():
    assert np.array_equal(D.dq_conj(D.IDENTITY), D.IDENTITY)
    y = D.twist((1, 2, 3), (4, 5, 6))
    assert np.array_equal(D.dq_conj(y), -y)
    rng = np.random.default_rng(5)
    T = random_T(rng)
    assert np.allclose(dq_to_T(D.dq_conj(T_to_dq(T))), np.linalg.inv(T), atol=1e-12)


def test_pose_from_rt_examples():
    assert np.array_equal(D.pose_from_rt([1, 0, 0, 0], [0, 0, 0]), D.IDENTITY)
    assert np.allclose(D.pose_from_rt([1, 0, 0, 0], [1, 0, 0]), [1, 0, 0, 0, 0, 0.5, 0, 0])
    assert np.allclose(D.pose_from_rt([1, 0, 0, 0], D.pure([1, 0, 0])), [1, 0, 0, 0, 0, 0.5, 0, 0])


def test_pose_rt_round_trip_and_matrix():
    rng = np.random.default_rng(6)
    for _ in range(50):
        T = random_T(rng, 2.0)
        x = D.pose_from_rt(T_to_dq(T)[:4], T[:3, 3])
        assert np.allclose(dq_to_T(x), T, atol=1e-12)
        r, t = D.pose_to_rt(x)
        assert np.allclose(t, T[:3, 3], atol=1e-12)
        assert np.allclose(D.pose_from_rt(r, t), x, atol=1e-12)


def test_pose_to_rt_examples():
    r, t = D.pose_to_rt(np.array([1, 0, 0, 0, 0, 0.5, 0, 0.0]))
    assert np.array_equal(r, [1, 0, 0, 0]) and np.allclose(t, [1, 0, 0])


def test_canonical_sign():
    x = D.pose_from_rt(D.quat_from_axis_angle([0, 0, 1], 1.0), [0.1, 0.2, 0.3])
    assert np.array_equal(D.canonicalize(-x), x)
    half_turn = np.array([0.0, 0.0, -1.0, 0.0, 0, 0, 0, 0])
    assert D.canonicalize(half_turn)[2] == 1.0


def test_log_examples():
    assert np.array_equal(D.pose_log(D.IDENTITY), np.zeros(8))
    assert np.allclose(D.pose_log(D.translation([0, 0, 2])), D.twist((0, 0, 0), (0, 0, 1)))
    rot = D.rotation(np.array([0, 1.0, 0]), 0.8)
    assert np.allclose(D.pose_log(rot), D.twist((0, 0.4, 0), (0, 0, 0)))


def test_log_matches_matrix_log():
    rng = np.random.default_rng(7)
    for _ in range(100):
        T = random_T(rng)
        w = D.pose_log(T_to_dq(T))
        assert np.allclose(w[1:4], rotvec(T[:3, :3]) / 2, atol=1e-10)
        assert np.allclose(w[5:], T[:3, 3] / 2, atol=1e-12)


def test_log_near_zero_and_half_turn():
    tiny = D.rotation(np.array([0, 0, 1.0]), 1e-9)
    assert np.allclose(D.pose_log(tiny)[1:4], [0, 0, 0.5e-9], rtol=1e-6, atol=0)
    half = D.rotation(np.array([1.0, 0, 0]), math.pi)
    assert np.allclose(D.pose_log(half)[1:4], [math.pi / 2, 0, 0])


def test_adjoint():
    rng = np.random.default_rng(8)
    y = D.twist(rng.normal(size=3), rng.normal(size=3))
    assert np.allclose(D.adjoint(D.IDENTITY, y), y)
    R = D.rotation(np.array([0, 0, 1.0]), 0.7)
    w = D.twist((1.0, 0.0, 0.0))
    out = D.adjoint(R, w)
    assert np.allclose(out[1:4], quat_to_R(R[:4]) @ [1, 0, 0]) and np.allclose(out[4:], 0)
    x = rand_pose(rng)
    back = D.adjoint(D.dq_conj(x), D.adjoint(x, y))
    assert np.allclose(back, y, atol=1e-12)
    assert D.is_pure_dq(D.adjoint(x, y))


def test_vec6():
    assert np.array_equal(D.vec6(np.zeros(8)), np.zeros(6))
    assert np.array_equal(D.vec6(D.twist((1, 2, 3), (4, 5, 6))), [1, 2, 3, 4, 5, 6])
    v = np.random.default_rng(9).normal(size=6)
    assert np.array_equal(D.vec6(D.unvec6(v)), v)
    with pytest.raises(ValueError):
        D.vec6(D.IDENTITY)


def test_distance_examples():
    x = rand_pose(np.random.default_rng(10))
    assert D.dq_distance(x, x) == pytest.approx(0.0, abs=1e-15)
    assert D.dq_distance(D.IDENTITY, D.translation([1, 0, 0])) == pytest.approx(0.5)


def _distance_by_expansion(a, b):
    # 1 - a* b written out component by component
    ap, ad = a[:4] * [1, -1, -1, -1], a[4:] * [1, -1, -1, -1]
    bp, bd = b[:4], b[4:]

    def hm(p, q):
        return np.array([p[0] * q[0] - p[1] * q[1] - p[2] * q[2] - p[3] * q[3],
                         p[0] * q[1] + p[1] * q[0] + p[2] * q[3] - p[3] * q[2],
                         p[0] * q[2] - p[1] * q[3] + p[2] * q[0] + p[3] * q[1],
                         p[0] * q[3] + p[1] * q[2] - p[2] * q[1] + p[3] * q[0]])
    prod = np.concatenate([hm(ap, bp), hm(ap, bd) + hm(ad, bp)])
    if prod[0] < 0:
        prod = -prod
    return np.linalg.norm(np.array([1.0, 0, 0, 0, 0, 0, 0, 0]) - prod)


def test_distance_matches_expansion():
    rng = np.random.default_rng(11)
    for _ in range(200):
        a, b = rand_pose(rng), rand_pose(rng)
        assert D.dq_distance(a, b) == pytest.approx(_distance_by_expansion(a, b), abs=1e-12)


def test_distance_is_sign_blind():
    rng = np.random.default_rng(12)
    a, b = rand_pose(rng), rand_pose(rng)
    assert D.dq_distance(a, -b) == pytest.approx(D.dq_distance(a, b), abs=1e-14)


def test_renormalized_chain_stays_unit():
    rng = np.random.default_rng(13)
    xs = [rand_pose(rng) for _ in range(100)]
    x = D.compose(*xs)
    assert abs(np.linalg.norm(x[:4]) - 1) < 1e-8 and abs(np.dot(x[:4], x[4:])) < 1e-8
    T = np.eye(4)
    for p in xs:
        T = T @ dq_to_T(p)
    assert np.allclose(dq_to_T(x), T, atol=1e-8)


def test_pose_text_round_trip():
    x = rand_pose(np.random.default_rng(14))
    assert np.array_equal(D.parse_pose(D.format_pose(x)), D.normalize_pose(x))
    with pytest.raises(ValueError):
        D.parse_pose("1 0 0")
    with pytest.raises(ValueError):
        D.parse_pose("2 0 0 0 0 0 0 0")


@settings(max_examples=200, deadline=None)
@given(poses(), poses())
def test_property_distance_symmetric_and_nonnegative(a, b):
    d = D.dq_distance(a, b)
    assert d >= 0
    assert abs(d - D.dq_distance(b, a)) < 1e-12


@settings(max_examples=200, deadline=None)
@given(poses(), poses(), poses())
def test_property_triangle_inequality(a, b, c):
    assert D.dq_distance(a, c) <= D.dq_distance(a, b) + D.dq_distance(b, c) + 1e-12


@settings(max_examples=200, deadline=None)
@given(poses(), poses(), poses())
def test_property_left_invariance(g, a, b):
    d1 = D.dq_distance(D.dq_mul(g, a), D.dq_mul(g, b))
    assert d1 == pytest.approx(D.dq_distance(a, b), abs=1e-9)


@settings(max_examples=200, deadline=None)
@given(poses())
def test_property_log_dual_is_half_translation(x):
    assert np.allclose(D.pose_log(x)[5:], D.translation_of(x) / 2, atol=1e-12)
    assert D.is_pure_dq(D.pose_log(x))
