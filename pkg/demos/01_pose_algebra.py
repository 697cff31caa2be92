"""Poses as unit dual quaternions: compose, invert, take logs, measure distance."""

import math

import numpy as np

from dqvs import dq as D

# A pose is a rotation followed by a translation, packed into 8 numbers.
a = D.pose_from_rt(D.quat_from_axis_angle([0, 0, 1], math.pi / 2), [0.3, 0.0, 0.1])
b = D.pose_from_rt(D.quat_from_axis_angle([1, 0, 0], 0.4), [0.0, 0.2, 0.0])
print("a =", np.round(a, 4))

# Composition is a product, inversion is a conjugate.
ab = D.dq_mul(a, b)
r, t = D.pose_to_rt(ab)
print("a*b translation:", np.round(t, 4), "rotation angle:", round(math.degrees(D.rotation_angle(r)), 2), "deg")
print("a * conj(a) is the identity:", np.allclose(D.dq_mul(a, D.dq_conj(a)), D.IDENTITY))

# The log is half the screw motion: half the rotation vector and half the translation.
print("log(a) as (w; v):", np.round(D.vec6(D.pose_log(a)), 4))

# Distance between poses does not care which way round you ask, or about a shared left frame.
c = D.pose_from_rt(D.quat_from_axis_angle([0, 1, 0], 1.0), [1.0, -0.5, 0.2])
print("d(a,b) =", round(D.dq_distance(a, b), 6), " d(b,a) =", round(D.dq_distance(b, a), 6))
print("d(ca,cb) =", round(D.dq_distance(D.dq_mul(c, a), D.dq_mul(c, b)), 6))
