"""Grasp scoring, nearest-grasp search and re-ranking with hysteresis."""

from dataclasses import dataclass, field, replace

import numpy as np

from . import dq as dql
from .controller import ik_feasible
from .vptree import VpTree

APPROACH_AXIS = np.array([0.0, 0.0, 1.0])
TIE_TOL = 1e-9


@dataclass(frozen=True)
class Finger:
    """Contact features of one finger: n feature vectors Psi_j of dimension d."""

    weight: float
    sigma: np.ndarray
    psi: np.ndarray

    def __post_init__(self):
        sigma = np.atleast_2d(np.asarray(self.sigma, dtype=float))
        psi = np.asarray(self.psi, dtype=float)
        if psi.ndim == 1:
            psi = psi.reshape(-1, sigma.shape[0])
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "psi", psi)

    @property
    def dim(self):
        return self.sigma.shape[0]


@dataclass(frozen=True)
class GraspCandidate:
    id: int
    grasp: np.ndarray
    pregrasp_offset: float = 0.10
    fingers: tuple = ()
    gamma: float = 1.0
    ns: float = 1.0
    precomputed_score: float = None

    def __post_init__(self):
        object.__setattr__(self, "grasp", dql.check_pose(self.grasp, f"grasp {self.id}", tol=1e-6))
        object.__setattr__(self, "fingers", tuple(self.fingers))
        problems = self.validate()
        if problems:
            raise ValueError("; ".join(problems))

    def validate(self):
        problems = []
        if not self.ns > 0:
            problems.append(f"candidate {self.id}: N_s must be > 0, got {self.ns}")
        if self.pregrasp_offset < 0:
            problems.append(f"candidate {self.id}: negative pregrasp offset")
        for i, f in enumerate(self.fingers):
            d = f.dim
            if f.sigma.shape != (d, d) or f.psi.shape[1] != d:
                problems.append(f"candidate {self.id}, finger {i}: dimension mismatch")
                continue
            if not np.allclose(f.sigma, f.sigma.T):
                problems.append(f"candidate {self.id}, finger {i}: covariance is not symmetric")
                continue
            try:
                np.linalg.cholesky(f.sigma)
            except np.linalg.LinAlgError:
                problems.append(f"candidate {self.id}, finger {i}: covariance is not positive definite")
        if self.precomputed_score is None and not self.fingers:
            problems.append(f"candidate {self.id}: needs finger features or a precomputed score")
        return problems

    @property
    def pregrasp(self):
        """Grasp pose backed off along the approach (tool z) axis."""
        back = dql.translation(-self.pregrasp_offset * APPROACH_AXIS)
        return dql.normalize_pose(dql.dq_mul(self.grasp, back))


@dataclass(frozen=True)
class RankedGrasp:
    id: int
    locomo_score: float
    world_grasp: np.ndarray
    world_pregrasp: np.ndarray


def contact_moment(finger, ns):
    """(1/N_s) sum_j ((2 pi)^d |Sigma|)^(1/2) N(Psi_j; 0, Sigma).

    The prefactor cancels the Gaussian normalisation, leaving a mean of
    exp(-Psi^T Sigma^-1 Psi / 2) terms.
    """
    L = np.linalg.cholesky(finger.sigma)
    z = np.linalg.solve(L, finger.psi.T)
    maha = np.sum(z * z, axis=0)
    return float(np.sum(np.exp(-0.5 * maha)) / ns)


def locomo_score(candidate):
    """gamma * prod_i C_i^omega_i over the fingers."""
    if candidate.precomputed_score is not None:
        return float(candidate.precomputed_score)
    score = candidate.gamma
    for f in candidate.fingers:
        score *= contact_moment(f, candidate.ns) ** f.weight
    return float(score)


def to_world(candidate, x_o, score=None):
    grasp = dql.normalize_pose(dql.dq_mul(x_o, candidate.grasp))
    pregrasp = dql.normalize_pose(dql.dq_mul(x_o, candidate.pregrasp))
    if score is None:
        score = locomo_score(candidate)
    return RankedGrasp(candidate.id, score, grasp, pregrasp)


def rerank(distances):
    """dq_i / (dq_max - dq_min); returns (values, degenerate).

    With dq_max == dq_min the ratio is undefined; all values are 0 and the
    degenerate flag is set.
    """
    d = np.asarray(distances, dtype=float)
    spread = float(d.max() - d.min()) if d.size else 0.0
    if spread == 0.0:
        return np.zeros_like(d), True
    return d / spread, False


@dataclass(frozen=True)
class SwitchState:
    """Active grasp bookkeeping for hysteresis switching."""

    delta: float = 0.05
    active_id: int = None
    active_upsilon: float = None
    switches: int = 0
    status: str = "init"
    feasible_ids: tuple = ()
    upsilon: dict = field(default_factory=dict)


def _best(ids, ups, scores):
    lo = min(ups[i] for i in ids)
    tied = [i for i in ids if ups[i] <= lo + TIE_TOL]
    return min(tied, key=lambda i: (-scores[i], i))


def select_grasp(state, gripper, grasps, chain, q, gains=None, k=5, tree=None,
                 feasible=None, max_iter=100):
    """One re-ranking round.

    Takes the k pre-grasps nearest to the gripper, drops those without an IK
    solution from q, and moves the active grasp to the best remaining one only
    when its re-rank value improves on the active one by at least delta (or
    the active one is no longer feasible).

    Returns (new state, chosen RankedGrasp or None when nothing is feasible).
    """
    if not grasps:
        raise ValueError("no grasp candidates")
    by_id = {g.id: g for g in grasps}
    if tree is None:
        tree = VpTree([g.world_pregrasp for g in grasps], [g.id for g in grasps])
    k = min(k, len(grasps))
    if feasible is None:
        def feasible(pose):
            return ik_feasible(chain, q, pose, gains, max_iter=max_iter)[0]

    nearest = tree.k_nearest(gripper, k)
    dist = dict((i, d) for i, d in nearest)
    values, degenerate = rerank([d for _, d in nearest])
    ups = dict(zip(dist, values.tolist()))
    spread = max(dist.values()) - min(dist.values())

    active = state.active_id
    if active is not None and active in by_id and active not in dist:
        d_act = dql.dq_distance(gripper, by_id[active].world_pregrasp)
        dist[active] = d_act
        ups[active] = 0.0 if degenerate else d_act / spread

    ok = {i: feasible(by_id[i].world_pregrasp) for i in dist}
    cands = [i for i, _ in nearest if ok[i]]
    active_ok = active is not None and ok.get(active, False)
    base = replace(state, feasible_ids=tuple(cands), upsilon=ups)

    if not cands and not active_ok:
        return replace(base, status="no-grasp"), None

    if not cands:
        return replace(base, status="keep", active_upsilon=ups[active]), by_id[active]

    scores = {i: by_id[i].locomo_score for i in dist}
    best = _best(cands, ups, scores)

    if active_ok:
        if degenerate or best == active or ups[active] - ups[best] < state.delta:
            return replace(base, status="keep", active_upsilon=ups[active]), by_id[active]
    switches = state.switches + (1 if active is not None and best != active else 0)
    return (replace(base, active_id=best, active_upsilon=ups[best], switches=switches,
                    status="switch" if active is not None else "init"),
            by_id[best])


def initial_grasp(grasps):
    """Top LoCoMo-ranked grasp (ties broken by id)."""
    return min(grasps, key=lambda g: (-g.locomo_score, g.id))


def pose_distance_table(gripper, grasps):
    return [(g.id, dql.dq_distance(gripper, g.world_pregrasp)) for g in grasps]


def score_table(candidates):
    return [(c.id, locomo_score(c)) for c in candidates]
