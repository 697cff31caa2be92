"""Dual quaternion pose servoing toward moving grasp targets.

Modules: ``dq`` (algebra), ``kinematics``, ``controller``, ``grasping``,
``vptree``, ``sim`` and ``io`` / ``cli`` for files and the command line.
"""

from .controller import ControllerGains, ControllerState, ik_feasible, regulate, step
from .dq import compose, dq_distance, pose_from_rt, pose_log, pose_to_rt
from .grasping import GraspCandidate, locomo_score, rerank, select_grasp, to_world
from .io import FormatError, parse_chain, parse_grasps, parse_scenario
from .kinematics import KinematicChain, forward_kinematics, geometric_jacobian, reference_arm
from .sim import EpisodeConfig, TrajectoryScript, ablation_suite, run_episode, trajectory_pose
from .vptree import VpTree, build_vptree, k_nearest

__all__ = [
    "ControllerGains", "ControllerState", "ik_feasible", "regulate", "step",
    "compose", "dq_distance", "pose_from_rt", "pose_log", "pose_to_rt",
    "GraspCandidate", "locomo_score", "rerank", "select_grasp", "to_world",
    "FormatError", "parse_chain", "parse_grasps", "parse_scenario",
    "KinematicChain", "forward_kinematics", "geometric_jacobian", "reference_arm",
    "EpisodeConfig", "TrajectoryScript", "ablation_suite", "run_episode", "trajectory_pose",
    "VpTree", "build_vptree", "k_nearest",
]
