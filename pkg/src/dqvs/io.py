"""Text formats: chain, grasp and scenario files, and telemetry CSV.

Every format starts with a version header line.  Parsers collect all
problems they find and raise one :class:`FormatError` listing them, each
prefixed with the file and line or field it came from.
"""

import configparser
import csv
import math
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import dq as dql
from .controller import ControllerGains
from .grasping import Finger, GraspCandidate
from .kinematics import JointModel, KinematicChain
from .sim import KINDS, READY, EpisodeConfig, ObservationModel, TrajectoryScript, default_trajectory

CHAIN_HEADER = "dqvs-chain v1"
GRASPS_HEADER = "dqvs-grasps v1"
SCENARIO_HEADER = "dqvs-scenario v1"


class FormatError(ValueError):
    """A file failed to parse or validate; ``errors`` lists every problem."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("\n".join(self.errors))


def _read(path, header):
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise FormatError([f"{path}: cannot read file ({exc.strerror or exc})"]) from None
    lines = text.splitlines()
    first = lines[0].strip() if lines else ""
    if first != header:
        raise FormatError([f"{path}:1: expected header {header!r}, found {first!r}"])
    return path, lines


def _content(lines):
    """(line number, tokens) for non-blank, non-comment lines after the header."""
    for n, raw in enumerate(lines[1:], start=2):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield n, line.split()


def _floats(tokens, where, errors, count=None):
    try:
        vals = [float(t) for t in tokens]
    except ValueError:
        errors.append(f"{where}: expected numbers, got {' '.join(tokens)!r}")
        return None
    if count is not None and len(vals) != count:
        errors.append(f"{where}: expected {count} numbers, got {len(vals)}")
        return None
    if not all(math.isfinite(v) for v in vals):
        errors.append(f"{where}: non-finite value")
        return None
    return vals


# -- chain ---------------------------------------------------------------------


def parse_chain(path):
    """``joint ax ay az  <origin pose>  lower upper mean`` lines, then ``tool <pose>``."""
    path, lines = _read(path, CHAIN_HEADER)
    errors, joints, tool = [], [], None
    for n, tok in _content(lines):
        where = f"{path}:{n}"
        if tok[0] == "joint":
            vals = _floats(tok[1:], where, errors, 14)
            if vals is None:
                continue
            try:
                joints.append(JointModel(np.array(vals[:3]), dql.parse_pose(vals[3:11]),
                                         vals[11], vals[12], vals[13]))
            except ValueError as exc:
                errors.append(f"{where}: joint {len(joints) + 1}: {exc}")
        elif tok[0] == "tool":
            vals = _floats(tok[1:], where, errors, 8)
            if vals is not None:
                try:
                    tool = dql.parse_pose(vals)
                except ValueError as exc:
                    errors.append(f"{where}: tool: {exc}")
        else:
            errors.append(f"{where}: unknown record {tok[0]!r}")
    if not joints and not errors:
        errors.append(f"{path}: no joints defined")
    if errors:
        raise FormatError(errors)
    return KinematicChain(joints, dql.IDENTITY if tool is None else tool)


def format_chain(chain):
    out = [CHAIN_HEADER, "# joint axis(3) origin(8) lower upper mean   [radians, metres]"]
    for j in chain.joints:
        nums = list(j.axis) + list(j.origin) + [j.lower, j.upper, j.mean]
        out.append("joint " + " ".join(repr(float(v)) for v in nums))
    out.append("tool " + dql.format_pose(chain.tool))
    return "\n".join(out) + "\n"


# -- grasps --------------------------------------------------------------------

_GRASP_SCALARS = {"offset": "pregrasp_offset", "gamma": "gamma", "ns": "ns", "score": "precomputed_score"}


def parse_grasps(path):
    """Candidate blocks::

        candidate <id>
        grasp <8 floats>
        offset <m>
        gamma <g>
        ns <N_s>
        score <R>              (optional, bypasses the feature-based score)
        finger <omega> <d> <n>
        sigma <d*d floats>
        psi <d floats>         (n lines)
        end
    """
    path, lines = _read(path, GRASPS_HEADER)
    errors, cands = [], []
    cur, finger, seen = None, None, set()

    def close_finger(where):
        nonlocal finger
        if finger is None:
            return
        if len(finger["psi"]) != finger["n"]:
            errors.append(f"{where}: candidate {cur['id']}: finger declares {finger['n']} patches, "
                          f"found {len(finger['psi'])}")
        elif finger["sigma"] is None:
            errors.append(f"{where}: candidate {cur['id']}: finger without sigma")
        else:
            d = finger["d"]
            cur["fingers"].append(Finger(finger["w"], np.array(finger["sigma"]).reshape(d, d),
                                         np.array(finger["psi"]).reshape(-1, d)))
        finger = None

    for n, tok in _content(lines):
        where = f"{path}:{n}"
        key = tok[0]
        if key == "candidate":
            if cur is not None:
                errors.append(f"{where}: candidate {cur['id']} not closed with 'end'")
            try:
                cid = int(tok[1])
            except (IndexError, ValueError):
                errors.append(f"{where}: candidate needs an integer id")
                cid = None
            if cid in seen:
                errors.append(f"{where}: duplicate candidate id {cid}")
            seen.add(cid)
            cur = dict(id=cid, line=n, grasp=None, fingers=[], kw={})
            continue
        if cur is None:
            errors.append(f"{where}: {key!r} outside a candidate block")
            continue
        if key == "grasp":
            vals = _floats(tok[1:], where, errors, 8)
            if vals is not None:
                cur["grasp"] = vals
        elif key in _GRASP_SCALARS:
            vals = _floats(tok[1:], where, errors, 1)
            if vals is not None:
                cur["kw"][_GRASP_SCALARS[key]] = vals[0]
        elif key == "finger":
            close_finger(where)
            vals = _floats(tok[1:], where, errors, 3)
            if vals is not None:
                finger = dict(w=vals[0], d=int(vals[1]), n=int(vals[2]), sigma=None, psi=[])
                if finger["d"] < 1 or finger["n"] < 0:
                    errors.append(f"{where}: candidate {cur['id']}: bad finger dimensions")
                    finger = None
        elif key in ("sigma", "psi"):
            if finger is None:
                errors.append(f"{where}: candidate {cur['id']}: {key} outside a finger block")
                continue
            d = finger["d"]
            vals = _floats(tok[1:], where, errors, d * d if key == "sigma" else d)
            if vals is not None:
                if key == "sigma":
                    finger["sigma"] = vals
                else:
                    finger["psi"].append(vals)
        elif key == "end":
            close_finger(where)
            if cur["grasp"] is None:
                errors.append(f"{where}: candidate {cur['id']}: missing grasp pose")
            elif cur["id"] is not None:
                try:
                    pose = dql.parse_pose(cur["grasp"])
                    cands.append(GraspCandidate(cur["id"], pose, fingers=tuple(cur["fingers"]), **cur["kw"]))
                except ValueError as exc:
                    errors.extend(f"{path}:{cur['line']}: {m}" for m in str(exc).split("; "))
            cur = None
        else:
            errors.append(f"{where}: unknown record {key!r}")
    if cur is not None:
        errors.append(f"{path}: candidate {cur['id']} not closed with 'end'")
    if not cands and not errors:
        errors.append(f"{path}: no candidates")
    if errors:
        raise FormatError(errors)
    return tuple(cands)


def format_grasps(candidates):
    out = [GRASPS_HEADER]
    for c in candidates:
        out += [f"candidate {c.id}", "grasp " + dql.format_pose(c.grasp),
                f"offset {c.pregrasp_offset!r}", f"gamma {c.gamma!r}", f"ns {c.ns!r}"]
        if c.precomputed_score is not None:
            out.append(f"score {c.precomputed_score!r}")
        for f in c.fingers:
            out.append(f"finger {f.weight!r} {f.dim} {len(f.psi)}")
            out.append("sigma " + " ".join(repr(float(v)) for v in f.sigma.ravel()))
            out += ["psi " + " ".join(repr(float(v)) for v in row) for row in f.psi]
        out.append("end")
    return "\n".join(out) + "\n"


# -- scenario ------------------------------------------------------------------

_SECTIONS = {
    "files": {"chain", "grasps"},
    "gains": {"k", "ks", "lambda", "dt", "max_joint_speed"},
    "trajectory": {"kind", "start", "speed", "length", "radii", "amplitude", "frequency",
                   "rotation", "rotation_rate", "rotation_axis", "direction"},
    "observation": {"sigma_t", "sigma_r", "seed"},
    "selection": {"k", "delta", "pregrasp_offset", "pregrasp_threshold",
                  "grasp_translation_tol", "grasp_rotation_tol", "ik_max_iter"},
    "flags": {"nullspace", "rerank"},
    "episode": {"max_duration", "q0", "hold_steps"},
    "convergence": {"target_q", "steps"},
}


class _Fields:
    """Typed access to one INI section that records errors instead of raising."""

    def __init__(self, parser, section, path, errors):
        self.sec = parser[section] if parser.has_section(section) else {}
        self.name, self.path, self.errors = section, path, errors

    def _err(self, key, msg):
        self.errors.append(f"{self.path}: [{self.name}] {key}: {msg}")

    def get(self, key, conv, default=None):
        if key not in self.sec:
            return default
        raw = self.sec[key].strip()
        try:
            return conv(raw)
        except (ValueError, TypeError) as exc:
            self._err(key, f"cannot parse {raw!r} ({exc})")
            return default

    def flag(self, key, default):
        def conv(raw):
            low = raw.lower()
            if low in ("on", "true", "yes", "1"):
                return True
            if low in ("off", "false", "no", "0"):
                return False
            raise ValueError("expected on/off")
        return self.get(key, conv, default)


def _vector(n=None):
    def conv(raw):
        vals = [float(v) for v in raw.replace(",", " ").split()]
        if n is not None and len(vals) != n:
            raise ValueError(f"expected {n} numbers, got {len(vals)}")
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("non-finite value")
        return tuple(vals)
    return conv


def _resolve(base, name):
    p = Path(name)
    return p if p.is_absolute() else base / p


def parse_scenario(path):
    """Scenario file -> (EpisodeConfig, extras dict).

    ``extras`` carries the resolved chain/grasps paths and the optional
    ``[convergence]`` settings.  Unset keys take the EpisodeConfig defaults.
    """
    path, lines = _read(path, SCENARIO_HEADER)
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str.lower
    errors = []
    try:
        parser.read_string("\n".join(lines[1:]), source=str(path))
    except configparser.Error as exc:
        raise FormatError([f"{path}: {exc}"]) from None
    for sec in parser.sections():
        if sec not in _SECTIONS:
            errors.append(f"{path}: unknown section [{sec}]")
            continue
        for key in parser[sec]:
            if key not in _SECTIONS[sec]:
                errors.append(f"{path}: [{sec}] unknown field {key!r}")
    F = {s: _Fields(parser, s, path, errors) for s in _SECTIONS}
    base_dir = path.parent
    defaults = EpisodeConfig.__dataclass_fields__

    chain_path = F["files"].get("chain", str)
    grasps_path = F["files"].get("grasps", str)
    if chain_path is None:
        errors.append(f"{path}: [files] chain: required")
    if grasps_path is None:
        errors.append(f"{path}: [files] grasps: required")
    chain = cands = None
    for label, rel, parse in (("chain", chain_path, parse_chain), ("grasps", grasps_path, parse_grasps)):
        if rel is None:
            continue
        try:
            obj = parse(_resolve(base_dir, rel))
        except FormatError as exc:
            errors.extend(exc.errors)
            continue
        if label == "chain":
            chain = obj
        else:
            cands = obj

    g = F["gains"]
    gain_kw = dict(K=g.get("k", float, 20.0), Ks=g.get("ks", float, -0.05),
                   lam=g.get("lambda", float, 1e-3), dt=g.get("dt", float, 0.05))
    gains = None
    try:
        gains = ControllerGains(**gain_kw)
    except ValueError as exc:
        errors.extend(f"{path}: [gains] {m}" for m in str(exc).split("; "))

    t = F["trajectory"]
    kind = t.get("kind", str, "h_line")
    traj = None
    if kind not in KINDS:
        errors.append(f"{path}: [trajectory] kind: unknown {kind!r}; expected one of {', '.join(KINDS)}")
    else:
        kw = dict(with_rotation=t.flag("rotation", False))
        for key, conv in (("speed", float), ("length", float), ("amplitude", float),
                          ("frequency", float), ("rotation_rate", float),
                          ("radii", _vector(2)), ("rotation_axis", _vector(3)), ("direction", _vector(3))):
            val = t.get(key, conv)
            if val is not None:
                kw[key] = val
        start = t.get("start", _vector(8))
        for key in ("speed", "length", "amplitude", "frequency"):
            if key in kw and kw[key] < 0:
                errors.append(f"{path}: [trajectory] {key}: must be >= 0")
        try:
            if start is not None:
                traj = TrajectoryScript(kind, dql.parse_pose(start), **kw)
            else:
                traj = default_trajectory(kind, **kw)
        except ValueError as exc:
            errors.append(f"{path}: [trajectory] {exc}")

    o = F["observation"]
    obs = ObservationModel(o.get("sigma_t", float, 0.0), o.get("sigma_r", float, 0.0), o.get("seed", int, 0))
    if obs.sigma_t < 0 or obs.sigma_r < 0:
        errors.append(f"{path}: [observation] noise std must be >= 0")

    s = F["selection"]
    ep = F["episode"]
    q0 = ep.get("q0", _vector(), tuple(READY))
    if chain is not None and len(q0) != chain.dof:
        errors.append(f"{path}: [episode] q0: expected {chain.dof} values, got {len(q0)}")
    offset = s.get("pregrasp_offset", float)
    if offset is not None and offset < 0:
        errors.append(f"{path}: [selection] pregrasp_offset: must be >= 0")
    if cands is not None and offset is not None and offset >= 0:
        cands = tuple(replace(c, pregrasp_offset=offset) for c in cands)

    kw = dict(k=s.get("k", int, 5), delta=s.get("delta", float, 0.05),
              pregrasp_threshold=s.get("pregrasp_threshold", float, defaults["pregrasp_threshold"].default),
              grasp_translation_tol=s.get("grasp_translation_tol", float,
                                          defaults["grasp_translation_tol"].default),
              grasp_rotation_tol=s.get("grasp_rotation_tol", float, defaults["grasp_rotation_tol"].default),
              ik_max_iter=s.get("ik_max_iter", int, defaults["ik_max_iter"].default),
              max_duration=ep.get("max_duration", float, defaults["max_duration"].default),
              hold_steps=ep.get("hold_steps", int, defaults["hold_steps"].default),
              max_joint_speed=g.get("max_joint_speed", float, defaults["max_joint_speed"].default),
              use_nullspace=F["flags"].flag("nullspace", True),
              use_rerank=F["flags"].flag("rerank", True))
    for key in ("pregrasp_threshold", "grasp_translation_tol", "grasp_rotation_tol",
                "max_duration", "max_joint_speed"):
        if not kw[key] > 0:
            errors.append(f"{path}: {key}: must be > 0, got {kw[key]}")
    if kw["k"] < 1:
        errors.append(f"{path}: [selection] k: must be >= 1")
    if kw["delta"] < 0:
        errors.append(f"{path}: [selection] delta: must be >= 0")

    c = F["convergence"]
    extras = dict(chain_path=chain_path and _resolve(base_dir, chain_path),
                  grasps_path=grasps_path and _resolve(base_dir, grasps_path),
                  target_q=c.get("target_q", _vector()), steps=c.get("steps", int, 500))
    if extras["target_q"] is not None and chain is not None and len(extras["target_q"]) != chain.dof:
        errors.append(f"{path}: [convergence] target_q: expected {chain.dof} values")

    if errors:
        raise FormatError(errors)
    config = EpisodeConfig(chain=chain, candidates=cands, gains=gains, trajectory=traj,
                           observation=obs, q0=tuple(q0), name=path.stem, **kw)
    return config, extras


# -- telemetry CSV ---------------------------------------------------------------


def telemetry_columns(dof):
    return (["iteration", "t"] + [f"q{i}" for i in range(dof)] + [f"e{i}" for i in range(8)]
            + ["trans_err", "rot_err", "V", "V1", "V2", "clamped"]
            + [f"obj{i}" for i in range(8)] + ["active", "phase", "upsilon", "no_grasp"])


def _num(v):
    return repr(float(v))


def write_telemetry(path, rows, dof):
    """One row per step; floats written with repr so they read back exactly."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(telemetry_columns(dof))
        for r in rows:
            w.writerow([r["iteration"], _num(r["t"])] + [_num(v) for v in r["q"]]
                       + [_num(v) for v in r["e"]]
                       + [_num(r[k]) for k in ("trans_err", "rot_err", "V", "V1", "V2")]
                       + [int(bool(r["clamped"]))] + [_num(v) for v in r["object"]]
                       + ["" if r["active"] is None else r["active"], r["phase"], _num(r["upsilon"]),
                          int(bool(r["no_grasp"]))])


def read_telemetry(path):
    """Inverse of :func:`write_telemetry`."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        dof = sum(1 for h in header if h.startswith("q"))
        if header != telemetry_columns(dof):
            raise FormatError([f"{path}:1: unexpected telemetry header"])
        rows = []
        for rec in reader:
            d = dict(zip(header, rec))
            rows.append(dict(
                iteration=int(d["iteration"]), t=float(d["t"]),
                q=np.array([float(d[f"q{i}"]) for i in range(dof)]),
                e=np.array([float(d[f"e{i}"]) for i in range(8)]),
                trans_err=float(d["trans_err"]), rot_err=float(d["rot_err"]),
                V=float(d["V"]), V1=float(d["V1"]), V2=float(d["V2"]),
                clamped=bool(int(d["clamped"])),
                object=np.array([float(d[f"obj{i}"]) for i in range(8)]),
                active=None if d["active"] == "" else int(d["active"]), phase=d["phase"],
                upsilon=float(d["upsilon"]), no_grasp=bool(int(d["no_grasp"]))))
    return rows


CONVERGENCE_COLUMNS = ["iteration", "trans_err", "rot_err", "V", "V1", "V2", "clamped", "damped"]


def write_convergence(path, rows):
    from .controller import error_metrics

    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CONVERGENCE_COLUMNS)
        for r in rows:
            trans, rot = error_metrics(r["e"])
            lv = r["lyapunov"]
            w.writerow([r["iteration"], _num(trans), _num(rot), _num(lv.V), _num(lv.V1), _num(lv.V2),
                        int(r["clamped"]), int(r["damped"])])
