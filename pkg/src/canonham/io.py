"""Problem documents and result documents.

Complex matrices are nested lists of ``[re, im]`` pairs, row-major.  Result
documents are written with sorted keys and shortest round-trip float
formatting, so the same input and seed always produce the same bytes.
"""

import copy
import hashlib
import json
import math

import numpy as np

from .dynamics import BipartiteSystem
from .errors import CanonError
from .operators import as_matrix, hermitian
from .superop import Superoperator, from_lindblad

SCHEMA_VERSION = "1"
TASKS = ("canonicalize", "trajectory", "perturb", "verify", "haar-check")

DEFAULT_TOLERANCES = {
    "hpta": 1e-10,
    "rank": 1e-10,
    "markov": 1e-9,
    "cond_threshold": 1e8,
    "reassembly": 1e-9,
    "minimality_rtol": 1e-8,
    "orthogonality": 1e-10,
    "projection": 1e-10,
    "gauge": 1e-10,
    "traceless": 1e-10,
    "presentation": 1e-10,
    "trace_distance": 1e-6,
    "master_equation_cond": 1e3,
    "l2_consistency": 1e-7,
    "h2_consistency": 1e-8,
    "fourth_moment": 1e-12,
    "mc_sigma": 4.0,
}


class ProblemError(CanonError, ValueError):
    """The problem document is malformed or inconsistent."""


def decode_matrix(obj, name="matrix"):
    """Parse rows of ``[re, im]`` pairs into a complex array."""
    try:
        arr = np.asarray(obj, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ProblemError(f"{name}: entries must be numeric [re, im] pairs") from exc
    if arr.ndim != 3 or arr.shape[-1] != 2:
        raise ProblemError(f"{name}: expected rows of [re, im] pairs, got array of shape {arr.shape}")
    m = arr[..., 0] + 1j * arr[..., 1]
    try:
        return as_matrix(m)
    except ValueError as exc:
        raise ProblemError(f"{name}: {exc}") from exc


def encode_matrix(m):
    m = np.asarray(m, complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def encode_float(x):
    x = float(x)
    return x if math.isfinite(x) else None


def parse_override(text):
    """``"a.b=value"`` -> ``(["a", "b"], value)``; the value is read as JSON when possible."""
    if "=" not in text:
        raise ProblemError(f"override {text!r} is not of the form key=value")
    key, raw = text.split("=", 1)
    path = [k for k in key.strip().split(".") if k]
    if not path:
        raise ProblemError(f"override {text!r} has an empty key")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return path, value


def apply_overrides(doc, overrides):
    doc = copy.deepcopy(doc)
    for text in overrides:
        path, value = parse_override(text)
        node = doc
        for key in path[:-1]:
            node = node.setdefault(key, {})
            if not isinstance(node, dict):
                raise ProblemError(f"override {text!r} descends into a non-object")
        node[path[-1]] = value
    return doc


def load_problem(path, overrides=(), seed=None):
    """Read, override and validate a problem file.

    Returns:
        ``(doc, raw_bytes)`` with tolerances filled in from the defaults.
    """
    with open(path, "rb") as fh:
        raw = fh.read()
    try:
        doc = json.loads(raw)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ProblemError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(doc, dict):
        raise ProblemError("problem document must be a JSON object")
    doc = apply_overrides(doc, overrides)
    if seed is not None:
        doc["seed"] = int(seed)
    validate_problem(doc)
    return doc, raw


def validate_problem(doc):
    if str(doc.get("schema_version")) != SCHEMA_VERSION:
        raise ProblemError(f"unsupported schema_version {doc.get('schema_version')!r}; expected {SCHEMA_VERSION!r}")
    task = doc.get("task")
    if not isinstance(task, dict) or task.get("name") not in TASKS:
        raise ProblemError(f"task.name must be one of {', '.join(TASKS)}")
    tols = doc.get("tolerances", {})
    if not isinstance(tols, dict):
        raise ProblemError("tolerances must be an object")
    unknown = set(tols) - set(DEFAULT_TOLERANCES)
    if unknown:
        raise ProblemError(f"unknown tolerance keys: {', '.join(sorted(unknown))}")
    for key, val in tols.items():
        if not isinstance(val, (int, float)) or isinstance(val, bool) or not val > 0:
            raise ProblemError(f"tolerance {key} must be a positive number")
    doc["tolerances"] = {**DEFAULT_TOLERANCES, **tols}
    doc.setdefault("seed", 0)
    if not isinstance(doc["seed"], int) or doc["seed"] < 0:
        raise ProblemError("seed must be a non-negative integer")
    if task["name"] != "haar-check":
        build_problem(doc)


def build_problem(doc):
    """The problem object: a :class:`Superoperator` (with its declared presentation) or a system.

    Returns:
        ``("generator", s, presentation)`` where ``presentation`` is
        ``(h, terms)`` or None, or ``("bipartite", system, None)``.
    """
    prob = doc.get("problem")
    if not isinstance(prob, dict):
        raise ProblemError("problem block is missing")
    kind = prob.get("kind")
    if kind == "generator":
        if "superoperator" in prob:
            return "generator", Superoperator(decode_matrix(prob["superoperator"], "superoperator")), None
        if "hamiltonian" not in prob:
            raise ProblemError("generator problems need 'superoperator' or 'hamiltonian' (+ 'jumps')")
        h = _hermitian(prob["hamiltonian"], "hamiltonian")
        terms = []
        for j, jump in enumerate(prob.get("jumps", [])):
            if not isinstance(jump, dict) or "rate" not in jump or "operator" not in jump:
                raise ProblemError(f"jumps[{j}] needs 'rate' and 'operator'")
            op = decode_matrix(jump["operator"], f"jumps[{j}].operator")
            if op.shape != h.shape:
                raise ProblemError(f"jumps[{j}].operator has shape {op.shape}, hamiltonian {h.shape}")
            terms.append((float(jump["rate"]), op))
        return "generator", from_lindblad(h, terms), (h, terms)
    if kind == "bipartite":
        try:
            d_a, d_b = int(prob["d_A"]), int(prob["d_B"])
            system = BipartiteSystem(
                d_a,
                d_b,
                _hermitian(prob.get("h_A", _zeros(d_a)), "h_A"),
                _hermitian(prob.get("h_B", _zeros(d_b)), "h_B"),
                _hermitian(prob["v"], "v"),
                float(prob.get("lambda", 1.0)),
                decode_matrix(prob["rho_B0"], "rho_B0"),
            )
        except KeyError as exc:
            raise ProblemError(f"bipartite problem is missing {exc}") from exc
        return "bipartite", system, None
    raise ProblemError(f"problem.kind must be 'generator' or 'bipartite', got {kind!r}")


def _zeros(d):
    return [[[0.0, 0.0]] * d for _ in range(d)]


def _hermitian(obj, name):
    m = decode_matrix(obj, name)
    # NotHermitianError carries the residual; the CLI maps it to a validation failure
    return hermitian(m)


def sha256_hex(raw):
    return hashlib.sha256(raw).hexdigest()


def dump_result(doc):
    return json.dumps(doc, sort_keys=True, indent=2, allow_nan=False) + "\n"
