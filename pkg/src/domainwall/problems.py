"""Benchmark DQMs (assignment, QAP, TSP) and exhaustive oracles.

All generators mark their collision penalties as DQM constraints so that
:func:`domainwall.encoders.decode` can tell feasible permutations apart from
merely well-encoded bitstrings.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError, ParameterError, ResourceError
from .model import Dqm, Qubo

__all__ = [
    "AssignmentSpec",
    "TspSpec",
    "unweighted_assignment",
    "weighted_qap",
    "tsp",
    "tour_length",
    "qap_cost",
    "brute_force_minimize",
    "brute_force_qubo",
    "problem_from_dict",
    "problem_to_dict",
    "load_problem",
    "MAX_DQM_STATES",
    "MAX_QUBO_BITS",
]

MAX_DQM_STATES = 10**7
MAX_QUBO_BITS = 24


def _square(name: str, mat, m: int | None = None) -> np.ndarray:
    a = np.asarray(mat, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DomainError(f"{name} must be a square matrix, got shape {a.shape}")
    if m is not None and a.shape[0] != m:
        raise DomainError(f"{name} must be {m}x{m}, got {a.shape}")
    if not np.allclose(a, a.T, rtol=0, atol=0):
        raise DomainError(f"{name} must be symmetric")
    if np.any(np.diag(a) != 0):
        raise DomainError(f"{name} must have a zero diagonal")
    return a


@dataclass(frozen=True)
class AssignmentSpec:
    """Facility/location assignment of size ``m``.

    Leave ``flows`` and ``distances`` unset for the unweighted problem.
    ``kappa`` of ``None`` picks a constraint weight above the largest
    possible total cost.
    """

    m: int
    flows: np.ndarray | None = None
    distances: np.ndarray | None = None
    kappa: float | None = None

    def __post_init__(self):
        _check_size(self.m)
        if (self.flows is None) != (self.distances is None):
            raise DomainError("flows and distances must be given together")
        if self.flows is not None:
            object.__setattr__(self, "flows", _square("flows", self.flows, self.m))
            object.__setattr__(self, "distances", _square("distances", self.distances, self.m))


def _check_size(m) -> None:
    if int(m) != m or m < 2:
        raise ParameterError(f"problem size m must be an integer >= 2, got {m}")


@dataclass(frozen=True)
class TspSpec:
    """Travelling salesperson on ``m`` cities; ``base_dist`` adds a depot."""

    m: int
    dist: np.ndarray
    base_dist: np.ndarray | None = None
    kappa: float | None = None

    def __post_init__(self):
        _check_size(self.m)
        d = _square("dist", self.dist, self.m)
        off = d[~np.eye(self.m, dtype=bool)]
        if off.size and off.min() <= 0:
            raise DomainError("all distances between distinct cities must be positive")
        object.__setattr__(self, "dist", d)
        if self.base_dist is not None:
            base = np.asarray(self.base_dist, dtype=float)
            if base.shape != (self.m,):
                raise DomainError(f"base_dist must have length {self.m}")
            if base.min() < 0:
                raise DomainError("base distances must be non-negative")
            object.__setattr__(self, "base_dist", base)


def _collision_terms(m: int, kappa: float) -> dict:
    return {(i, j, a, a): kappa for i in range(m) for j in range(i) for a in range(m)}


def unweighted_assignment(m: int, kappa: float = 1.0) -> Dqm:
    """``m`` variables of size ``m`` penalized by ``kappa`` whenever two collide."""
    if m < 2:
        raise ParameterError(f"assignment needs m >= 2, got {m}")
    if not kappa > 0:
        raise ParameterError("kappa must be positive")
    terms = _collision_terms(m, kappa)
    return Dqm.from_terms(m, m, terms, constraints=terms.keys())


def _default_kappa(upper_cost: float) -> float:
    # weights are non-negative, so 0 bounds the cost from below
    return 1.0 + upper_cost


def weighted_qap(spec: AssignmentSpec) -> Dqm:
    """QAP: variable ``i`` is the facility placed at location ``i``.

    The cost of an assignment is ``sum_{i>j} f[a_i, a_j] * d[i, j]``.
    """
    if spec.flows is None:
        raise DomainError("weighted_qap needs flows and distances")
    m = spec.m
    f, d = spec.flows, spec.distances
    if f.min() < 0 or d.min() < 0:
        raise DomainError("flows and distances must be non-negative")
    if spec.kappa is None:
        lower = np.tril(d, -1)
        kappa = _default_kappa(float(lower.sum() * f.max()))
    else:
        kappa = float(spec.kappa)
    if not kappa > 0:
        raise ParameterError("kappa must be positive")
    terms = _collision_terms(m, kappa)
    cons = list(terms)
    for i in range(m):
        for j in range(i):
            for a in range(m):
                for b in range(m):
                    if a != b and f[a, b] * d[i, j] != 0:
                        terms[(i, j, a, b)] = f[a, b] * d[i, j]
    return Dqm.from_terms(m, m, terms, constraints=cons)


def tsp(spec: TspSpec) -> Dqm:
    """TSP with variable ``i`` the city visited ``i``-th.

    Consecutive legs cost ``dist[a, b]``; with a base, the first and last
    cities also pay their distance to the base.
    """
    m = spec.m
    if m < 2:
        raise ParameterError("a tour needs at least two cities")
    d = spec.dist
    if spec.kappa is None:
        upper = (m - 1) * d.max()
        if spec.base_dist is not None:
            upper += 2 * spec.base_dist.max()
        kappa = _default_kappa(float(upper))
    else:
        kappa = float(spec.kappa)
    if not kappa > 0:
        raise ParameterError("kappa must be positive")
    terms = _collision_terms(m, kappa)
    cons = list(terms)
    for i in range(m - 1):
        for a in range(m):
            for b in range(m):
                if a != b:
                    terms[(i + 1, i, b, a)] = terms.get((i + 1, i, b, a), 0.0) + d[a, b]
    if spec.base_dist is not None:
        for a in range(m):
            for i in (0, m - 1):
                terms[(i, i, a, a)] = terms.get((i, i, a, a), 0.0) + spec.base_dist[a]
    return Dqm.from_terms(m, m, terms, constraints=cons)


def tour_length(spec: TspSpec, order: Sequence[int]) -> float:
    """Open-path length of visiting ``order``, plus depot legs if any."""
    order = list(order)
    total = sum(spec.dist[a, b] for a, b in zip(order, order[1:]))
    if spec.base_dist is not None:
        total += spec.base_dist[order[0]] + spec.base_dist[order[-1]]
    return float(total)


def qap_cost(spec: AssignmentSpec, assignment: Sequence[int]) -> float:
    a = list(assignment)
    if spec.flows is None:
        return 0.0
    return float(sum(spec.flows[a[i], a[j]] * spec.distances[i, j] for i in range(spec.m) for j in range(i)))


def brute_force_minimize(d: Dqm, atol: float = 1e-9) -> tuple[float, np.ndarray]:
    """Exact minimum of a DQM by enumerating all ``m**n`` assignments.

    Returns ``(min_energy, minimizers)`` with minimizers as an ``(k, n)``
    integer array in lexicographic order.
    """
    m, n = d.size, d.num_vars
    total = m**n
    if total > MAX_DQM_STATES:
        raise ResourceError(f"{m}**{n} = {total} assignments exceeds the cap of {MAX_DQM_STATES}")
    pairs, linear = d.pair_tables()
    powers = m ** np.arange(n - 1, -1, -1, dtype=np.int64)
    kept: list[tuple[np.ndarray, np.ndarray]] = []
    emin = np.inf
    step = 1 << 20
    for lo in range(0, total, step):
        idx = np.arange(lo, min(lo + step, total), dtype=np.int64)
        A = (idx[:, None] // powers) % m  # base-m digits, most significant first
        E = np.zeros(len(idx))
        for i in range(n):
            E += linear[i][A[:, i]]
        for (i, j), table in pairs.items():
            E += table[A[:, i], A[:, j]]
        emin = min(emin, float(E.min()))
        sel = E <= emin + atol * max(1.0, abs(emin))
        kept.append((A[sel], E[sel]))
    tol = atol * max(1.0, abs(emin))
    minimizers = np.concatenate([A[E <= emin + tol] for A, E in kept])
    return emin, minimizers


def brute_force_qubo(q: Qubo, atol: float = 1e-9, chunk_bits: int = 18) -> tuple[float, np.ndarray]:
    """Exact minimum of a QUBO over all ``2**num_bits`` bitstrings.

    Bit ``p`` of the enumeration index is bitstring position
    ``num_bits - 1 - p``, so minimizers come out in lexicographic order.
    """
    nb = q.num_bits
    if nb > MAX_QUBO_BITS:
        raise ResourceError(f"{nb} bits exceeds the cap of {MAX_QUBO_BITS}")
    h = q.linear_array()
    J = q.upper_matrix()
    shifts = np.arange(nb - 1, -1, -1, dtype=np.int64)
    step = 1 << min(nb, chunk_bits)
    energies = np.empty(1 << nb)
    for lo in range(0, 1 << nb, step):
        idx = np.arange(lo, lo + step, dtype=np.int64)
        B = ((idx[:, None] >> shifts) & 1).astype(float)
        energies[lo:lo + step] = q.offset + B @ h + np.einsum("kp,kp->k", B @ J, B)
    emin = float(energies.min())
    hits = np.flatnonzero(energies <= emin + atol * max(1.0, abs(emin)))
    bits = ((hits[:, None] >> shifts) & 1).astype(np.int8)
    return emin, bits


def problem_to_dict(spec: AssignmentSpec | TspSpec) -> dict:
    if isinstance(spec, TspSpec):
        out = {"type": "tsp", "m": spec.m, "dist": spec.dist.tolist()}
        if spec.base_dist is not None:
            out["base_dist"] = spec.base_dist.tolist()
    elif spec.flows is None:
        out = {"type": "assignment", "m": spec.m}
    else:
        out = {"type": "qap", "m": spec.m, "flows": spec.flows.tolist(), "distances": spec.distances.tolist()}
    if spec.kappa is not None:
        out["kappa"] = spec.kappa
    return out


def problem_from_dict(data: dict) -> AssignmentSpec | TspSpec:
    kind = data.get("type")
    kappa = data.get("kappa")
    if kind == "assignment":
        return AssignmentSpec(int(data["m"]), kappa=kappa)
    if kind == "qap":
        return AssignmentSpec(int(data["m"]), np.asarray(data["flows"]), np.asarray(data["distances"]), kappa)
    if kind == "tsp":
        base = data.get("base_dist")
        return TspSpec(int(data["m"]), np.asarray(data["dist"]), None if base is None else np.asarray(base), kappa)
    raise DomainError(f"unknown problem type {kind!r}")


def build_dqm(spec: AssignmentSpec | TspSpec) -> Dqm:
    if isinstance(spec, TspSpec):
        return tsp(spec)
    if spec.flows is None:
        return unweighted_assignment(spec.m, 1.0 if spec.kappa is None else spec.kappa)
    return weighted_qap(spec)


def load_problem(path) -> Dqm:
    """Read a problem file or a DQM JSON file and return the DQM."""
    from .io import dqm_from_dict

    with open(path) as fh:
        data = json.load(fh)
    if "terms" in data:
        return dqm_from_dict(data)
    return build_dqm(problem_from_dict(data))
