"""Core problem representations: discrete quadratic models and QUBOs.

A :class:`Dqm` stores pairwise value-dependent energies between discrete
variables that all take values ``0..m-1``.  A :class:`Qubo` stores a
quadratic polynomial over binary variables in upper-triangular form.  Both
are immutable once built; use the ``from_terms`` constructors, which
canonicalize and validate their input.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DimensionError, DomainError

__all__ = [
    "Dqm",
    "Qubo",
    "PLUMBING",
    "bit_spin_convert",
    "bits_to_spins",
    "spins_to_bits",
    "dqm_energy",
    "qubo_energy",
]

#: Label used for binary variables that do not belong to any discrete variable.
PLUMBING = "plumbing"

DqmKey = tuple[int, int, int, int]


@dataclass(frozen=True)
class Dqm:
    """Discrete quadratic model with ``num_vars`` variables of size ``size``.

    ``terms`` maps canonical keys ``(i, j, a, b)`` with ``i >= j`` to the
    weight applied when variable ``i`` takes value ``a`` and variable ``j``
    takes value ``b``.  Keys with ``i == j`` must have ``a == b`` and act as
    linear terms.  ``constraints`` is the subset of keys whose activation
    makes an assignment infeasible (e.g. the collision penalties of an
    assignment problem).
    """

    num_vars: int
    size: int
    terms: Mapping[DqmKey, float]
    constraints: frozenset[DqmKey] = field(default_factory=frozenset)

    @classmethod
    def from_terms(
        cls,
        num_vars: int,
        size: int | Sequence[int],
        terms: Mapping[DqmKey, float] | Iterable[tuple[DqmKey, float]],
        constraints: Iterable[DqmKey] = (),
    ) -> "Dqm":
        if not isinstance(size, (int, np.integer)):
            sizes = list(size)
            if len(sizes) != num_vars:
                raise DimensionError(f"got {len(sizes)} sizes for {num_vars} variables")
            if len(set(sizes)) > 1:
                raise DomainError(
                    f"all discrete variables must share one size, got sizes {sorted(set(sizes))}"
                )
            size = sizes[0] if sizes else 2
        size = int(size)
        if num_vars < 1:
            raise DomainError("a DQM needs at least one variable")
        if size < 2:
            raise DomainError(f"variable size must be >= 2, got {size}")

        items = terms.items() if isinstance(terms, Mapping) else terms
        acc: dict[DqmKey, float] = defaultdict(float)
        for key, w in items:
            acc[_canonical(key, num_vars, size)] += float(w)

        canon_constraints = frozenset(_canonical(k, num_vars, size) for k in constraints)
        for key in canon_constraints:
            if key[0] == key[1]:
                raise DomainError(f"constraint term {key} must couple two different variables")
            if acc.get(key, 0.0) <= 0.0:
                raise DomainError(f"constraint term {key} must carry a positive weight")

        clean = {k: w for k, w in sorted(acc.items()) if w != 0.0}
        return cls(num_vars, size, MappingProxyType(clean), canon_constraints)

    @property
    def sizes(self) -> tuple[int, ...]:
        return (self.size,) * self.num_vars

    def constraint_energy(self, assignment: Sequence[int]) -> float:
        a = self._check_assignment(assignment)
        return sum(
            self.terms[k] for k in self.constraints if a[k[0]] == k[2] and a[k[1]] == k[3]
        )

    def pair_tables(self) -> tuple[dict[tuple[int, int], np.ndarray], np.ndarray]:
        """Dense ``m x m`` tables per interacting pair plus a linear table.

        Returns ``(pairs, linear)`` where ``pairs[(i, j)][a, b]`` is the weight
        for ``x_i = a, x_j = b`` (``i > j``) and ``linear[i, a]`` collects the
        diagonal terms.
        """
        m = self.size
        pairs: dict[tuple[int, int], np.ndarray] = {}
        linear = np.zeros((self.num_vars, m))
        for (i, j, a, b), w in self.terms.items():
            if i == j:
                linear[i, a] += w
            else:
                pairs.setdefault((i, j), np.zeros((m, m)))[a, b] += w
        return pairs, linear

    def _check_assignment(self, assignment: Sequence[int]) -> np.ndarray:
        a = np.asarray(assignment)
        if a.shape != (self.num_vars,):
            raise DimensionError(f"assignment has shape {a.shape}, expected ({self.num_vars},)")
        if not np.issubdtype(a.dtype, np.integer):
            if not np.all(np.equal(np.mod(a, 1), 0)):
                raise DomainError("assignment values must be integers")
            a = a.astype(np.int64)
        if a.size and (a.min() < 0 or a.max() >= self.size):
            raise DomainError(f"assignment values must lie in [0, {self.size})")
        return a


def _canonical(key: Sequence[int], num_vars: int, size: int) -> DqmKey:
    if len(key) != 4:
        raise DimensionError(f"DQM keys have four entries (i, j, a, b), got {key!r}")
    i, j, a, b = (int(v) for v in key)
    if not (0 <= i < num_vars and 0 <= j < num_vars):
        raise DomainError(f"variable index out of range in {key!r}")
    if not (0 <= a < size and 0 <= b < size):
        raise DomainError(f"value index out of range in {key!r}")
    if i == j and a != b:
        raise DomainError(
            f"same-variable term {key!r} with different values never contributes energy"
        )
    if i < j:
        i, j, a, b = j, i, b, a
    return (i, j, a, b)


@dataclass(frozen=True)
class Qubo:
    """Quadratic pseudo-Boolean function ``offset + sum h_p b_p + sum J_pq b_p b_q``.

    ``quadratic`` keys are strictly upper-triangular ``(p, q)`` with ``p < q``.
    ``labels[p]`` is ``(variable, position)`` for bits owned by a discrete
    variable and :data:`PLUMBING` otherwise.
    """

    num_bits: int
    linear: Mapping[int, float]
    quadratic: Mapping[tuple[int, int], float]
    offset: float = 0.0
    labels: tuple = ()

    @classmethod
    def from_terms(
        cls,
        num_bits: int,
        linear: Mapping[int, float] | Iterable[tuple[int, float]] = (),
        quadratic: Mapping[tuple[int, int], float] | Iterable[tuple[tuple[int, int], float]] = (),
        offset: float = 0.0,
        labels: Sequence | None = None,
    ) -> "Qubo":
        """Build a normalized QUBO.

        Duplicate keys are summed, ``(q, p)`` is folded onto ``(p, q)``,
        diagonal pairs ``(p, p)`` become linear terms (``b*b = b``) and exact
        zeros are dropped.
        """
        num_bits = int(num_bits)
        lin: dict[int, float] = defaultdict(float)
        quad: dict[tuple[int, int], float] = defaultdict(float)
        for p, v in linear.items() if isinstance(linear, Mapping) else linear:
            p = int(p)
            _check_bit(p, num_bits)
            lin[p] += float(v)
        for (p, q), v in quadratic.items() if isinstance(quadratic, Mapping) else quadratic:
            p, q = int(p), int(q)
            _check_bit(p, num_bits)
            _check_bit(q, num_bits)
            if p == q:
                lin[p] += float(v)
            else:
                quad[(min(p, q), max(p, q))] += float(v)
        if labels is None:
            labels = (PLUMBING,) * num_bits
        labels = tuple(lab if lab == PLUMBING else tuple(lab) for lab in labels)
        if len(labels) != num_bits:
            raise DimensionError(f"got {len(labels)} labels for {num_bits} bits")
        return cls(
            num_bits,
            MappingProxyType({p: v for p, v in sorted(lin.items()) if v != 0.0}),
            MappingProxyType({k: v for k, v in sorted(quad.items()) if v != 0.0}),
            float(offset),
            labels,
        )

    def linear_array(self) -> np.ndarray:
        h = np.zeros(self.num_bits)
        for p, v in self.linear.items():
            h[p] = v
        return h

    def upper_matrix(self) -> np.ndarray:
        """Dense strictly upper-triangular coupling matrix."""
        J = np.zeros((self.num_bits, self.num_bits))
        for (p, q), v in self.quadratic.items():
            J[p, q] = v
        return J

    def symmetric_matrix(self) -> np.ndarray:
        """Matrix ``Q`` with ``E(b) = offset + b @ Q @ b`` (linear on the diagonal)."""
        J = self.upper_matrix()
        return (J + J.T) / 2 + np.diag(self.linear_array())

    def energies(self, bits: np.ndarray) -> np.ndarray:
        """Vectorized energy of a ``(k, num_bits)`` array of bitstrings."""
        B = np.asarray(bits, dtype=float)
        if B.ndim != 2 or B.shape[1] != self.num_bits:
            raise DimensionError(f"expected shape (k, {self.num_bits}), got {B.shape}")
        return self.offset + B @ self.linear_array() + np.einsum("kp,kp->k", B @ self.upper_matrix(), B)

    def scaled(self, factor: float) -> "Qubo":
        return Qubo.from_terms(
            self.num_bits,
            {p: factor * v for p, v in self.linear.items()},
            {k: factor * v for k, v in self.quadratic.items()},
            factor * self.offset,
            self.labels,
        )

    def energy_scale(self) -> float:
        """Largest absolute linear or quadratic coefficient."""
        coeffs = [abs(v) for v in self.linear.values()] + [abs(v) for v in self.quadratic.values()]
        return max(coeffs, default=0.0)


def _check_bit(p: int, num_bits: int) -> None:
    if not 0 <= p < num_bits:
        raise DomainError(f"bit index {p} out of range for {num_bits} bits")


def _as_bits(b: Sequence[int] | np.ndarray, num_bits: int) -> np.ndarray:
    arr = np.asarray(b)
    if arr.shape != (num_bits,):
        raise DimensionError(f"bitstring has shape {arr.shape}, expected ({num_bits},)")
    if not np.all((arr == 0) | (arr == 1)):
        raise DomainError("bitstring entries must be 0 or 1")
    return arr.astype(np.int8)


def qubo_energy(q: Qubo, b: Sequence[int] | np.ndarray) -> float:
    """Energy of bitstring ``b`` under ``q``."""
    bits = _as_bits(b, q.num_bits)
    e = q.offset
    for p, v in q.linear.items():
        if bits[p]:
            e += v
    for (p, r), v in q.quadratic.items():
        if bits[p] and bits[r]:
            e += v
    return float(e)


def dqm_energy(d: Dqm, assignment: Sequence[int]) -> float:
    """Total weight of the DQM terms activated by ``assignment``."""
    a = d._check_assignment(assignment)
    return float(sum(w for (i, j, al, be), w in d.terms.items() if a[i] == al and a[j] == be))


def bits_to_spins(b: Sequence[int] | np.ndarray) -> np.ndarray:
    arr = np.asarray(b)
    if not np.all((arr == 0) | (arr == 1)):
        raise DomainError("bit values must be 0 or 1")
    return (1 - 2 * arr).astype(np.int8)


def spins_to_bits(s: Sequence[int] | np.ndarray) -> np.ndarray:
    arr = np.asarray(s)
    if not np.all((arr == 1) | (arr == -1)):
        raise DomainError("spin values must be +1 or -1")
    return ((1 - arr) // 2).astype(np.int8)


def bit_spin_convert(x: Sequence[int] | np.ndarray, source: str | None = None) -> np.ndarray:
    """Map bits to spins or spins to bits via ``sigma = 1 - 2 b``.

    ``source`` is ``"bits"`` or ``"spins"``.  When omitted the alphabet is
    detected: any ``0`` means bits, any ``-1`` means spins, and an all
    ``+1`` vector is read as spins.  Mixed alphabets are rejected.
    """
    arr = np.asarray(x)
    if source is None:
        has_zero = bool(np.any(arr == 0))
        has_neg = bool(np.any(arr == -1))
        if has_zero and has_neg:
            raise DomainError("mixed bit/spin alphabet")
        source = "bits" if has_zero else "spins"
    if source == "bits":
        return bits_to_spins(arr)
    if source == "spins":
        return spins_to_bits(arr)
    raise DomainError(f"unknown alphabet {source!r}")
