"""Compile discrete quadratic models into QUBOs and decode bitstrings back.

Three constraint families are supported:

* one-hot: ``m`` bits per variable, penalty ``kappa * (sum(b) - 1)**2``;
* domain-wall: ``m - 1`` bits per variable forming a ferromagnetic chain
  pinned to ``1`` on the left and ``0`` on the right, so that a valid state
  contains exactly one wall between a ``1`` and a ``0``;
* k-hot: ``m`` bits with penalty ``kappa * (sum(b) - k)**2``.

For domain-wall variables the indicator of value ``v`` placed at chain
position ``p`` is the affine form ``b[p-1] - b[p]`` with the pinned
boundary bits substituted by constants, which keeps every DQM interaction
quadratic in the bits.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DimensionError, DomainError, ParameterError, StructureError
from .model import PLUMBING, Dqm, Qubo

__all__ = [
    "ONE_HOT",
    "DOMAIN_WALL",
    "K_HOT",
    "EncodingMap",
    "DecodeResult",
    "encode",
    "encode_one_hot",
    "encode_domain_wall",
    "encode_k_hot",
    "convert_one_hot_to_domain_wall",
    "recover_dqm_from_one_hot",
    "decode",
    "binary_encoding_bit_count",
]

ONE_HOT = "one-hot"
DOMAIN_WALL = "domain-wall"
K_HOT = "k-hot"
SCHEMES = (ONE_HOT, DOMAIN_WALL, K_HOT)

VALID = "valid"
MULTI_WALL = "multi-wall"
WRONG_HOT_COUNT = "wrong-hot-count"


@dataclass(frozen=True)
class EncodingMap:
    """How the bits of a QUBO relate to the discrete variables they encode.

    ``var_ranges[i]`` is the half-open bit range owned by variable ``i``.
    For domain-wall variables, ``value_order[i][p]`` is the value whose
    wall sits just before chain bit ``p`` (i.e. the value decoded when
    exactly ``p`` leading bits are set).  ``constraint_offset`` is the total
    constraint energy of a valid code, so that for every valid assignment
    ``qubo_energy(code) - constraint_offset`` equals the encoded DQM energy.
    """

    scheme: str
    kappa: float
    size: int
    var_ranges: tuple[tuple[int, int], ...]
    value_order: tuple[tuple[int, ...], ...]
    k: int = 1
    constraint_offset: float = 0.0

    @property
    def num_vars(self) -> int:
        return len(self.var_ranges)

    @property
    def num_bits(self) -> int:
        return self.var_ranges[-1][1] if self.var_ranges else 0

    def code(self, assignment: Sequence[int]) -> np.ndarray:
        """Bitstring that encodes a valid ``assignment``."""
        if self.scheme == K_HOT:
            raise StructureError("k-hot variables do not encode a single value")
        a = np.asarray(assignment, dtype=np.int64)
        if a.shape != (self.num_vars,):
            raise DimensionError(f"assignment has shape {a.shape}, expected ({self.num_vars},)")
        if a.size and (a.min() < 0 or a.max() >= self.size):
            raise DomainError(f"assignment values must lie in [0, {self.size})")
        bits = np.zeros(self.num_bits, dtype=np.int8)
        for i, ((start, _), v) in enumerate(zip(self.var_ranges, a)):
            if self.scheme == ONE_HOT:
                bits[start + self.value_order[i].index(v)] = 1
            else:
                bits[start:start + self.value_order[i].index(v)] = 1
        return bits

    def to_dict(self) -> dict:
        return {
            "scheme": self.scheme,
            "kappa": self.kappa,
            "size": self.size,
            "k": self.k,
            "var_ranges": [list(r) for r in self.var_ranges],
            "value_order": [list(o) for o in self.value_order],
            "constraint_offset": self.constraint_offset,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "EncodingMap":
        scheme = data["scheme"]
        if scheme not in SCHEMES:
            raise DomainError(f"unknown scheme {scheme!r}")
        return cls(
            scheme=scheme,
            kappa=float(data["kappa"]),
            size=int(data["size"]),
            var_ranges=tuple((int(a), int(b)) for a, b in data["var_ranges"]),
            value_order=tuple(tuple(int(v) for v in o) for o in data["value_order"]),
            k=int(data.get("k", 1)),
            constraint_offset=float(data.get("constraint_offset", 0.0)),
        )


@dataclass(frozen=True)
class DecodeResult:
    feasible: bool
    values: tuple | None
    violation: tuple[str, ...]


def _check_kappa(kappa: float) -> float:
    kappa = float(kappa)
    if not kappa > 0 or not math.isfinite(kappa):
        raise ParameterError(f"constraint strength kappa must be positive, got {kappa}")
    return kappa


def _check_orders(value_order, num_vars: int, m: int) -> tuple[tuple[int, ...], ...]:
    identity = tuple(range(m))
    if value_order is None:
        return (identity,) * num_vars
    orders = list(value_order)
    if orders and not isinstance(orders[0], (list, tuple, np.ndarray)):
        orders = [orders] * num_vars
    if len(orders) != num_vars:
        raise DimensionError(f"got {len(orders)} value orders for {num_vars} variables")
    out = []
    for o in orders:
        o = tuple(int(v) for v in o)
        if sorted(o) != list(identity):
            raise DomainError(f"value order {o} is not a permutation of 0..{m - 1}")
        out.append(o)
    return tuple(out)


def _add_constraint_block(lin, quad, start: int, m: int, kappa: float, k: int) -> float:
    """Expand ``kappa * (sum_{p<m} b_{start+p} - k)**2`` with ``b*b = b``."""
    for p in range(m):
        lin[start + p] += kappa * (1 - 2 * k)
        for r in range(p + 1, m):
            quad[(start + p, start + r)] += 2 * kappa
    return kappa * k * k


def encode_one_hot(d: Dqm, kappa: float = 1.0) -> tuple[Qubo, EncodingMap]:
    """One-hot QUBO of ``d``: bit ``i*m + a`` is the indicator of ``x_i = a``."""
    kappa = _check_kappa(kappa)
    m, n = d.size, d.num_vars
    lin: dict[int, float] = defaultdict(float)
    quad: dict[tuple[int, int], float] = defaultdict(float)
    offset = 0.0
    for i in range(n):
        offset += _add_constraint_block(lin, quad, i * m, m, kappa, 1)
    for (i, j, a, b), w in d.terms.items():
        if i == j:
            lin[i * m + a] += w
        else:
            quad[(i * m + a, j * m + b)] += w
    labels = [(i, a) for i in range(n) for a in range(m)]
    q = Qubo.from_terms(n * m, lin, quad, offset, labels)
    emap = EncodingMap(
        ONE_HOT,
        kappa,
        m,
        tuple((i * m, (i + 1) * m) for i in range(n)),
        (tuple(range(m)),) * n,
    )
    return q, emap


def _indicator_forms(start: int, order: tuple[int, ...]) -> dict[int, tuple[float, tuple]]:
    """Affine form ``const + sum coef * b`` of each value indicator on one chain."""
    m = len(order)
    forms = {}
    for p, v in enumerate(order):
        const = 0.0
        terms = []
        if p == 0:
            const += 1.0  # pinned left boundary b_{-1} = 1
        else:
            terms.append((start + p - 1, 1.0))
        if p < m - 1:
            terms.append((start + p, -1.0))
        forms[v] = (const, tuple(terms))
    return forms


def _add_affine(wt: float, f, lin) -> float:
    """Accumulate ``wt * f`` into ``lin``; return the constant part."""
    const, terms = f
    for p, c in terms:
        lin[p] += wt * c
    return wt * const


def _add_product(wt: float, f, g, lin, quad) -> float:
    """Accumulate ``wt * f * g`` for affine forms on disjoint bits."""
    cf, tf = f
    cg, tg = g
    for p, c in tf:
        lin[p] += wt * c * cg
    for r, c in tg:
        lin[r] += wt * c * cf
    for p, c1 in tf:
        for r, c2 in tg:
            quad[(p, r)] += wt * c1 * c2
    return wt * cf * cg


def encode_domain_wall(
    d: Dqm, kappa: float = 1.0, value_order=None
) -> tuple[Qubo, EncodingMap]:
    """Domain-wall QUBO of ``d`` on ``num_vars * (m - 1)`` bits.

    ``value_order`` is either one permutation used for every variable or a
    sequence of per-variable permutations; identity by default.
    """
    kappa = _check_kappa(kappa)
    m, n = d.size, d.num_vars
    if m < 2:
        raise ParameterError("domain-wall encoding needs m >= 2")
    orders = _check_orders(value_order, n, m)
    w = m - 1
    lin: dict[int, float] = defaultdict(float)
    quad: dict[tuple[int, int], float] = defaultdict(float)
    offset = 0.0

    # chain: -kappa * sum_{a=-1}^{m-2} (1 - 2 b_a - 2 b_{a+1} + 4 b_a b_{a+1})
    one, zero = (1.0, ()), (0.0, ())
    for i in range(n):
        start = i * w
        for a in range(-1, m - 1):
            left = one if a == -1 else (0.0, ((start + a, 1.0),))
            right = zero if a + 1 == m - 1 else (0.0, ((start + a + 1, 1.0),))
            offset += -kappa
            offset += _add_affine(2 * kappa, left, lin)
            offset += _add_affine(2 * kappa, right, lin)
            offset += _add_product(-4 * kappa, left, right, lin, quad)

    forms = [_indicator_forms(i * w, orders[i]) for i in range(n)]
    for (i, j, a, b), wt in d.terms.items():
        if i == j:
            offset += _add_affine(wt, forms[i][a], lin)
        else:
            offset += _add_product(wt, forms[i][a], forms[j][b], lin, quad)

    labels = [(i, p) for i in range(n) for p in range(w)]
    q = Qubo.from_terms(n * w, lin, quad, offset, labels)
    emap = EncodingMap(
        DOMAIN_WALL,
        kappa,
        m,
        tuple((i * w, (i + 1) * w) for i in range(n)),
        orders,
        constraint_offset=-kappa * (m - 2) * n,
    )
    return q, emap


def encode_k_hot(m: int, k: int, kappa: float = 1.0) -> Qubo:
    """Single-block QUBO ``kappa * (sum_{a<m} b_a - k)**2``."""
    kappa = _check_kappa(kappa)
    if m < 2:
        raise ParameterError(f"k-hot needs m >= 2, got {m}")
    if not 1 <= k <= m - 1:
        raise ParameterError(f"k must lie in [1, {m - 1}], got {k}")
    lin: dict[int, float] = defaultdict(float)
    quad: dict[tuple[int, int], float] = defaultdict(float)
    offset = _add_constraint_block(lin, quad, 0, m, kappa, k)
    return Qubo.from_terms(m, lin, quad, offset, [(0, a) for a in range(m)])


def k_hot_map(m: int, k: int, kappa: float = 1.0, num_vars: int = 1) -> EncodingMap:
    """Encoding map matching ``num_vars`` consecutive :func:`encode_k_hot` blocks."""
    return EncodingMap(
        K_HOT, _check_kappa(kappa), m,
        tuple((i * m, (i + 1) * m) for i in range(num_vars)),
        (tuple(range(m)),) * num_vars, k=k,
    )


def encode(d: Dqm, scheme: str, kappa: float = 1.0, value_order=None) -> tuple[Qubo, EncodingMap]:
    if scheme == ONE_HOT:
        return encode_one_hot(d, kappa)
    if scheme == DOMAIN_WALL:
        return encode_domain_wall(d, kappa, value_order)
    raise DomainError(f"scheme {scheme!r} cannot encode a DQM (use one-hot or domain-wall)")


def _infer_one_hot_ranges(q: Qubo) -> list[tuple[int, int]]:
    owners: dict[int, list[int]] = defaultdict(list)
    for p, lab in enumerate(q.labels):
        if lab == PLUMBING:
            raise StructureError("QUBO contains plumbing bits; cannot identify one-hot blocks")
        owners[lab[0]].append(p)
    ranges = []
    for i in sorted(owners):
        bits = owners[i]
        if bits != list(range(bits[0], bits[-1] + 1)):
            raise StructureError(f"bits of variable {i} are not contiguous")
        ranges.append((bits[0], bits[-1] + 1))
    return ranges


def recover_dqm_from_one_hot(
    q: Qubo, emap: EncodingMap | None = None, rtol: float = 1e-12
) -> tuple[Dqm, float, float]:
    """Recover ``(dqm, kappa, constant)`` from a one-hot QUBO.

    Each variable block must be a complete clique of identical positive
    couplings ``2 kappa``; the block's linear terms then carry
    ``-kappa + D[i, i, a, a]`` and the offset carries ``n kappa`` plus a
    leftover constant, which is returned separately.  Block boundaries come
    from ``emap`` when given, otherwise from the QUBO labels, and are always
    checked against the coefficients.
    """
    if emap is not None:
        if emap.scheme != ONE_HOT:
            raise StructureError(f"expected a one-hot encoding map, got {emap.scheme!r}")
        ranges = list(emap.var_ranges)
        if emap.num_bits != q.num_bits:
            raise StructureError("encoding map does not cover the QUBO's bits")
    else:
        ranges = _infer_one_hot_ranges(q)
    sizes = {b - a for a, b in ranges}
    if len(sizes) != 1:
        raise StructureError(f"one-hot blocks have differing sizes {sorted(sizes)}")
    m = sizes.pop()
    if m < 2:
        raise StructureError("one-hot blocks need at least two bits")
    n = len(ranges)
    owner = np.empty(q.num_bits, dtype=np.int64)
    pos = np.empty(q.num_bits, dtype=np.int64)
    for i, (a, b) in enumerate(ranges):
        owner[a:b] = i
        pos[a:b] = np.arange(b - a)

    couplings = [q.quadratic.get((a + s, a + t)) for a, _ in ranges for s in range(m) for t in range(s + 1, m)]
    if any(c is None for c in couplings):
        raise StructureError("a one-hot block is missing within-variable couplings")
    c0 = couplings[0]
    if not c0 > 0 or any(abs(c - c0) > rtol * abs(c0) for c in couplings):
        raise StructureError("within-variable couplings are not a uniform positive clique")
    kappa = c0 / 2.0
    if emap is not None and abs(kappa - emap.kappa) > rtol * emap.kappa:
        raise StructureError(f"clique couplings imply kappa={kappa}, map says {emap.kappa}")

    terms: dict[tuple[int, int, int, int], float] = {}
    for p in range(q.num_bits):
        w = q.linear.get(p, 0.0) + kappa
        if abs(w) > rtol * kappa:
            terms[(owner[p], owner[p], pos[p], pos[p])] = w
    for (p, r), v in q.quadratic.items():
        if owner[p] != owner[r]:
            terms[(owner[p], owner[r], pos[p], pos[r])] = v
    dqm = Dqm.from_terms(n, m, terms)
    return dqm, kappa, q.offset - n * kappa


def convert_one_hot_to_domain_wall(
    q: Qubo, emap: EncodingMap | None = None, kappa_dw: float = 1.0, value_orders=None
) -> tuple[Qubo, EncodingMap]:
    """Re-encode a one-hot QUBO with domain-wall chains.

    The underlying DQM is recovered from the one-hot structure, each variable
    is laid out on a chain in ``value_orders`` (identity by default) and the
    interactions are re-expressed through the chain indicators.  Any
    constant carried by the one-hot QUBO beyond its constraint offset is kept.
    """
    dqm, _, constant = recover_dqm_from_one_hot(q, emap)
    q_dw, map_dw = encode_domain_wall(dqm, kappa_dw, value_orders)
    if constant:
        q_dw = Qubo.from_terms(q_dw.num_bits, q_dw.linear, q_dw.quadratic, q_dw.offset + constant, q_dw.labels)
    return q_dw, map_dw


def decode(b: Sequence[int] | np.ndarray, emap: EncodingMap, context: Dqm | None = None) -> DecodeResult:
    """Decode a bitstring and classify every variable.

    One-hot variables are valid with exactly one bit set (k-hot: ``k``
    bits).  Domain-wall variables are valid when the chain padded as
    ``1, b_0, ..., b_{m-2}, 0`` is non-increasing.  With a ``context`` DQM
    the result is feasible only if no constraint term of the DQM is active.
    """
    bits = np.asarray(b)
    if bits.shape != (emap.num_bits,):
        raise DimensionError(f"bitstring has shape {bits.shape}, expected ({emap.num_bits},)")
    values = []
    violation = []
    for i, (start, stop) in enumerate(emap.var_ranges):
        block = bits[start:stop]
        ones = int(block.sum())
        if emap.scheme == DOMAIN_WALL:
            if np.all(block[:ones] == 1):
                values.append(emap.value_order[i][ones])
                violation.append(VALID)
            else:
                values.append(None)
                violation.append(MULTI_WALL)
        else:
            target = emap.k if emap.scheme == K_HOT else 1
            if ones != target:
                values.append(None)
                violation.append(WRONG_HOT_COUNT)
                continue
            hot = np.flatnonzero(block)
            if emap.scheme == K_HOT:
                values.append(tuple(int(h) for h in hot))
            else:
                values.append(emap.value_order[i][int(hot[0])])
            violation.append(VALID)
    ok = all(v == VALID for v in violation)
    if ok and context is not None and emap.scheme != K_HOT:
        if context.num_vars != emap.num_vars or context.size != emap.size:
            raise DimensionError("context DQM does not match the encoding map")
        feasible = context.constraint_energy(values) == 0.0
    else:
        feasible = ok
    return DecodeResult(feasible, tuple(values) if ok else None, tuple(violation))


def binary_encoding_bit_count(m: int) -> int:
    """Bits used by a plain binary encoding of a size-``m`` variable."""
    if m < 2:
        raise DomainError(f"m must be >= 2, got {m}")
    return (int(m) - 1).bit_length()
