"""Fixed-temperature Metropolis sampling of QUBO Boltzmann distributions.

Each attempted single-bit flip counts as one sample, whether it is
accepted or not.  Random numbers come from numpy's counter-based Philox
generator keyed by a :class:`numpy.random.SeedSequence`, so chains at
different temperatures or seeds draw from independent streams and every
run is bit-for-bit reproducible.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import _kernel
from .encoders import DOMAIN_WALL, K_HOT, ONE_HOT, EncodingMap, decode
from .errors import DimensionError, ParameterError
from .model import Dqm, Qubo

__all__ = [
    "SamplerConfig",
    "SampleStats",
    "metropolis_run",
    "metropolis_reference",
    "feasible_fraction_curve",
    "exact_boltzmann",
    "exact_feasible_fraction",
    "convergence_report",
    "ConvergenceRow",
    "checkpoint_schedule",
    "default_initial_state",
    "RNG_ALGORITHM",
    "UNRELIABLE_RATIO",
    "NUM_BATCHES",
]

RNG_ALGORITHM = "numpy Philox4x64 keyed by SeedSequence(entropy=seed, spawn_key=stream)"
UNRELIABLE_RATIO = 0.05
NUM_BATCHES = 64
_CHUNK = 1 << 18
_SCHEME_CODE = {ONE_HOT: _kernel.SCHEME_ONE_HOT, DOMAIN_WALL: _kernel.SCHEME_DOMAIN_WALL, K_HOT: _kernel.SCHEME_K_HOT}


@dataclass(frozen=True)
class SamplerConfig:
    temperature: float
    num_samples: int
    seed: int = 0
    initial_state: np.ndarray | None = None
    stream: tuple[int, ...] = ()
    trace_points: int = 1000

    def __post_init__(self):
        if not self.temperature > 0:
            raise ParameterError(f"temperature must be positive, got {self.temperature}")
        if int(self.num_samples) < 1:
            raise ParameterError("num_samples must be at least 1")
        object.__setattr__(self, "num_samples", int(self.num_samples))

    def rng(self) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=int(self.seed), spawn_key=tuple(self.stream))
        return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class SampleStats:
    """Outcome of one chain.

    ``trace[k]`` is the running mean of ``energy - reference_energy`` over
    the first ``checkpoints[k]`` attempted updates.  ``standard_error`` is
    the binomial ``sqrt(p (1 - p) / N)``, which ignores autocorrelation;
    ``batch_standard_error`` is the batch-means estimate over
    :data:`NUM_BATCHES` consecutive blocks and is the one to use when
    comparing a chain against an exact value.
    """

    temperature: float
    num_samples: int
    feasible_fraction: float
    standard_error: float
    mean_excess_energy: float
    reference_energy: float
    batch_standard_error: float
    accepted: int
    checkpoints: np.ndarray
    trace: np.ndarray
    final_state: np.ndarray
    state_counts: np.ndarray | None = None
    metadata: dict = field(default_factory=dict)


def checkpoint_schedule(n: int, points: int = 1000) -> np.ndarray:
    """``points`` strictly increasing, roughly geometric step counts ending at ``n``."""
    if n <= points:
        return np.arange(1, n + 1, dtype=np.int64)
    raw = np.geomspace(1, n, points)
    cp = np.empty(points, dtype=np.int64)
    prev = 0
    for i, r in enumerate(raw):
        prev = max(int(round(r)), prev + 1)
        cp[i] = prev
    # the forward pass can only push points up; pull the tail back under n
    cp[-1] = n
    for i in range(points - 2, -1, -1):
        if cp[i] >= cp[i + 1]:
            cp[i] = cp[i + 1] - 1
    return cp


def default_initial_state(emap: EncodingMap) -> np.ndarray:
    """Code of ``x_i = i mod m``: the identity permutation when ``n == m``."""
    if emap.scheme == K_HOT:
        bits = np.zeros(emap.num_bits, dtype=np.int8)
        for start, _ in emap.var_ranges:
            bits[start:start + emap.k] = 1
        return bits
    return emap.code(np.arange(emap.num_vars) % emap.size)


class _Prepared:
    """Flattened arrays the kernel needs, built once per (QUBO, map, context)."""

    def __init__(self, q: Qubo, emap: EncodingMap | None, context: Dqm | None):
        n = q.num_bits
        self.n = n
        self.lin = q.linear_array()
        nbrs: list[list[tuple[int, float]]] = [[] for _ in range(n)]
        for (p, r), v in q.quadratic.items():
            nbrs[p].append((r, v))
            nbrs[r].append((p, v))
        self.nbr_ptr = np.zeros(n + 1, dtype=np.int64)
        self.nbr_ptr[1:] = np.cumsum([len(x) for x in nbrs])
        self.nbr_idx = np.array([r for x in nbrs for r, _ in x], dtype=np.int64)
        self.nbr_w = np.array([v for x in nbrs for _, v in x], dtype=float)

        self.track = emap is not None
        if emap is None:
            nv, m = 0, 1
            self.var_of_bit = np.full(n, -1, dtype=np.int64)
            self.pos_of_bit = np.zeros(n, dtype=np.int64)
            self.scheme, self.k = 0, 1
        else:
            if emap.num_bits != n:
                raise DimensionError("encoding map does not cover the QUBO's bits")
            nv, m = emap.num_vars, emap.size
            self.var_of_bit = np.full(n, -1, dtype=np.int64)
            self.pos_of_bit = np.zeros(n, dtype=np.int64)
            for v, (a, b) in enumerate(emap.var_ranges):
                self.var_of_bit[a:b] = v
                self.pos_of_bit[a:b] = np.arange(b - a)
            self.scheme = _SCHEME_CODE[emap.scheme]
            self.k = emap.k
        self.var_start = np.array([a for a, _ in emap.var_ranges] if emap else [], dtype=np.int64)
        self.var_len = np.array([b - a for a, b in emap.var_ranges] if emap else [], dtype=np.int64)
        self.order = np.array(emap.value_order if emap else np.zeros((0, m)), dtype=np.int64).reshape(nv, m)

        lists: list[list[tuple[int, int, int]]] = [[] for _ in range(nv)]
        if context is not None and emap is not None and emap.scheme != K_HOT:
            if context.num_vars != nv or context.size != m:
                raise DimensionError("context DQM does not match the encoding map")
            for i, j, a, b in sorted(context.constraints):
                lists[i].append((j, a, b))
                lists[j].append((i, b, a))
        self.c_ptr = np.zeros(nv + 1, dtype=np.int64)
        self.c_ptr[1:] = np.cumsum([len(x) for x in lists])
        flat = [e for x in lists for e in x]
        self.c_other = np.array([e[0] for e in flat], dtype=np.int64)
        self.c_mine = np.array([e[1] for e in flat], dtype=np.int64)
        self.c_theirs = np.array([e[2] for e in flat], dtype=np.int64)
        self.nv = nv


def _energy(q: Qubo, bits: np.ndarray) -> float:
    return float(q.energies(bits[None, :])[0])


def metropolis_run(
    q: Qubo,
    cfg: SamplerConfig,
    encoding: EncodingMap | None = None,
    context: Dqm | None = None,
    reference_energy: float | None = None,
    record_states: bool = False,
    _prepared: _Prepared | None = None,
) -> SampleStats:
    """Run one fixed-temperature chain and collect feasibility statistics.

    With an ``encoding`` the chain tracks whether each visited state decodes
    validly (and, given ``context``, satisfies the DQM constraints); the
    feasible fraction is taken over all attempted updates.  The default
    start is :func:`default_initial_state`, which must be feasible when a
    context is supplied.  ``reference_energy`` defaults to the energy of the
    initial state, which for the assignment problems is the feasible
    ground-state energy.
    """
    prep = _prepared or _Prepared(q, encoding, context)
    if cfg.initial_state is not None:
        bits = np.array(cfg.initial_state, dtype=np.int8)
    elif encoding is not None:
        bits = default_initial_state(encoding).astype(np.int8)
    else:
        bits = np.zeros(q.num_bits, dtype=np.int8)
    if bits.shape != (q.num_bits,) or not np.all((bits == 0) | (bits == 1)):
        raise DimensionError("initial state must be a bitstring of the QUBO's length")
    if encoding is not None and context is not None and not decode(bits, encoding, context).feasible:
        raise ParameterError("initial state must be feasible when a problem context is given")
    if record_states and q.num_bits > 24:
        raise ParameterError("state histograms are limited to 24 bits")

    nv = prep.nv
    ones = np.zeros(nv, dtype=np.int64)
    walls = np.zeros(nv, dtype=np.int64)
    possum = np.zeros(nv, dtype=np.int64)
    value = np.zeros(nv, dtype=np.int64)
    n_invalid = 0
    n_active = 0
    if prep.track:
        n_invalid = _kernel.init_tracking(
            bits, prep.var_of_bit, prep.pos_of_bit, prep.var_start, prep.var_len,
            prep.scheme, prep.k, prep.order, ones, walls, possum, value,
        )
        n_active = _kernel.count_active(value, prep.c_ptr, prep.c_other, prep.c_mine, prep.c_theirs)

    e0 = _energy(q, bits)
    e_ref = e0 if reference_energy is None else float(reference_energy)
    scal = np.array([e0, 0.0, 0.0, 0.0, n_invalid, n_active], dtype=float)
    N = cfg.num_samples
    checkpoints = checkpoint_schedule(N, cfg.trace_points)
    trace = np.zeros(checkpoints.shape[0])
    state_counts = np.zeros(1 << q.num_bits if record_states else 0, dtype=np.int64)
    state_index = 0
    if record_states:
        for p in range(q.num_bits):
            if bits[p]:
                state_index |= 1 << p
    nbatch = min(NUM_BATCHES, N)
    batch_len = N // nbatch
    batch_feas = np.zeros(nbatch)
    rng = cfg.rng()
    inv_t = 1.0 / cfg.temperature
    cp_ptr = 0
    done = 0
    while done < N:
        size = min(_CHUNK, N - done)
        flips = rng.integers(0, q.num_bits, size=size, dtype=np.int64)
        uniforms = rng.random(size)
        cp_ptr, state_index = _kernel.run_chunk(
            bits, prep.lin, prep.nbr_ptr, prep.nbr_idx, prep.nbr_w, inv_t,
            flips, uniforms,
            prep.track, prep.var_of_bit, prep.pos_of_bit, prep.var_start, prep.var_len,
            prep.scheme, prep.k, prep.order, ones, walls, possum, value,
            prep.c_ptr, prep.c_other, prep.c_mine, prep.c_theirs,
            scal, done, checkpoints, trace, cp_ptr,
            e_ref, state_counts, state_index,
            batch_feas, batch_len,
        )
        done += size

    p_feas = scal[1] / N if prep.track else math.nan
    se = math.sqrt(p_feas * (1 - p_feas) / N) if prep.track else math.nan
    bse = math.nan
    if prep.track and nbatch >= 2:
        lengths = np.full(nbatch, batch_len, dtype=float)
        lengths[-1] = N - batch_len * (nbatch - 1)
        bse = float(np.std(batch_feas / lengths, ddof=1) / math.sqrt(nbatch))
    return SampleStats(
        temperature=cfg.temperature,
        num_samples=N,
        feasible_fraction=p_feas,
        standard_error=se,
        mean_excess_energy=scal[2] / N,
        reference_energy=e_ref,
        batch_standard_error=bse,
        accepted=int(scal[3]),
        checkpoints=checkpoints,
        trace=trace,
        final_state=bits,
        state_counts=state_counts if record_states else None,
        metadata={"rng": RNG_ALGORITHM, "seed": int(cfg.seed), "stream": list(cfg.stream),
                  "final_energy": scal[0]},
    )


def metropolis_reference(
    q: Qubo,
    cfg: SamplerConfig,
    feasible: Callable[[np.ndarray], bool],
    initial_state: np.ndarray,
    reference_energy: float | None = None,
) -> tuple[float, float, int, np.ndarray]:
    """Plain-Python chain with full energy recomputation at every step.

    Consumes the same random stream as :func:`metropolis_run`, so for the
    same config both must agree exactly; used as a test oracle.  Returns
    ``(feasible_fraction, mean_excess_energy, accepted, final_state)``.
    """
    bits = np.array(initial_state, dtype=np.int8)
    e = _energy(q, bits)
    e_ref = e if reference_energy is None else reference_energy
    rng = cfg.rng()
    N = cfg.num_samples
    feas = 0
    excess = 0.0
    accepted = 0
    done = 0
    while done < N:
        size = min(_CHUNK, N - done)
        flips = rng.integers(0, q.num_bits, size=size, dtype=np.int64)
        uniforms = rng.random(size)
        for p, u in zip(flips, uniforms):
            trial = bits.copy()
            trial[p] ^= 1
            e_new = _energy(q, trial)
            delta = e_new - e
            if delta <= 0 or u < math.exp(-delta / cfg.temperature):
                bits, e = trial, e_new
                accepted += 1
            feas += bool(feasible(bits))
            excess += e - e_ref
        done += size
    return feas / N, excess / N, accepted, bits


def feasible_fraction_curve(
    q: Qubo,
    encoding: EncodingMap,
    context: Dqm | None,
    temperatures: Sequence[float],
    num_samples: int,
    seed: int = 0,
    threads: int | None = 1,
    trace_points: int = 1000,
) -> list[SampleStats]:
    """One chain per temperature; chain ``k`` uses random stream ``(k,)``."""
    temps = [float(t) for t in temperatures]
    if any(t <= 0 for t in temps):
        raise ParameterError("temperatures must be positive")
    if any(b <= a for a, b in zip(temps, temps[1:])):
        raise ParameterError("temperatures must be strictly ascending")
    prep = _Prepared(q, encoding, context)

    def one(k: int) -> SampleStats:
        cfg = SamplerConfig(temps[k], num_samples, seed, stream=(k,), trace_points=trace_points)
        return metropolis_run(q, cfg, encoding, context, _prepared=prep)

    if threads == 1 or len(temps) == 1:
        return [one(k) for k in range(len(temps))]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(one, range(len(temps))))


def _all_bitstrings(n: int) -> np.ndarray:
    idx = np.arange(1 << n, dtype=np.int64)
    return ((idx[:, None] >> np.arange(n)) & 1).astype(np.int8)


def exact_boltzmann(q: Qubo, temperature: float, max_bits: int = 20) -> tuple[np.ndarray, np.ndarray]:
    """All bitstrings (bit ``p`` = bit ``p`` of the row index) and their Boltzmann weights."""
    if q.num_bits > max_bits:
        raise ParameterError(f"exact enumeration limited to {max_bits} bits")
    B = _all_bitstrings(q.num_bits)
    E = q.energies(B)
    w = np.exp(-(E - E.min()) / temperature)
    return B, w / w.sum()


def exact_feasible_fraction(
    q: Qubo, encoding: EncodingMap, context: Dqm | None, temperature: float
) -> float:
    """Boltzmann probability of the feasible set by direct summation."""
    B, prob = exact_boltzmann(q, temperature)
    mask = np.array([decode(b, encoding, context).feasible for b in B])
    return float(prob[mask].sum())


@dataclass(frozen=True)
class ConvergenceRow:
    temperature: float
    mean: float
    std: float
    ratio: float | None
    unreliable: bool


def convergence_report(
    runs: dict[float, Sequence[SampleStats]] | Sequence[SampleStats],
    threshold: float = UNRELIABLE_RATIO,
) -> list[ConvergenceRow]:
    """Relative spread of the mean excess energy across repeated chains.

    ``ratio`` is the sample standard deviation over the mean, or ``None``
    when the mean is zero (e.g. every run stayed feasible throughout).
    Rows with ``ratio > threshold`` or an undefined ratio are flagged.
    """
    if not isinstance(runs, dict):
        grouped: dict[float, list[SampleStats]] = {}
        for s in runs:
            grouped.setdefault(s.temperature, []).append(s)
        runs = grouped
    rows = []
    for T in sorted(runs):
        vals = np.array([s.mean_excess_energy for s in runs[T]])
        if vals.size < 2:
            raise ParameterError("convergence needs at least two runs per temperature")
        mean = float(vals.mean())
        std = float(vals.std(ddof=1))
        ratio = None if mean == 0 else std / abs(mean)
        rows.append(ConvergenceRow(T, mean, std, ratio, ratio is None or ratio > threshold))
    return rows
