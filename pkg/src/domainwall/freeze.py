"""From measured feasible fractions to freeze-out energy scales.

The pipeline is:

1. fit a unitless temperature ``T_qubo`` (temperature over the QUBO energy
   scale) by bisection against a Monte Carlo model of the feasible fraction;
2. divide by the embedding chain strength to get ``T_coup``, the
   temperature relative to the strongest coupler;
3. convert to the coupler energy scale ``B_freeze = T_physical / T_coup``
   and read ``s_freeze`` and ``A_freeze`` off an annealing schedule.

All energies are in GHz.  The default physical temperature 0.3125 GHz
corresponds to roughly 15 mK.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Iterable

import numpy as np

from ._version import __version__
from .encoders import DOMAIN_WALL, ONE_HOT, EncodingMap, encode
from .errors import (
    BracketError,
    DomainError,
    ExtrapolationError,
    ParameterError,
    StructureError,
)
from .io import dqm_to_dict, qubo_to_dict
from .model import Dqm, Qubo
from .problems import unweighted_assignment
from .sampler import RNG_ALGORITHM, SamplerConfig, metropolis_run

__all__ = [
    "ScheduleTable",
    "ExperimentRecord",
    "FreezeEstimate",
    "ClassicalityReport",
    "ThermalModel",
    "chain_strength_heuristic",
    "fit_temperature",
    "bisect_temperature",
    "rescale_and_extract",
    "classicality_check",
    "all_variables_chained",
    "load_records",
    "T_PHYSICAL_GHZ",
    "CACHE_ENV",
    "NO_FREE_VARIABLE_M",
]

#: 15 mK in GHz (k_B / h = 20.8366 GHz/K), rounded the usual way.
T_PHYSICAL_GHZ = 0.3125
CACHE_ENV = "DOMAINWALL_CACHE_DIR"
#: Smallest m at which every variable of every embedding spans >= 2 qubits.
NO_FREE_VARIABLE_M = {ONE_HOT: 7, DOMAIN_WALL: 8}

_FIELDS = ("T_qubo", "T_coup", "B_freeze", "s_freeze", "A_freeze")


# -- schedule ---------------------------------------------------------------


@dataclass(frozen=True)
class ScheduleTable:
    """Annealing schedule rows ``(s, A(s), B(s))``.

    ``s`` must be strictly increasing from 0 to 1, ``A`` non-increasing and
    ``B`` non-decreasing.  Lookups interpolate linearly and refuse to
    extrapolate.
    """

    s: np.ndarray
    A: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        s, A, B = (np.asarray(x, dtype=float) for x in (self.s, self.A, self.B))
        if not (s.ndim == A.ndim == B.ndim == 1 and len(s) == len(A) == len(B)):
            raise DomainError("schedule columns must be 1-D and of equal length")
        if len(s) < 2:
            raise DomainError("a schedule needs at least two rows")
        if not np.all(np.isfinite(np.concatenate([s, A, B]))):
            raise DomainError("schedule contains non-finite values")
        if np.any(np.diff(s) <= 0):
            raise DomainError("schedule s must be strictly increasing")
        if s[0] != 0.0 or s[-1] != 1.0:
            raise DomainError(f"schedule must span s=0..1, got {s[0]}..{s[-1]}")
        if np.any(np.diff(A) > 0):
            raise DomainError("A(s) must be non-increasing")
        if np.any(np.diff(B) < 0):
            raise DomainError("B(s) must be non-decreasing")
        if B[-1] <= B[0]:
            raise DomainError("B(s) must not be constant")
        for name, arr in (("s", s), ("A", A), ("B", B)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def from_csv(cls, path: str | os.PathLike) -> "ScheduleTable":
        rows = _read_csv(path, ("s", "A_GHz", "B_GHz"))
        try:
            cols = [[float(r[k]) for r in rows] for k in ("s", "A_GHz", "B_GHz")]
        except ValueError as exc:
            raise DomainError(f"{path}: non-numeric schedule entry ({exc})") from exc
        return cls(*cols)

    @classmethod
    def packaged(cls) -> "ScheduleTable":
        """Illustrative schedule shipped with the package (not a device calibration)."""
        return cls.from_csv(_data_path("schedule_illustrative.csv"))

    def A_at(self, s: float) -> float:
        return self._interp(s, self.s, self.A, "s")

    def B_at(self, s: float) -> float:
        return self._interp(s, self.s, self.B, "s")

    def s_of_B(self, b: float) -> float:
        """Inverse of ``B(s)``; on a flat stretch the smallest matching ``s``."""
        if not self.B[0] <= b <= self.B[-1]:
            raise ExtrapolationError(
                f"B={b:.6g} GHz lies outside the schedule range [{self.B[0]:.6g}, {self.B[-1]:.6g}]"
            )
        k = int(np.searchsorted(self.B, b, side="left"))
        if self.B[k] == b:
            return float(self.s[k])
        b0, b1 = self.B[k - 1], self.B[k]
        t = (b - b0) / (b1 - b0)
        return float(self.s[k - 1] + t * (self.s[k] - self.s[k - 1]))

    @staticmethod
    def _interp(x, xs, ys, name) -> float:
        if not xs[0] <= x <= xs[-1]:
            raise ExtrapolationError(f"{name}={x:.6g} outside [{xs[0]}, {xs[-1]}]")
        return float(np.interp(x, xs, ys))


# -- experiment records -----------------------------------------------------


@dataclass(frozen=True)
class ExperimentRecord:
    m: int
    scheme: str
    feasible_count: int
    total_anneals: int
    chain_strength: float | None = None

    def __post_init__(self):
        if self.scheme not in (ONE_HOT, DOMAIN_WALL):
            raise DomainError(f"unsupported scheme {self.scheme!r}")
        if self.total_anneals < 1:
            raise DomainError("total_anneals must be positive")
        if not 0 <= self.feasible_count <= self.total_anneals:
            raise DomainError(
                f"feasible_count={self.feasible_count} outside [0, {self.total_anneals}]"
            )
        if self.chain_strength is not None and not self.chain_strength > 0:
            raise DomainError("chain_strength must be positive")

    @property
    def p(self) -> float:
        return self.feasible_count / self.total_anneals

    @property
    def standard_error(self) -> float:
        return math.sqrt(self.p * (1 - self.p) / self.total_anneals)


def load_records(path: str | os.PathLike) -> list[ExperimentRecord]:
    """Read ``m,scheme,feasible_count,total_anneals,chain_strength`` rows.

    An empty ``chain_strength`` cell means "use the heuristic".
    """
    rows = _read_csv(path, ("m", "scheme", "feasible_count", "total_anneals", "chain_strength"))
    out = []
    for lineno, r in enumerate(rows, start=2):
        try:
            cs = r["chain_strength"].strip()
            out.append(
                ExperimentRecord(
                    int(r["m"]),
                    r["scheme"].strip(),
                    int(r["feasible_count"]),
                    int(r["total_anneals"]),
                    float(cs) if cs else None,
                )
            )
        except (ValueError, DomainError) as exc:
            raise DomainError(f"{path}:{lineno}: {exc}") from exc
    return out


# -- chain strength -----------------------------------------------------------


def chain_strength_heuristic(q: Qubo, prefactor: float = 1.414) -> float:
    """Uniform torque compensation estimate of the embedding chain strength.

    ``prefactor * rms(J) * sqrt(mean degree)`` where ``J`` runs over the
    stored quadratic coefficients and the degree of a bit counts its
    quadratic partners.
    """
    if not q.quadratic:
        raise StructureError("the chain-strength heuristic needs at least one quadratic term")
    J = np.fromiter(q.quadratic.values(), dtype=float)
    rms = math.sqrt(float(np.mean(J * J)))
    mean_degree = 2 * len(J) / q.num_bits
    return prefactor * rms * math.sqrt(mean_degree)


# -- thermal model ------------------------------------------------------------


class ThermalModel:
    """Feasible fraction as a function of the unitless temperature ``T_qubo``.

    Each evaluation runs one Metropolis chain at ``T_qubo * energy_scale``,
    where the energy scale defaults to the largest absolute coefficient of
    the QUBO.  Every evaluation reuses the same seed, so nearby
    temperatures see common random numbers and the estimated curve is far
    smoother than the per-point noise suggests.  Results are memoized in
    memory and, when ``cache_dir`` (or the ``DOMAINWALL_CACHE_DIR``
    environment variable) is set, in small JSON files keyed by everything
    that affects the estimate.
    """

    def __init__(
        self,
        q: Qubo,
        encoding: EncodingMap,
        context: Dqm | None,
        num_samples: int = 10**6,
        seed: int = 0,
        energy_scale: float | None = None,
        cache_dir: str | os.PathLike | None = None,
    ):
        self.q = q
        self.encoding = encoding
        self.context = context
        self.num_samples = int(num_samples)
        self.seed = int(seed)
        self.energy_scale = float(q.energy_scale() if energy_scale is None else energy_scale)
        if not self.energy_scale > 0:
            raise ParameterError("energy scale must be positive")
        if cache_dir is None:
            cache_dir = os.environ.get(CACHE_ENV) or None
        self.cache_dir = Path(cache_dir) if cache_dir else None
        self._memo: dict[float, float] = {}
        self._digest = hashlib.sha256(
            json.dumps(
                {
                    "qubo": qubo_to_dict(q),
                    "encoding": encoding.to_dict(),
                    "context": None if context is None else dqm_to_dict(context),
                    "energy_scale": self.energy_scale,
                    "num_samples": self.num_samples,
                    "seed": self.seed,
                    "rng": RNG_ALGORITHM,
                    "version": __version__,
                },
                sort_keys=True,
            ).encode()
        ).hexdigest()
        self.evaluations = 0

    @classmethod
    def for_assignment(cls, m: int, scheme: str, **kwargs) -> "ThermalModel":
        d = unweighted_assignment(m)
        q, emap = encode(d, scheme)
        return cls(q, emap, d, **kwargs)

    def __call__(self, T_qubo: float) -> float:
        T_qubo = float(T_qubo)
        if T_qubo <= 0:
            return 1.0
        if T_qubo in self._memo:
            return self._memo[T_qubo]
        path = None
        if self.cache_dir is not None:
            key = hashlib.sha256(f"{self._digest}:{T_qubo!r}".encode()).hexdigest()
            path = self.cache_dir / f"{key}.json"
            if path.exists():
                p = float(json.loads(path.read_text())["p"])
                self._memo[T_qubo] = p
                return p
        cfg = SamplerConfig(T_qubo * self.energy_scale, self.num_samples, self.seed, trace_points=1)
        p = metropolis_run(self.q, cfg, self.encoding, self.context).feasible_fraction
        self.evaluations += 1
        self._memo[T_qubo] = p
        if path is not None:
            self.cache_dir.mkdir(parents=True, exist_ok=True)
            tmp = path.with_suffix(".tmp")
            tmp.write_text(json.dumps({"T_qubo": T_qubo, "p": p}))
            tmp.replace(path)
        return p

    def metadata(self) -> dict:
        return {
            "energy_scale": self.energy_scale,
            "energy_scale_definition": "max |coefficient| of the unembedded QUBO, kappa=1",
            "num_samples": self.num_samples,
            "seed": self.seed,
            "rng": RNG_ALGORITHM,
        }


# -- fitting --------------------------------------------------------------------


@dataclass(frozen=True)
class FreezeEstimate:
    """Point values and 95% bounds of the freeze-out quantities.

    Fields not yet computed are ``None``.  ``ci_low[f] <= value <= ci_high[f]``
    for every computed field ``f``; an unbounded side is ``inf`` (or 0).
    ``T_qubo`` is ``None`` for a one-sided fit, in which case only
    ``ci_low["T_qubo"]`` is informative.
    """

    m: int | None
    scheme: str | None
    T_qubo: float | None
    T_coup: float | None = None
    B_freeze: float | None = None
    s_freeze: float | None = None
    A_freeze: float | None = None
    ci_low: dict = field(default_factory=dict)
    ci_high: dict = field(default_factory=dict)
    chain_strength: float | None = None
    T_physical: float | None = None
    one_sided: bool = False
    metadata: dict = field(default_factory=dict)

    def row(self) -> dict:
        out = {"m": self.m, "scheme": self.scheme}
        for f in _FIELDS:
            out[f] = getattr(self, f)
        for f in _FIELDS:
            out[f"ci_low_{f}"] = self.ci_low.get(f)
            out[f"ci_high_{f}"] = self.ci_high.get(f)
        return out


def bisect_temperature(
    p_target: float,
    model: Callable[[float], float],
    iterations: int = 15,
    t_min: float = 0.0,
    t_max: float = 2.5,
) -> tuple[float, float, float]:
    """Bisection for ``model(T) == p_target`` on a decreasing model.

    Returns ``(midpoint, lo, hi)`` where ``[lo, hi]`` is the final bracket
    of width ``(t_max - t_min) / 2**iterations``.
    """
    if iterations < 1:
        raise ParameterError("need at least one bisection iteration")
    lo, hi = float(t_min), float(t_max)
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        if model(mid) > p_target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi), lo, hi


def fit_temperature(
    rec: ExperimentRecord,
    model: Callable[[float], float],
    iterations: int = 15,
    t_max: float = 2.5,
) -> FreezeEstimate:
    """Fit ``T_qubo`` to a measured feasible fraction.

    The 95% bounds are refits at ``p + 2 SE`` (giving the low temperature)
    and ``p - 2 SE`` (the high one).  A bound whose target probability
    drops to 0 or below the model's value at ``t_max`` is reported as
    ``inf``.  With no feasible outcome the point fit is undefined and only
    a lower temperature bound is returned, using the one-sided 95% limit
    ``3 / total_anneals`` on the probability.
    """
    p_max_T = model(t_max)
    meta = {"iterations": iterations, "t_max": t_max, "resolution": t_max / 2**iterations}

    def refit(p):
        if p <= 0 or p < p_max_T:
            return math.inf
        return bisect_temperature(min(p, 1.0), model, iterations, 0.0, t_max)[0]

    if rec.feasible_count == 0:
        p_bound = min(1.0, 3.0 / rec.total_anneals)
        if p_bound < p_max_T:
            raise BracketError(_bracket_message(rec, p_bound, p_max_T, t_max))
        low = refit(p_bound)
        meta["note"] = "no feasible outcome; lower temperature bound from p < 3/N"
        return FreezeEstimate(
            rec.m, rec.scheme, None,
            ci_low={"T_qubo": low}, ci_high={"T_qubo": math.inf},
            chain_strength=rec.chain_strength, one_sided=True, metadata=meta,
        )

    p = rec.p
    if p < p_max_T:
        raise BracketError(_bracket_message(rec, p, p_max_T, t_max))
    T, lo, hi = bisect_temperature(p, model, iterations, 0.0, t_max)
    meta["bracket"] = (lo, hi)
    se = rec.standard_error
    t_low = refit(p + 2 * se)
    t_high = refit(p - 2 * se)
    # common random numbers keep the model nearly monotone; guard the order anyway
    t_low, t_high = min(t_low, T), max(t_high, T)
    return FreezeEstimate(
        rec.m, rec.scheme, T,
        ci_low={"T_qubo": t_low}, ci_high={"T_qubo": t_high},
        chain_strength=rec.chain_strength, metadata=meta,
    )


def _bracket_message(rec, p, p_max_T, t_max) -> str:
    return (
        f"m={rec.m} {rec.scheme}: target p={p:.3g} is below the model's p={p_max_T:.3g} "
        f"at T_max={t_max}; the fit needs a wider bracket or a larger model sample"
    )


# -- rescaling ------------------------------------------------------------------


def rescale_and_extract(
    est: FreezeEstimate | float,
    chain_strength: float,
    schedule: ScheduleTable,
    T_physical: float = T_PHYSICAL_GHZ,
    strict: bool = True,
) -> FreezeEstimate:
    """Convert a fitted ``T_qubo`` into ``T_coup``, ``B_freeze``, ``s_freeze`` and ``A_freeze``.

    A point ``B_freeze`` outside the schedule's ``B`` range raises
    :class:`ExtrapolationError`; with ``strict=False`` it is kept, ``s_freeze``
    and ``A_freeze`` are left as ``None`` and the reason is stored under
    ``metadata["extrapolation"]``.  Confidence bounds that leave the table
    are clipped to its edge and listed under ``metadata["clipped"]``.
    """
    if not chain_strength > 0:
        raise ParameterError("chain_strength must be positive")
    if not T_physical > 0:
        raise ParameterError("T_physical must be positive")
    if not isinstance(est, FreezeEstimate):
        T = float(est)
        est = FreezeEstimate(None, None, T, ci_low={"T_qubo": T}, ci_high={"T_qubo": T})
    meta = dict(est.metadata)
    clipped = []

    def chain(T_qubo, bound):
        T_coup = T_qubo / chain_strength
        B = T_physical / T_coup if T_coup > 0 else math.inf
        if bound and not schedule.B[0] <= B <= schedule.B[-1]:
            clipped.append(bound)
            B = min(max(B, schedule.B[0]), schedule.B[-1])
        s = schedule.s_of_B(B)
        return T_coup, B, s, schedule.A_at(s)

    lo = dict(est.ci_low)
    hi = dict(est.ci_high)
    lo_vals = chain(est.ci_low.get("T_qubo", est.T_qubo), "low T")
    hi_vals = chain(est.ci_high.get("T_qubo", est.T_qubo), "high T")
    # a higher temperature means a smaller B, an earlier s and a larger A
    lo["T_coup"], hi["T_coup"] = lo_vals[0], hi_vals[0]
    lo["B_freeze"], hi["B_freeze"] = hi_vals[1], lo_vals[1]
    lo["s_freeze"], hi["s_freeze"] = hi_vals[2], lo_vals[2]
    lo["A_freeze"], hi["A_freeze"] = lo_vals[3], hi_vals[3]
    if clipped:
        meta["clipped"] = clipped
    meta["T_physical_GHz"] = T_physical

    if est.T_qubo is None:
        return replace(est, ci_low=lo, ci_high=hi, chain_strength=chain_strength,
                       T_physical=T_physical, metadata=meta)
    try:
        T_coup, B, s, A = chain(est.T_qubo, None)
    except ExtrapolationError as exc:
        if strict:
            raise
        T_coup = est.T_qubo / chain_strength
        B, s, A = T_physical / T_coup, None, None
        meta["extrapolation"] = str(exc)
    return replace(
        est, T_coup=T_coup, B_freeze=B, s_freeze=s, A_freeze=A,
        ci_low=lo, ci_high=hi, chain_strength=chain_strength,
        T_physical=T_physical, metadata=meta,
    )


# -- classicality -----------------------------------------------------------------


@dataclass(frozen=True)
class ClassicalityReport:
    thermal_dominates: bool | None
    ratio: float
    perturbative: bool
    justified: bool


def classicality_check(
    est: FreezeEstimate,
    min_chain_length: int,
    T_physical: float | None = None,
    ratio_threshold: float = 0.1,
) -> ClassicalityReport:
    """Is a purely thermal model defensible at the fitted freeze point?

    Unchained variables (``min_chain_length == 1``) feel the transverse
    field directly, so ``A_freeze`` must sit below the temperature.  In
    every case ``A_freeze / B_freeze`` must stay under ``ratio_threshold``.
    """
    if est.A_freeze is None or est.B_freeze is None:
        raise ParameterError("estimate has no A_freeze/B_freeze; run rescale_and_extract first")
    if min_chain_length < 1:
        raise ParameterError("min_chain_length must be >= 1")
    T = T_physical if T_physical is not None else (est.T_physical or T_PHYSICAL_GHZ)
    ratio = est.A_freeze / est.B_freeze
    thermal = est.A_freeze < T if min_chain_length == 1 else None
    perturbative = ratio < ratio_threshold
    return ClassicalityReport(thermal, ratio, perturbative, perturbative and thermal is not False)


def all_variables_chained(m: int, scheme: str) -> bool:
    """Whether every variable spans at least two qubits in the reference embeddings."""
    return m >= NO_FREE_VARIABLE_M[scheme]


# -- helpers ----------------------------------------------------------------------


def _data_path(name: str) -> Path:
    return Path(__file__).with_name("data") / name


def _read_csv(path, required: Iterable[str]) -> list[dict]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in required if c not in header]
        if missing:
            raise DomainError(f"{path}: missing column(s) {', '.join(missing)}")
        return list(reader)
