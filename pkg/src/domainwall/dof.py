"""Degree-of-freedom counting for general pairwise interactions.

A general interaction between two size-``m`` variables has ``m**2``
independent energies.  With ``n_var`` bits per variable, the cross terms
supply ``n_var**2`` of them and the within-variable terms at most
``min(m, n_var (n_var + 1) / 2)`` per variable.  Whatever is missing must
come from auxiliary bits, each set of ``n_aux`` auxiliaries adding
``n_aux (n_aux + 1) / 2``.  Comparing the resulting average bit count per
variable with the ``m - 1`` bits of a domain-wall encoding gives a critical
interaction-graph degree above which no auxiliary scheme can win.

Quantities that are rational are returned as :class:`fractions.Fraction`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import DomainError, ParameterError

__all__ = [
    "DofReport",
    "correlating_dof",
    "noncorrelating_dof",
    "missing_dof",
    "min_aux_vars",
    "min_aux_vars_closed_form",
    "avg_bits_per_var",
    "critical_degree",
    "critical_degree_continuous",
    "dof_report",
    "scan_critical_degree",
    "scan_table",
    "min_connected_degree",
    "allowed_n_var",
]


@dataclass(frozen=True)
class DofReport:
    m: int
    n_var: int
    missing_dof: int
    n_aux: int
    d_crit: Fraction

    def n_bin(self, d):
        return avg_bits_per_var(self.n_var, self.n_aux, d)


def _log2_ceil(m: int) -> int:
    return (m - 1).bit_length()


def allowed_n_var(m: int) -> range:
    """Bit counts strictly between binary and domain-wall: ``ceil(log2 m) .. m-2``."""
    return range(_log2_ceil(m), m - 1)


def _check_range(m: int, n_var: int) -> None:
    if m < 2:
        raise ParameterError(f"m must be >= 2, got {m}")
    if not _log2_ceil(m) <= n_var < m - 1:
        raise ParameterError(
            f"n_var={n_var} outside [ceil(log2 {m}), {m - 2}] = [{_log2_ceil(m)}, {m - 2}]"
        )


def correlating_dof(n_var: int) -> int:
    """Cross-variable quadratic terms available to one interacting pair."""
    return n_var * n_var


def noncorrelating_dof(m: int, n_var: int) -> int:
    """Independent energies from terms confined to one variable, both variables."""
    return 2 * min(m, n_var * (n_var + 1) // 2)


def missing_dof(m: int, n_var: int) -> int:
    _check_range(m, n_var)
    return m * m - correlating_dof(n_var) - noncorrelating_dof(m, n_var)


def min_aux_vars(D: int) -> int:
    """Smallest ``n`` with ``n (n + 1) / 2 >= D``, computed in exact integers."""
    if D < 0:
        raise ParameterError("D must be non-negative")
    # ceil((sqrt(8D + 1) - 1) / 2) without floating point
    r = math.isqrt(8 * D + 1)
    n = (r - 1) // 2
    if n * (n + 1) // 2 < D:
        n += 1
    return n


def min_aux_vars_closed_form(D: float) -> int:
    """Floating-point ``ceil(sqrt(2) sqrt(D + 1/8) - 1/2)``; exact version is :func:`min_aux_vars`."""
    return math.ceil(math.sqrt(2) * math.sqrt(D + 0.125) - 0.5)


def avg_bits_per_var(n_var, n_aux, d):
    """``n_var + (d / 2) n_aux``; exact when ``d`` is an int or Fraction."""
    if isinstance(d, float):
        return n_var + d / 2 * n_aux
    return n_var + Fraction(d) / 2 * n_aux


def critical_degree(m: int, n_var: int) -> Fraction:
    """Average degree below which ``n_var`` bits plus auxiliaries could beat ``m - 1``."""
    _check_range(m, n_var)
    n_aux = min_aux_vars(missing_dof(m, n_var))
    return Fraction(2 * (m - 1 - n_var), n_aux)


def critical_degree_continuous(m: int, n_var: int) -> float:
    """Closed-form variant that skips the integer ceiling on ``n_aux``.

    Evaluates ``sqrt(2) (m - 1 - n_var) / (sqrt(D + 1/8) - 1/2)``.  Note the
    ``1/2`` is not divided by ``sqrt(2)``, so this does not equal
    ``2 (m - 1 - n_var) / (sqrt(2) sqrt(D + 1/8) - 1/2)`` exactly; both
    tend to ``sqrt(2)`` for binary bit counts at large ``m``.  Use
    :func:`critical_degree` for decisions.
    """
    D = missing_dof(m, n_var)
    return math.sqrt(2) * (m - 1 - n_var) / (math.sqrt(D + 0.125) - 0.5)


def dof_report(m: int, n_var: int) -> DofReport:
    D = missing_dof(m, n_var)
    return DofReport(m, n_var, D, min_aux_vars(D), critical_degree(m, n_var))


def _parts(m: int, n: int) -> tuple[int, int, int, int]:
    """Unchecked ``(D, n_aux, numerator, denominator)`` of the critical degree."""
    D = m * m - n * n - 2 * min(m, n * (n + 1) // 2)
    n_aux = min_aux_vars(D)
    return D, n_aux, 2 * (m - 1 - n), n_aux


def scan_table(m_max: int, even_only: bool = False, m_min: int = 4) -> list[DofReport]:
    """Reports for every ``m`` in ``[m_min, m_max]`` and every allowed ``n_var``."""
    _check_scan(m_max, m_min)
    rows = []
    for m in range(m_min, m_max + 1):
        if even_only and m % 2:
            continue
        for n in allowed_n_var(m):
            D, n_aux, num, den = _parts(m, n)
            rows.append(DofReport(m, n, D, n_aux, Fraction(num, den)))
    return rows


def scan_critical_degree(m_max: int, even_only: bool = False, m_min: int = 4) -> list[tuple[int, int, Fraction]]:
    """``(m, argmax n_var, max d_crit)`` per size; ties go to the smaller ``n_var``."""
    _check_scan(m_max, m_min)
    rows = []
    for m in range(m_min, m_max + 1):
        if even_only and m % 2:
            continue
        best_n, best_num, best_den = None, 0, 1
        for n in allowed_n_var(m):
            _, _, num, den = _parts(m, n)
            # exact comparison num/den > best_num/best_den on positive integers
            if best_n is None or num * best_den > best_num * den:
                best_n, best_num, best_den = n, num, den
        rows.append((m, best_n, Fraction(best_num, best_den)))
    return rows


def _check_scan(m_max: int, m_min: int) -> None:
    if m_min < 4:
        raise ParameterError(f"the scan starts at m=4, got m_min={m_min}")
    if not m_min <= m_max <= 1000:
        raise ParameterError(f"m_max must lie in [{m_min}, 1000], got {m_max}")


def min_connected_degree(q: int) -> Fraction:
    """Least average degree of a connected graph on ``q`` nodes (a tree)."""
    if q < 2:
        raise DomainError("a connected interaction graph needs q >= 2 nodes")
    return Fraction(2 * (q - 1), q)
