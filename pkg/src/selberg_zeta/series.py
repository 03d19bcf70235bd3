"""Dirichlet series over traces: partial sums, log Z in both regions, mean squares.

Every series here has the shape ``sum_n m(n) Delta(n) eps(n)^(-2s) w_n`` with
real coefficients.  Sums run over increasing ``n`` and are accumulated with
``math.fsum`` on real and imaginary parts, so results do not depend on
chunking or worker count.

Tail budgets are heuristic: they use the prime geodesic density
``m(n) ~ n / log n`` with a safety factor of 2, or the error shape of the
explicit formula with unit constants.  They are never rigorous bounds.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from scipy.special import exp1

from .class_numbers import CoverageError, MultiplicityTable, multiplicity_table, tower_multiplicity
from .congruence import GroupDescriptor, check_sets, hat_sets, trace_set
from .quad_core import build_core_index, is_core, traces_below_cutoff, upper_cutoff

__all__ = [
    "ComplexPoint",
    "IndexSet",
    "SeriesResult",
    "PhaseAssignment",
    "ToleranceWarning",
    "partial_series",
    "log_zeta_euler",
    "euler_product_log",
    "psi",
    "log_zeta_strip",
    "strip_budget",
    "complement_tail",
    "mean_square",
    "MeanSquareResult",
    "l2_to_sup_bound",
    "DEFAULT_N_MAX",
]

DEFAULT_N_MAX = 1000
# auto-built tables beyond this are refused; pass a table explicitly instead
MAX_AUTO_N = 4000
ETA = 0.1
SAFETY = 2.0
STRIP_SIGMA = (5 / 6, 1.0)


class ToleranceWarning(RuntimeWarning):
    """The requested tolerance could not be met with the available table."""


@dataclass(frozen=True)
class ComplexPoint:
    sigma: float
    t: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.sigma) and math.isfinite(self.t)):
            raise ValueError("complex point must have finite components")

    @classmethod
    def coerce(cls, s) -> "ComplexPoint":
        if isinstance(s, ComplexPoint):
            return s
        if isinstance(s, tuple):
            return cls(float(s[0]), float(s[1]))
        s = complex(s)
        return cls(s.real, s.imag)

    @property
    def s(self) -> complex:
        return complex(self.sigma, self.t)

    def conjugate(self) -> "ComplexPoint":
        return ComplexPoint(self.sigma, -self.t)


@dataclass(frozen=True)
class SeriesResult:
    """A truncated series value.

    ``cutoff_x`` is the norm ``eps(n)^2`` (or smoothing parameter ``x``)
    below which terms were included; ``tail_budget`` is heuristic.
    """

    value: complex
    terms_used: int
    tail_budget: float
    cutoff_x: float


_BASES = ("FullTraces", "Core", "NonCore", "HatSet", "CheckSet")


@dataclass(frozen=True)
class IndexSet:
    """Traces ``lo <= n < hi`` drawn from one of the standard families.

    ``HatSet``/``CheckSet`` take a 1-based ``j`` and the ordered ``groups``
    list: core traces first seen at ``groups[j-1]``, or core traces of
    ``groups[j-1]`` already seen earlier.
    """

    base: str = "FullTraces"
    lo: int = 3
    hi: float = math.inf
    j: int | None = None
    groups: tuple = ()

    def __post_init__(self):
        if self.base not in _BASES:
            raise ValueError(f"unknown index set base {self.base!r}")
        if self.base in ("HatSet", "CheckSet"):
            if self.j is None or not (1 <= self.j <= len(self.groups)):
                raise ValueError(f"{self.base} needs 1 <= j <= len(groups)")
            object.__setattr__(self, "groups", tuple(GroupDescriptor.coerce(g) for g in self.groups))
        object.__setattr__(self, "lo", max(3, int(self.lo)))

    @property
    def is_finite(self) -> bool:
        return math.isfinite(self.hi)

    def resolve(self, cutoff: int) -> np.ndarray:
        """Members ``n <= cutoff`` (and ``n < hi``) in increasing order."""
        top = int(cutoff) if not self.is_finite else int(min(cutoff, math.ceil(self.hi) - 1))
        if top < self.lo:
            return np.zeros(0, dtype=np.int64)
        ns = np.arange(self.lo, top + 1, dtype=np.int64)
        if self.base == "FullTraces":
            return ns
        index = build_core_index(max(top, 3))
        core = np.array([index.is_core(int(n)) for n in ns], dtype=bool)
        if self.base == "NonCore":
            return ns[~core]
        ns = ns[core]
        if self.base == "Core":
            return ns
        desc = (hat_sets if self.base == "HatSet" else check_sets)(self.groups)[self.j - 1]
        return np.array([n for n in ns if int(n) in desc], dtype=np.int64)


class PhaseAssignment(dict):
    """Map ``n -> a_n`` with ``a_n`` in ``[0, 1)``; the term for ``n`` gets ``e(a_n)``."""

    def __init__(self, phases: Mapping[int, float] = ()):
        super().__init__()
        for n, a in dict(phases).items():
            a = float(a)
            if not 0.0 <= a < 1.0:
                raise ValueError(f"phase for n={n} must lie in [0, 1), got {a}")
            self[int(n)] = a


# ---------------------------------------------------------------------------
# helpers


def _sum(terms: np.ndarray) -> complex:
    terms = np.asarray(terms, dtype=complex)
    return complex(math.fsum(terms.real.tolist()), math.fsum(terms.imag.tolist()))


def _table_for(group, table: MultiplicityTable | None, n_needed: int = DEFAULT_N_MAX) -> MultiplicityTable:
    if table is not None:
        return table
    group = GroupDescriptor.coerce(group)
    if group.kind == "CustomTraceSet":
        raise ValueError("custom trace sets carry no multiplicities; supply a table explicitly")
    n_needed = max(int(n_needed), 3)
    if n_needed > MAX_AUTO_N:
        raise CoverageError(f"needs a table to n={n_needed}; build one explicitly (auto limit {MAX_AUTO_N})")
    return multiplicity_table(group, n_needed)


def _terms(table: MultiplicityTable, ns: np.ndarray, s: complex, weights=None) -> np.ndarray:
    idx = ns - 3
    L = table.log_eps[idx]
    t = table.coefficients[idx] * np.exp(-2.0 * s * L)
    if weights is not None:
        t = t * weights
    return t


def _norm(n: int) -> float:
    """``eps(n)^2``."""
    return math.exp(2.0 * math.acosh(n / 2))


def _full_tail(sigma: float, first_omitted: int) -> float:
    """Heuristic mass of ``sum_{n >= first_omitted} m(n) Delta(n) eps(n)^(-2 sigma)``."""
    if sigma <= 1.0:
        return math.inf
    log_norm = 2.0 * math.acosh(first_omitted / 2)
    return SAFETY * float(exp1((sigma - 1.0) * log_norm))


def _noncore_tail(sigma: float, first_omitted: int) -> float:
    """Same over non-core traces, whose density near ``n`` is about ``1 / (2 sqrt n)``."""
    if sigma <= 0.75:
        return math.inf
    return SAFETY * 0.5 * float(exp1((2.0 * sigma - 1.5) * math.log(first_omitted)))


def strip_budget(sigma: float, t: float, x: float) -> float:
    """``t^-2 x^(1 - sigma) + t^(1 + eta) x^(1/2 - sigma + eta)`` with ``eta = 0.1``."""
    t = abs(t)
    return t**-2 * x ** (1.0 - sigma) + t ** (1.0 + ETA) * x ** (0.5 - sigma + ETA)


# ---------------------------------------------------------------------------
# public operations


def partial_series(group, s, A: IndexSet | None = None, phases: Mapping[int, float] | None = None,
                   table: MultiplicityTable | None = None) -> SeriesResult:
    """``L(s; A; {a_n}) = sum_{n in A} m(n) Delta(n) eps(n)^(-2s) e(a_n)``.

    Infinite index sets are truncated at the table bound with a heuristic
    tail budget; finite ones must be covered by the table.
    """
    s = ComplexPoint.coerce(s)
    if s.sigma <= 0.5:
        raise ValueError(f"Re s must exceed 1/2, got {s.sigma}")
    A = A or IndexSet()
    table = _table_for(group, table, DEFAULT_N_MAX if not A.is_finite else int(math.ceil(A.hi)) - 1)
    if A.is_finite:
        table.require(int(math.ceil(A.hi)) - 1, "finite index set")
    ns = A.resolve(table.n_max)
    weights = None
    if phases:
        phases = PhaseAssignment(phases)
        extra = set(phases) - set(ns.tolist())
        if extra:
            raise ValueError(f"phases given outside the index set: {sorted(extra)[:5]}")
        a = np.array([phases.get(int(n), 0.0) for n in ns])
        weights = np.exp(2j * np.pi * a)
    value = _sum(_terms(table, ns, s.s, weights)) if len(ns) else 0j
    if A.is_finite:
        budget = 0.0
        cutoff = _norm(int(math.ceil(A.hi)))
    else:
        first = table.n_max + 1
        budget = _noncore_tail(s.sigma, first) if A.base == "NonCore" else _full_tail(s.sigma, first)
        cutoff = _norm(first)
    return SeriesResult(value, int(np.count_nonzero(table.m_float[ns - 3])) if len(ns) else 0, budget, cutoff)


def log_zeta_euler(group, s, tol: float = 1e-4, table: MultiplicityTable | None = None) -> SeriesResult:
    """``log Z(s) = -L(s; all traces)`` for ``Re s > 1``.

    The trace cutoff is the smallest one whose tail heuristic is below
    ``tol``; if the table cannot reach it a :class:`ToleranceWarning` is
    issued and the achieved budget is reported.
    """
    s = ComplexPoint.coerce(s)
    if s.sigma <= 1.0:
        raise ValueError(f"Euler-product region needs Re s > 1, got {s.sigma}")
    table = _table_for(group, table)
    n_hi = table.n_max
    if _full_tail(s.sigma, n_hi + 1) < tol:
        lo, hi = 2, n_hi
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if _full_tail(s.sigma, mid + 1) < tol:
                hi = mid
            else:
                lo = mid
        n_hi = max(hi, 3)
    else:
        warnings.warn(
            f"log_zeta_euler: tolerance {tol:g} unreachable at sigma={s.sigma} with table to n={n_hi}; "
            f"achieved budget {_full_tail(s.sigma, n_hi + 1):.3g}",
            ToleranceWarning,
            stacklevel=2,
        )
    ns = np.arange(3, n_hi + 1, dtype=np.int64)
    value = -_sum(_terms(table, ns, s.s))
    used = int(np.count_nonzero(table.m_float[: n_hi - 2]))
    return SeriesResult(value, used, _full_tail(s.sigma, n_hi + 1), _norm(n_hi + 1))


def euler_product_log(group, s, x: float, table: MultiplicityTable | None = None) -> complex:
    """``sum log(1 - N^(-s-k))`` over primitive classes with norm ``N < x`` and ``k >= 0``.

    Uses the primitive counts ``p(n)`` and the product definition directly,
    independently of the multiplicity series.
    """
    s = ComplexPoint.coerce(s).s
    n_hi = traces_below_cutoff(x)
    table = _table_for(group, table, n_hi)
    table.require(n_hi, "euler_product_log")
    re, im = [], []
    for n in range(3, n_hi + 1):
        pn = table.p[n]
        if not pn:
            continue
        logN = 2.0 * math.acosh(n / 2)
        k = 0
        while True:
            z = np.exp(-(s + k) * logN)
            term = pn * np.log1p(-z)
            re.append(term.real)
            im.append(term.imag)
            if abs(z) < 1e-18:
                break
            k += 1
    return complex(math.fsum(re), math.fsum(im))


def psi(group, s, x: float, table: MultiplicityTable | None = None) -> SeriesResult:
    """Smoothed sum ``sum_{3 <= n < X} m(n) Delta(n) (1 - eps(n)^2/x) eps(n)^(-2s)``.

    The budget bounds ``|psi + log Z|``: for ``Re s > 1`` it is the absolute
    smoothing correction plus the tail heuristic, for ``Re s < 1`` (and
    ``|Im s| >= 1``) the explicit-formula error shape.
    """
    s = ComplexPoint.coerce(s)
    n_hi = traces_below_cutoff(x)
    if n_hi < 3:
        return SeriesResult(0j, 0, math.inf, float(x))
    table = _table_for(group, table, n_hi)
    table.require(n_hi, f"psi at x={x:g}")
    coef, Ls = _smoothed_coefficients(table, x)
    value = _sum(coef * np.exp(-2.0 * s.s * Ls))
    L = table.log_eps[: n_hi - 2]
    if s.sigma > 1.0:
        smoothing = math.fsum((table.coefficients[: n_hi - 2] * np.exp((2.0 - 2.0 * s.sigma) * L) / x).tolist())
        budget = smoothing + _full_tail(s.sigma, n_hi + 1)
    elif abs(s.t) >= 1.0:
        budget = strip_budget(s.sigma, s.t, x)
    else:
        budget = math.inf
    return SeriesResult(value, len(coef), budget, float(x))


def _check_strip(s: ComplexPoint):
    lo, hi = STRIP_SIGMA
    if not (lo < s.sigma < hi):
        raise ValueError(f"strip evaluation needs 5/6 < Re s < 1, got {s.sigma}")
    if s.t < 1.0:
        raise ValueError(f"strip evaluation needs Im s >= 1, got {s.t}")


def default_strip_x(t: float) -> float:
    return max(1e6, float(t) ** 3)


def log_zeta_strip(group, s, x: float | None = None, table: MultiplicityTable | None = None) -> SeriesResult:
    """``log Z(s) ~ -psi(s, x)`` in ``5/6 < Re s < 1``, ``Im s >= 1``.

    ``x`` defaults to ``max(10^6, t^3)``.  The budget is the explicit-formula
    error shape with unit constants and ``eta = 0.1``.
    """
    s = ComplexPoint.coerce(s)
    _check_strip(s)
    if x is None:
        x = default_strip_x(s.t)
    r = psi(group, s, x, table)
    return SeriesResult(-r.value, r.terms_used, strip_budget(s.sigma, s.t, x), float(x))


def strip_values(table: MultiplicityTable, sigmas: np.ndarray, ts: np.ndarray, x: float) -> np.ndarray:
    """``-psi`` at many points, each accumulated with ``fsum`` (same values as :func:`log_zeta_strip`)."""
    terms = _smoothed_coefficients(table, x)
    coef, L = terms
    out = np.empty(len(sigmas), dtype=complex)
    for i, (sg, t) in enumerate(zip(sigmas, ts)):
        out[i] = -_sum(coef * np.exp(-2.0 * complex(sg, t) * L))
    return out


def _smoothed_coefficients(table: MultiplicityTable, x: float) -> tuple[np.ndarray, np.ndarray]:
    n_hi = traces_below_cutoff(x)
    table.require(n_hi, f"strip series at x={x:g}")
    L = table.log_eps[: n_hi - 2]
    coef = table.coefficients[: n_hi - 2] * (1.0 - np.exp(2.0 * L) / x)
    keep = coef != 0.0
    return coef[keep], L[keep]


def complement_tail(group, s, lo: int = 3, cutoff: int | None = None,
                    table: MultiplicityTable | None = None) -> SeriesResult:
    """``L(s; non-core traces >= lo)``, absolutely convergent for ``Re s > 3/4``.

    For SL2(Z) the sum may run past the dense table: non-core multiplicities
    are then computed from their unit towers.
    """
    s = ComplexPoint.coerce(s)
    if s.sigma <= 0.75:
        raise ValueError(f"non-core series needs Re s > 3/4, got {s.sigma}")
    group = GroupDescriptor.coerce(group)
    table = _table_for(group, table)
    cutoff = table.n_max if cutoff is None else int(cutoff)
    ns, coef, L = noncore_terms(group, lo, cutoff, table)
    value = _sum(coef * np.exp(-2.0 * s.s * L)) if len(ns) else 0j
    return SeriesResult(value, int(np.count_nonzero(coef)), _noncore_tail(s.sigma, max(cutoff + 1, lo)), _norm(max(cutoff + 1, lo)))


def noncore_terms(group, lo: int, cutoff: int, table: MultiplicityTable):
    """Non-core traces in ``[lo, cutoff]`` with coefficients ``m(n) Delta(n)`` and ``log eps(n)``."""
    group = GroupDescriptor.coerce(group)
    if cutoff > table.n_max and group.kind != "ModularGroup":
        raise CoverageError(f"non-core terms beyond n={table.n_max} are only available for SL2Z")
    ns = [r.n for r in build_core_index(max(cutoff, 3)).non_core if r.n >= lo]
    coef, L = [], []
    for n in ns:
        m = float(table.m[n]) if n <= table.n_max else float(tower_multiplicity(n)[1])
        le = math.acosh(n / 2)
        coef.append(m / -math.expm1(-2.0 * le))
        L.append(le)
    return np.array(ns, dtype=np.int64), np.array(coef), np.array(L)


@dataclass(frozen=True)
class MeanSquareResult:
    """Trapezoid estimate of ``(1/T) int_1^T |L(sigma + it; core >= Y)|^2 dt``."""

    value: float
    tail_budget: float
    cutoff: int
    step: float
    points: int

    def __float__(self):
        return float(self.value)


def mean_square(group, sigma: float, Y: float, T: float, step: float | None = None,
                cutoff: int | None = None, table: MultiplicityTable | None = None) -> MeanSquareResult:
    """Mean square of the core tail series ``L(sigma + it; core traces >= Y)`` over ``1 <= t <= T``.

    The inner series is truncated at ``cutoff`` (default: the table bound).
    ``step`` must resolve the fastest oscillation, ``pi / (2 log eps(cutoff))``;
    the default is half that.
    """
    if not 0.5 < sigma < 1.0:
        raise ValueError(f"sigma must lie in (1/2, 1), got {sigma}")
    if not (0 < Y < T**1.5):
        raise ValueError("need 0 < Y < T^(3/2)")
    table = _table_for(group, table)
    cutoff = table.n_max if cutoff is None else int(cutoff)
    table.require(cutoff, "mean_square")
    limit = math.pi / (2.0 * math.acosh(cutoff / 2))
    if step is None:
        step = limit / 2.0
    elif step > limit:
        raise ValueError(f"step {step} too coarse; must be <= {limit:.4g}")
    ns = IndexSet("Core", lo=int(math.ceil(Y))).resolve(cutoff)
    budget = _full_tail(2.0 * sigma, cutoff + 1)  # budget on the omitted squared mass
    if len(ns) == 0:
        return MeanSquareResult(0.0, budget, cutoff, step, 0)
    idx = ns - 3
    L = table.log_eps[idx]
    a = table.coefficients[idx] * np.exp(-2.0 * sigma * L)
    keep = a != 0.0
    a, L = a[keep], L[keep]
    npts = int(math.ceil((T - 1.0) / step)) + 1
    ts = np.linspace(1.0, T, npts)
    vals = np.empty(npts)
    chunk = max(1, 200_000 // max(len(L), 1))
    for i in range(0, npts, chunk):
        tt = ts[i : i + chunk]
        ph = np.exp(-2j * np.outer(tt, L))
        vals[i : i + chunk] = np.abs(ph @ a) ** 2
    h = (T - 1.0) / (npts - 1)
    integral = h * (math.fsum(vals.tolist()) - 0.5 * (vals[0] + vals[-1]))
    return MeanSquareResult(float(integral / T), budget, cutoff, h, npts)


def l2_to_sup_bound(l2_mass: float, d: float) -> float:
    """``(1/d) sqrt(l2_mass / pi)``: sup over K from the area integral over a rectangle ``d`` away."""
    if d <= 0:
        raise ValueError("d must be positive")
    if l2_mass < 0:
        raise ValueError("l2_mass must be non-negative")
    return math.sqrt(l2_mass / math.pi) / d
