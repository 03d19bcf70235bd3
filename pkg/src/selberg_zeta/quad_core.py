"""Units attached to hyperbolic traces and the power-free core trace set.

A trace ``n >= 3`` determines the unit ``eps(n) = (n + sqrt(n^2 - 4)) / 2`` of the
real quadratic order of discriminant ``n^2 - 4``.  A trace is *core* when its
unit is not a proper power ``eps(n0)**k`` (``k >= 2``) of another such unit;
the logarithms of core units are linearly independent over the rationals.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from functools import lru_cache
from math import isqrt

import mpmath

__all__ = [
    "UnitValue",
    "PowerRelation",
    "CoreTraceIndex",
    "check_trace",
    "epsilon",
    "log_epsilon",
    "delta",
    "lucas_trace",
    "lucas_u",
    "power_decomposition",
    "is_core",
    "build_core_index",
    "upper_cutoff",
    "core_base",
    "traces_below_cutoff",
    "IndependenceMargin",
    "independence_margin",
]

# float path is good to a few ulp; anything tighter goes through mpmath
_FLOAT_PRECISION = 1e-14


def check_trace(n) -> int:
    """Return ``n`` as an int after checking it is a hyperbolic trace (>= 3)."""
    if isinstance(n, bool) or int(n) != n:
        raise ValueError(f"trace must be an integer, got {n!r}")
    n = int(n)
    if n < 3:
        raise ValueError(f"trace must be >= 3, got {n}")
    return n


@dataclass(frozen=True)
class UnitValue:
    """``eps(n)`` and ``log eps(n)`` at a requested relative precision.

    ``disc`` is the exact integer ``n^2 - 4``.  When the precision is finer
    than double precision, ``eps``/``log_eps`` are :class:`mpmath.mpf`.
    """

    n: int
    eps: float
    log_eps: float
    requested_precision: float
    disc: int = field(repr=False, default=0)


@dataclass(frozen=True, order=True)
class PowerRelation:
    """``eps(n) == eps(n0) ** k`` with ``n0`` core and ``k >= 2``."""

    n: int
    n0: int
    k: int


def _digits_for(precision: float) -> int:
    return max(20, int(math.ceil(-math.log10(precision))) + 10)


def epsilon(n, precision: float = 1e-15) -> UnitValue:
    """Fundamental-unit value ``eps(n)`` with its logarithm.

    ``log eps(n) = acosh(n / 2)``, which avoids cancellation for large ``n``.
    """
    n = check_trace(n)
    if not (0 < precision <= 1e-6):
        raise ValueError(f"precision must lie in (0, 1e-6], got {precision}")
    disc = n * n - 4
    if precision >= _FLOAT_PRECISION and n < 2**50:
        log_eps = math.acosh(n / 2)
        eps = math.exp(log_eps)
    else:
        with mpmath.workdps(_digits_for(precision)):
            eps = (n + mpmath.sqrt(disc)) / 2
            log_eps = mpmath.log(eps)
    return UnitValue(n=n, eps=eps, log_eps=log_eps, requested_precision=precision, disc=disc)


@lru_cache(maxsize=None)
def log_epsilon(n: int) -> float:
    """Double-precision ``log eps(n)``."""
    return math.acosh(check_trace(n) / 2)


def delta(n) -> float:
    """Weight ``Delta(n) = 1 / (1 - eps(n)^-2)``; lies in ``(1, 1.25]``."""
    n = check_trace(n)
    # eps^-2 = exp(-2 acosh(n/2)); -expm1 keeps the denominator accurate
    return -1.0 / math.expm1(-2.0 * math.acosh(n / 2))


def lucas_trace(n0, k: int) -> int:
    """Trace of ``eps(n0)**k``: ``t_0 = 2, t_1 = n0, t_{j+1} = n0 t_j - t_{j-1}``."""
    n0 = check_trace(n0)
    if k < 0:
        raise ValueError("k must be >= 0")
    a, b = 2, n0
    for _ in range(k):
        a, b = b, n0 * b - a
    return a


def lucas_u(n0: int, k: int) -> int:
    """Companion sequence ``U_0 = 0, U_1 = 1, U_{j+1} = n0 U_j - U_{j-1}``.

    ``gamma**k = U_k gamma - U_{k-1} I`` for any matrix with trace ``n0`` and
    determinant one, and ``lucas_trace(n0, k)**2 - 4 == (n0**2 - 4) * U_k**2``.
    """
    a, b = 0, 1
    for _ in range(k):
        a, b = b, n0 * b - a
    return a


def _integer_root_trace(n: int, k: int) -> int | None:
    """The ``n0`` with ``lucas_trace(n0, k) == n``, if any."""
    # lucas_trace(., k) is strictly increasing, n0 ~ n ** (1/k)
    if n < 2**50:
        guess = round(2.0 * math.cosh(math.acosh(n / 2) / k))
    else:
        with mpmath.workdps(len(str(n)) // k + 20):
            guess = int(mpmath.nint(2 * mpmath.cosh(mpmath.acosh(mpmath.mpf(n) / 2) / k)))
    for n0 in range(max(3, guess - 2), guess + 3):
        t = lucas_trace(n0, k)
        if t == n:
            return n0
        if t > n:
            break
    return None


@lru_cache(maxsize=65536)
def power_decomposition(n) -> PowerRelation | None:
    """Canonical ``(n0, k)`` with ``eps(n) = eps(n0)**k``, ``n0`` core, or ``None``.

    The largest admissible exponent gives the smallest base, which is the
    core generator of the unit tower containing ``eps(n)``.
    """
    n = check_trace(n)
    # lucas_trace(3, k) >= 2**k, so k <= log2(n) + 1
    k_max = int(math.log2(n)) + 1
    for k in range(k_max, 1, -1):
        n0 = _integer_root_trace(n, k)
        if n0 is not None:
            return PowerRelation(n=n, n0=n0, k=k)
    return None


def is_core(n) -> bool:
    return power_decomposition(n) is None


def core_base(n) -> tuple[int, int]:
    """``(n_c, k)`` with ``n_c`` core and ``eps(n) = eps(n_c)**k`` (``k = 1`` for core n)."""
    rel = power_decomposition(n)
    if rel is None:
        return check_trace(n), 1
    return rel.n0, rel.k


@dataclass(frozen=True)
class CoreTraceIndex:
    """All non-core traces up to ``x`` with their canonical power relations."""

    x: int
    non_core: tuple[PowerRelation, ...]

    def __post_init__(self):
        object.__setattr__(self, "_traces", [r.n for r in self.non_core])

    def __contains__(self, n) -> bool:
        """Core-set membership for ``3 <= n <= x``."""
        return self.is_core(n)

    def is_core(self, n) -> bool:
        n = check_trace(n)
        if n > self.x:
            raise ValueError(f"trace {n} beyond index bound {self.x}")
        i = bisect.bisect_left(self._traces, n)
        return not (i < len(self._traces) and self._traces[i] == n)

    def relation(self, n) -> PowerRelation | None:
        i = bisect.bisect_left(self._traces, n)
        if i < len(self._traces) and self._traces[i] == n:
            return self.non_core[i]
        return None

    @property
    def non_core_traces(self) -> list[int]:
        return list(self._traces)

    def count_non_core(self, x: int | None = None) -> int:
        if x is None:
            return len(self._traces)
        return bisect.bisect_right(self._traces, x)


def build_core_index(x) -> CoreTraceIndex:
    """Enumerate every non-core trace ``<= x`` from the towers ``lucas_trace(n0, k)``."""
    if int(x) != x or x < 3:
        raise ValueError(f"x must be an integer >= 3, got {x!r}")
    x = int(x)
    best: dict[int, tuple[int, int]] = {}
    for n0 in range(3, isqrt(x + 2) + 1):
        a, b = n0, n0 * n0 - 2  # t_1, t_2
        k = 2
        while b <= x:
            # bases only grow with n0, so the first hit keeps the smallest base
            if b not in best:
                best[b] = (n0, k)
            a, b = b, n0 * b - a
            k += 1
    rels = tuple(PowerRelation(n=n, n0=n0, k=k) for n, (n0, k) in sorted(best.items()))
    return CoreTraceIndex(x=x, non_core=rels)


def upper_cutoff(x: float) -> float:
    """``X = sqrt(x) + 1/sqrt(x)``; an integer trace ``n`` has ``eps(n)^2 < x`` iff ``n < X``."""
    if not x > 0:
        raise ValueError(f"x must be positive, got {x}")
    r = math.sqrt(x)
    return r + 1.0 / r


def traces_below_cutoff(x: float) -> int:
    """Largest trace ``n`` with ``eps(n)^2 < x`` (2 when there is none)."""
    X = upper_cutoff(x)
    n = math.ceil(X) - 1
    # guard the float boundary with the exact comparison eps(n)^2 < x
    while n >= 3 and 2 * math.acosh(n / 2) >= math.log(x):
        n -= 1
    while 2 * math.acosh((n + 1) / 2) < math.log(x):
        n += 1
    return max(n, 2)


@dataclass(frozen=True)
class IndependenceMargin:
    """Smallest ``|sum k_i log eps(n_i)|`` found, with the vector ``{n_i: k_i}`` attaining it."""

    margin: object
    witness: dict
    digits: int
    combinations: int


def independence_margin(traces, coeff_bound: int = 5, support: int = 4, digits: int = 60) -> IndependenceMargin:
    """Minimum of ``|sum k_i log eps(n_i)|`` over nonzero integer vectors on ``traces``.

    Every vector with at most ``support`` nonzero entries in
    ``[-coeff_bound, coeff_bound]`` is a difference of two vectors with at most
    ``ceil(support / 2)`` such entries, so the smallest gap between sorted
    half-support sums bounds it from below.  The searched family is a
    superset (entries may reach ``2 * coeff_bound`` where the halves overlap).
    Logarithms are fixed-point integers at ``digits`` digits.
    """
    traces = sorted({check_trace(n) for n in traces})
    if coeff_bound < 1 or support < 1:
        raise ValueError("coeff_bound and support must be positive")
    half = (support + 1) // 2
    scale = mpmath.mpf(10) ** digits
    with mpmath.workdps(digits + 20):
        L = [int(mpmath.nint(mpmath.acosh(mpmath.mpf(n) / 2) * scale)) for n in traces]
    coeffs = [k for k in range(-coeff_bound, coeff_bound + 1) if k]
    values: list[tuple[int, tuple]] = [(0, ())]
    frontier = [(0, (), -1)]
    for _ in range(half):
        nxt = []
        for val, vec, last in frontier:
            for i in range(last + 1, len(traces)):
                for k in coeffs:
                    item = (val + k * L[i], vec + ((traces[i], k),), i)
                    nxt.append(item)
                    values.append(item[:2])
        frontier = nxt
    values.sort()
    best, pair = None, None
    for (a, va), (b, vb) in zip(values, values[1:]):
        gap = b - a
        if best is None or gap < best:
            best, pair = gap, (vb, va)
    witness: dict[int, int] = {}
    for n, k in pair[0]:
        witness[n] = witness.get(n, 0) + k
    for n, k in pair[1]:
        witness[n] = witness.get(n, 0) - k
    witness = {n: k for n, k in sorted(witness.items()) if k}
    with mpmath.workdps(digits + 20):
        margin = mpmath.mpf(best) / scale
    return IndependenceMargin(margin=margin, witness=witness, digits=digits, combinations=len(values))
