"""Narrow class numbers of indefinite binary quadratic forms and SL2(Z) trace data.

Conjugacy classes of SL2(Z) with trace ``n > 2`` correspond to proper
equivalence classes of (not necessarily primitive) forms of discriminant
``n^2 - 4`` via ``[[p, q], [r, s]] -> (r, s - p, -q)``.  Counting those
classes, discarding proper powers, and weighting powers by ``1/j`` yields the
multiplicities ``m(n)`` that feed every Dirichlet series in this package.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache
from math import gcd, isqrt

import numpy as np
from scipy import integrate
from sympy import factorint

from .quad_core import check_trace, core_base, delta, log_epsilon, lucas_trace, lucas_u, traces_below_cutoff

__all__ = [
    "QuadForm",
    "ReductionCycle",
    "MultiplicityTable",
    "ConjClassRep",
    "CoverageError",
    "is_discriminant",
    "reduce",
    "is_reduced",
    "rho",
    "class_cycles",
    "narrow_class_number",
    "order_class_number",
    "fundamental_part",
    "total_class_count",
    "primitive_class_count",
    "multiplicity_table",
    "tower_multiplicity",
    "representative_matrix",
    "class_representatives",
    "pi_gamma",
    "li",
]


class CoverageError(ValueError):
    """A request needs trace data beyond what a table covers."""


def is_discriminant(D: int) -> bool:
    """Positive non-square ``D`` congruent to 0 or 1 mod 4."""
    return D > 0 and D % 4 in (0, 1) and isqrt(D) ** 2 != D


def _check_disc(D) -> int:
    if int(D) != D:
        raise ValueError(f"discriminant must be an integer, got {D!r}")
    D = int(D)
    if D <= 0 or isqrt(D) ** 2 == D:
        raise ValueError(f"discriminant must be positive and non-square, got {D}")
    return D


@dataclass(frozen=True, order=True)
class QuadForm:
    """The form ``a x^2 + b x y + c y^2``."""

    a: int
    b: int
    c: int

    @property
    def D(self) -> int:
        return self.b * self.b - 4 * self.a * self.c

    @property
    def content(self) -> int:
        return gcd(gcd(self.a, self.b), self.c)

    @property
    def is_primitive(self) -> bool:
        return self.content == 1

    def __iter__(self):
        yield self.a
        yield self.b
        yield self.c

    def __repr__(self):
        return f"QuadForm({self.a}, {self.b}, {self.c})"


@dataclass(frozen=True)
class ReductionCycle:
    """Reduced forms closed under :func:`rho`, starting from the smallest one."""

    forms: tuple[QuadForm, ...]

    def __len__(self):
        return len(self.forms)

    def __contains__(self, form) -> bool:
        return QuadForm(*form) in self.forms


@dataclass(frozen=True)
class ConjClassRep:
    """Matrix ``[[p, q], [r, s]]`` of an SL2(Z) conjugacy class and its source form."""

    p: int
    q: int
    r: int
    s: int
    form: QuadForm

    @property
    def trace(self) -> int:
        return self.p + self.s

    @property
    def matrix(self) -> tuple[tuple[int, int], tuple[int, int]]:
        return ((self.p, self.q), (self.r, self.s))

    def associated_form(self) -> QuadForm:
        return QuadForm(self.r, self.s - self.p, -self.q)


# ---------------------------------------------------------------------------
# reduction theory


def is_reduced(form) -> bool:
    """``0 < b < sqrt(D)`` and ``sqrt(D) - b < 2|a| < sqrt(D) + b``."""
    a, b, c = form
    D = b * b - 4 * a * c
    r = isqrt(D)
    if not (0 < b <= r) or a == 0:
        return False
    t = 2 * abs(a)
    return (t + b) ** 2 > D and t - b <= r


def _rho(a: int, b: int, c: int, D: int, r: int) -> tuple[int, int, int]:
    ac = abs(c)
    m2 = 2 * ac
    if ac > r:
        # -|c| < b' <= |c|
        bp = (-b) % m2
        if bp > ac:
            bp -= m2
    else:
        # sqrt(D) - 2|c| < b' < sqrt(D): the largest b' <= r in the class
        bp = (-b) % m2
        bp += ((r - bp) // m2) * m2
    return c, bp, (bp * bp - D) // (4 * c)


def rho(form) -> QuadForm:
    """One reduction step ``(a, b, c) -> (c, b', (b'^2 - D) / 4c)``, ``b' = -b mod 2c``.

    It is the action of ``[[0, -1], [1, k]]`` and hence preserves proper
    equivalence.  On reduced forms it permutes the reduced forms of ``D``.
    """
    a, b, c = form
    D = _check_disc(b * b - 4 * a * c)
    if c == 0:
        raise ValueError("form represents zero; discriminant would be a square")
    return QuadForm(*_rho(a, b, c, D, isqrt(D)))


def reduce(form) -> QuadForm:
    """A reduced form properly equivalent to ``form`` (indefinite, non-square D)."""
    a, b, c = (int(v) for v in form)
    D = _check_disc(b * b - 4 * a * c)
    r = isqrt(D)
    if a == 0 or c == 0:
        raise ValueError("form represents zero; discriminant would be a square")
    while not is_reduced((a, b, c)):
        a, b, c = _rho(a, b, c, D, r)
    return QuadForm(a, b, c)


class _Sieve:
    """Growable smallest-prime-factor table."""

    def __init__(self):
        self.spf = np.zeros(0, dtype=np.int64)
        self._list: list[int] = []

    def ensure(self, n: int):
        if n < len(self.spf):
            return
        size = max(n + 1, 2 * len(self.spf), 1 << 16)
        spf = np.arange(size, dtype=np.int64)
        for i in range(2, isqrt(size - 1) + 1):
            if spf[i] == i:
                block = spf[i * i :: i]
                mask = block == np.arange(i * i, size, i)
                block[mask] = i
        self.spf = spf
        self._list = spf.tolist()

    def divisors(self, m: int) -> list[int]:
        self.ensure(m)
        spf = self._list
        ds = [1]
        while m > 1:
            p = spf[m]
            e = 0
            while m % p == 0:
                m //= p
                e += 1
            pk = [p**i for i in range(1, e + 1)]
            ds = ds + [d * q for q in pk for d in ds]
        return ds


_SIEVE = _Sieve()


def _reduced_forms(D: int) -> list[tuple[int, int, int]]:
    """All reduced primitive forms of discriminant ``D``."""
    r = isqrt(D)
    _SIEVE.ensure((D - 1) // 4)
    out = []
    for b in range(2 - D % 2, r + 1, 2):
        m = (D - b * b) // 4
        for d in _SIEVE.divisors(m):
            t = 2 * d
            if (t + b) ** 2 > D and t - b <= r:
                c = m // d
                if gcd(gcd(d, b), c) == 1:
                    out.append((d, b, -c))
                    out.append((-d, b, c))
    return out


@lru_cache(maxsize=4096)
def _cycles(D: int) -> tuple[tuple[tuple[int, int, int], ...], ...]:
    r = isqrt(D)
    forms = _reduced_forms(D)
    seen: set = set()
    cycles = []
    for f in forms:
        if f in seen:
            continue
        cyc = []
        g = f
        while g not in seen:
            seen.add(g)
            cyc.append(g)
            g = _rho(*g, D, r)
        i = cyc.index(min(cyc))
        cycles.append(tuple(cyc[i:] + cyc[:i]))
    cycles.sort()
    return tuple(cycles)


def _check_form_disc(D) -> int:
    D = _check_disc(D)
    if D % 4 not in (0, 1):
        raise ValueError(f"{D} is not a discriminant (must be 0 or 1 mod 4)")
    return D


def class_cycles(D) -> list[ReductionCycle]:
    """Reduced primitive forms of discriminant ``D`` partitioned into :func:`rho` cycles.

    The number of cycles is the narrow class number ``h+(D)``.
    """
    D = _check_form_disc(D)
    return [ReductionCycle(tuple(QuadForm(*f) for f in cyc)) for cyc in _cycles(D)]


@lru_cache(maxsize=None)
def narrow_class_number(D) -> int:
    """``h+(D)``, the number of proper classes of primitive forms of discriminant ``D``."""
    return len(_cycles(_check_form_disc(D)))


def class_representatives(D) -> list[QuadForm]:
    """One reduced primitive form per narrow class, in canonical order."""
    return [QuadForm(*cyc[0]) for cyc in _cycles(_check_form_disc(D))]


# ---------------------------------------------------------------------------
# orders in a fixed real quadratic field


def _kronecker(D: int, p: int) -> int:
    if p == 2:
        if D % 2 == 0:
            return 0
        return 1 if D % 8 in (1, 7) else -1
    r = pow(D % p, (p - 1) // 2, p)
    return -1 if r == p - 1 else r


@lru_cache(maxsize=None)
def fundamental_part(n: int) -> tuple[int, int]:
    """``(D0, F)`` with ``n^2 - 4 = D0 * F^2`` and ``D0`` a fundamental discriminant."""
    n = check_trace(n)
    fac = factorint(n - 2)
    for p, e in factorint(n + 2).items():
        fac[p] = fac.get(p, 0) + e
    sq, F = 1, 1
    for p, e in fac.items():
        if e % 2:
            sq *= p
        F *= p ** (e // 2)
    if sq % 4 == 1:
        return sq, F
    # sq is 2 or 3 mod 4, so D0 = 4 sq needs F even
    return 4 * sq, F // 2


def order_class_number(D0: int, f: int, core_trace: int) -> int:
    """``h+(D0 f^2)`` from the maximal order via the conductor formula.

    ``eps(core_trace)`` must be the fundamental totally positive unit of the
    maximal order of discriminant ``D0`` (true for every core trace whose
    discriminant has fundamental part ``D0``).  Then
    ``h+(D0 f^2) = h+(D0) * f * prod_{p | f}(1 - (D0/p)/p) / k_f`` where
    ``k_f`` is the least ``j`` with ``eps^j`` in the order of conductor ``f``.
    """
    psi = Fraction(f)
    for p in factorint(f):
        psi *= 1 - Fraction(_kronecker(D0, p), p)
    u1 = isqrt((core_trace * core_trace - 4) // D0)
    # (t_j + u1 U_j sqrt(D0)) / 2 lies in the order iff f | u1 U_j
    a, b, j = 0, 1, 1
    while (u1 * b) % f:
        a, b = b, (core_trace * b - a) % f
        j += 1
    h = psi * narrow_class_number(D0) / j
    if h.denominator != 1:
        raise ArithmeticError(f"non-integral class number for D0={D0}, f={f}")
    return int(h)


def _square_divisors(n: int) -> list[int]:
    """All ``g`` with ``(n^2 - 4) / g^2`` a discriminant, i.e. the divisors of ``F``."""
    _, F = fundamental_part(n)
    return sorted(int(d) for d in _divisors_of(F))


def _divisors_of(m: int) -> list[int]:
    ds = [1]
    for p, e in factorint(m).items():
        ds = ds + [d * p**i for i in range(1, e + 1) for d in ds]
    return ds


# ---------------------------------------------------------------------------
# SL2(Z) conjugacy data


def total_class_count(n) -> int:
    """Number of SL2(Z) conjugacy classes of trace ``n`` (all form contents)."""
    n = check_trace(n)
    D = n * n - 4
    return sum(narrow_class_number(D // (g * g)) for g in _square_divisors(n))


def _power_pairs(n: int) -> list[tuple[int, int]]:
    """All ``(n0, k)`` with ``k >= 2`` and ``lucas_trace(n0, k) == n``."""
    nc, K = core_base(n)
    return [(lucas_trace(nc, j), K // j) for j in range(1, K) if K % j == 0]


def primitive_class_count(n) -> int:
    """Primitive classes of trace ``n``, counted form-by-form.

    A class with form content ``g`` is ``gamma0**k`` exactly when some
    ``lucas_trace(n0, k) == n`` has ``U_k(n0) | g``; this is an independent
    route to the recursion used by :func:`multiplicity_table`.
    """
    n = check_trace(n)
    D = n * n - 4
    us = [lucas_u(n0, k) for n0, k in _power_pairs(n)]
    return sum(
        narrow_class_number(D // (g * g))
        for g in _square_divisors(n)
        if not any(g % u == 0 for u in us)
    )


def representative_matrix(form, n) -> ConjClassRep:
    """``[[(n - b)/2, -c], [a, (n + b)/2]]``: trace ``n``, determinant 1, form ``(a, b, c)``."""
    n = check_trace(n)
    form = QuadForm(*form)
    a, b, c = form
    if form.D != n * n - 4:
        raise ValueError(f"form {form} has discriminant {form.D}, expected {n * n - 4}")
    return ConjClassRep(p=(n - b) // 2, q=-c, r=a, s=(n + b) // 2, form=form)


def class_rep_matrices(n: int, primitive_only: bool = True) -> list[ConjClassRep]:
    """One matrix per SL2(Z) class of trace ``n`` (optionally only primitive classes)."""
    n = check_trace(n)
    D = n * n - 4
    us = [lucas_u(n0, k) for n0, k in _power_pairs(n)] if primitive_only else []
    reps = []
    for g in _square_divisors(n):
        if any(g % u == 0 for u in us):
            continue
        for f in class_representatives(D // (g * g)):
            reps.append(representative_matrix((g * f.a, g * f.b, g * f.c), n))
    return reps


@dataclass(frozen=True)
class MultiplicityTable:
    """``m(n)`` (exact rationals) and primitive class counts ``p(n)`` for ``3 <= n <= n_max``.

    ``group`` is a :class:`~selberg_zeta.congruence.GroupDescriptor`.  Traces
    outside the group's trace set carry ``m = p = 0``.
    """

    group: object
    n_max: int
    m: dict = field(repr=False)
    p: dict = field(repr=False)

    def covers(self, n: float) -> bool:
        return n <= self.n_max

    def require(self, n_hi: float, what: str = "request"):
        if n_hi > self.n_max:
            raise CoverageError(f"{what} needs traces up to {n_hi}, table covers {self.n_max}")

    @cached_property
    def traces(self) -> np.ndarray:
        return np.arange(3, self.n_max + 1, dtype=np.int64)

    @cached_property
    def m_float(self) -> np.ndarray:
        return np.array([float(self.m[n]) for n in range(3, self.n_max + 1)])

    @cached_property
    def log_eps(self) -> np.ndarray:
        return np.arccosh(self.traces / 2.0)

    @cached_property
    def delta(self) -> np.ndarray:
        return -1.0 / np.expm1(-2.0 * self.log_eps)

    @cached_property
    def coefficients(self) -> np.ndarray:
        """``m(n) * Delta(n)`` as floats."""
        return self.m_float * self.delta

    def truncated(self, n_max: int) -> "MultiplicityTable":
        if n_max > self.n_max:
            raise CoverageError(f"cannot extend table from {self.n_max} to {n_max}")
        keep = range(3, n_max + 1)
        return MultiplicityTable(self.group, n_max, {n: self.m[n] for n in keep}, {n: self.p[n] for n in keep})

    def __eq__(self, other):
        if not isinstance(other, MultiplicityTable):
            return NotImplemented
        return (self.group, self.n_max, self.m, self.p) == (other.group, other.n_max, other.m, other.p)

    def __hash__(self):
        return hash((self.group, self.n_max))


def _sl2z_table(n_max: int) -> MultiplicityTable:
    from .congruence import GroupDescriptor

    p: dict[int, int] = {}
    m: dict[int, Fraction] = {}
    for n in range(3, n_max + 1):
        pairs = _power_pairs(n)
        p[n] = total_class_count(n) - sum(p[n0] for n0, _ in pairs)
        m[n] = Fraction(p[n]) + sum((Fraction(p[n0], k) for n0, k in pairs), Fraction(0))
    return MultiplicityTable(GroupDescriptor.modular(), n_max, m, p)


_TABLE_CACHE: dict = {}


_TRUNCATED: dict = {}


def multiplicity_table(group=None, n_max: int = 100) -> MultiplicityTable:
    """Tabulate ``m(n)`` and ``p(n)`` for ``3 <= n <= n_max``.

    SL2(Z) is handled here; principal congruence subgroups are dispatched to
    :func:`selberg_zeta.congruence.congruence_multiplicity_table`.  Tables
    are cached per group, and a larger cached table serves smaller requests.
    """
    from .congruence import GroupDescriptor, congruence_multiplicity_table

    if group is None:
        group = GroupDescriptor.modular()
    group = GroupDescriptor.coerce(group)
    n_max = int(n_max)
    if n_max < 3:
        raise ValueError(f"n_max must be >= 3, got {n_max}")
    cached = _TABLE_CACHE.get(group)
    if cached is not None and cached.n_max >= n_max:
        if cached.n_max == n_max:
            return cached
        key = (group, n_max)
        if key not in _TRUNCATED or _TRUNCATED[key][0] is not cached:
            _TRUNCATED[key] = (cached, cached.truncated(n_max))
        return _TRUNCATED[key][1]
    if group.kind == "ModularGroup":
        table = _sl2z_table(n_max)
    elif group.kind == "PrincipalCongruence":
        table = congruence_multiplicity_table(group.N, n_max)
    else:
        raise ValueError("custom trace sets carry no multiplicities; supply a table explicitly")
    _TABLE_CACHE[group] = table
    return table


@lru_cache(maxsize=None)
def _tower_primitive(nc: int, j: int) -> int:
    """``p(lucas_trace(nc, j))`` for a core ``nc`` using only field-level data."""
    n = lucas_trace(nc, j)
    D0, F = fundamental_part(n)
    c = sum(order_class_number(D0, f, nc) for f in _divisors_of(F))
    return c - sum(_tower_primitive(nc, i) for i in range(1, j) if j % i == 0)


def tower_multiplicity(n) -> tuple[int, Fraction]:
    """``(p(n), m(n))`` for SL2(Z) at any trace, through its unit tower.

    Only the class number of the maximal order is computed from reduction
    cycles; every order in the tower comes from the conductor formula.  This
    keeps sparse (typically non-core) traces far beyond dense tables cheap.
    """
    nc, K = core_base(n)
    p = _tower_primitive(nc, K)
    m = sum((Fraction(_tower_primitive(nc, j) * j, K) for j in range(1, K + 1) if K % j == 0), Fraction(0))
    return p, m


# ---------------------------------------------------------------------------
# prime geodesic counting


def pi_gamma(x: float, table: MultiplicityTable) -> int:
    """Number of primitive classes with norm ``eps(n)^2 < x``."""
    n_hi = traces_below_cutoff(x)
    if n_hi < 3:
        return 0
    table.require(n_hi, f"pi_gamma({x})")
    return sum(table.p[n] for n in range(3, n_hi + 1))


def li(x: float) -> float:
    """Offset logarithmic integral ``int_2^x dt / log t``."""
    if not x >= 2:
        raise ValueError(f"li needs x >= 2, got {x}")
    if x == 2:
        return 0.0
    # substitute t = e^u to tame the integrand; split the range for accuracy
    lo, hi = math.log(2.0), math.log(x)
    pts = np.linspace(lo, hi, 9)
    total = 0.0
    for a, b in zip(pts[:-1], pts[1:]):
        val, _ = integrate.quad(lambda u: math.exp(u) / u, a, b, epsabs=0.0, epsrel=1e-13, limit=200)
        total += val
    return total
