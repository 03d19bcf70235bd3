"""Trace sets of congruence subgroups and covering data over PSL2(Z/N).

Trace sets are finite unions of residue classes above a floor, with a finite
exception list; the class is closed under the boolean operations, which is
all that is needed to decide the ordering condition for joint universality.

For the principal congruence subgroup ``Gamma(N)`` (containing ``-I``), a
primitive SL2(Z) class whose image in ``G = PSL2(Z/N)`` has order ``f``
splits into ``|G| / f`` primitive ``Gamma(N)`` classes, each of trace
``lucas_trace(n0, f)``.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache, reduce as _fold

from sympy import primefactors

from .class_numbers import CoverageError, MultiplicityTable, class_rep_matrices, ConjClassRep
from .quad_core import check_trace, lucas_trace, traces_below_cutoff

__all__ = [
    "TraceSetDescriptor",
    "GroupDescriptor",
    "FrobeniusData",
    "trace_set",
    "hat_sets",
    "check_sets",
    "condition_check",
    "psl2_element_order",
    "psl2_group_order",
    "psl2_elements",
    "psl2_conjugacy_classes",
    "frobenius_data",
    "congruence_multiplicity_table",
    "chebotarev_count",
]


def _lcm(a: int, b: int) -> int:
    return a * b // math.gcd(a, b)


@dataclass(frozen=True)
class TraceSetDescriptor:
    """``{n >= floor : n mod modulus in residues} minus exceptions``."""

    modulus: int = 1
    residues: frozenset = frozenset({0})
    floor: int = 3
    exceptions: frozenset = frozenset()

    def __post_init__(self):
        if self.modulus < 1:
            raise ValueError("modulus must be >= 1")
        object.__setattr__(self, "residues", frozenset(r % self.modulus for r in self.residues))
        object.__setattr__(self, "exceptions", frozenset(int(e) for e in self.exceptions))

    @classmethod
    def all_traces(cls, floor: int = 3) -> "TraceSetDescriptor":
        return cls(1, frozenset({0}), floor)

    @classmethod
    def plus_minus_two(cls, M: int) -> "TraceSetDescriptor":
        """``{n >= 3 : n = +-2 mod M}``."""
        return cls(M, frozenset({2 % M, -2 % M}), 3)

    def __contains__(self, n) -> bool:
        return n >= self.floor and n % self.modulus in self.residues and n not in self.exceptions

    def members(self, lo: int, hi: int) -> list[int]:
        """Members in ``[lo, hi)``."""
        return [n for n in range(max(lo, self.floor), hi) if n in self]

    @property
    def _stable_from(self) -> int:
        """Membership is purely periodic from here on."""
        return max([self.floor] + [e + 1 for e in self.exceptions])

    def _combine(self, other: "TraceSetDescriptor", op, floor: int) -> "TraceSetDescriptor":
        L = _lcm(self.modulus, other.modulus)
        residues = frozenset(r for r in range(L) if op(r % self.modulus in self.residues, r % other.modulus in other.residues))
        start = max(self._stable_from, other._stable_from)
        exceptions = frozenset(
            n
            for n in range(floor, start)
            if n % L in residues and not op(n in self, n in other)
        )
        return TraceSetDescriptor(L, residues, floor, exceptions)

    def __and__(self, other):
        return self._combine(other, lambda a, b: a and b, max(self.floor, other.floor))

    def __or__(self, other):
        return self._combine(other, lambda a, b: a or b, min(self.floor, other.floor))

    def __sub__(self, other):
        return self._combine(other, lambda a, b: a and not b, self.floor)

    def smallest(self) -> int | None:
        """Smallest member, or ``None`` when the set is empty (one period is enough)."""
        for n in range(self.floor, self._stable_from + self.modulus):
            if n in self:
                return n
        return None

    def is_empty(self) -> bool:
        return self.smallest() is None

    def equivalent(self, other: "TraceSetDescriptor") -> bool:
        """Same set of integers."""
        L = _lcm(self.modulus, other.modulus)
        lo = min(self.floor, other.floor)
        hi = max(self._stable_from, other._stable_from) + L
        return all((n in self) == (n in other) for n in range(lo, hi))

    def to_dict(self) -> dict:
        return {
            "modulus": self.modulus,
            "residues": sorted(self.residues),
            "floor": self.floor,
            "exceptions": sorted(self.exceptions),
        }


_KINDS = ("ModularGroup", "PrincipalCongruence", "CustomTraceSet")


@dataclass(frozen=True)
class GroupDescriptor:
    """SL2(Z), a principal congruence subgroup ``Gamma(N)``, or a bare trace set."""

    kind: str
    N: int | None = None
    descriptor: TraceSetDescriptor | None = None
    label: str | None = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown group kind {self.kind!r}")
        if self.kind == "PrincipalCongruence" and (self.N is None or self.N < 2):
            raise ValueError("PrincipalCongruence needs N >= 2")
        if self.kind == "CustomTraceSet" and self.descriptor is None:
            raise ValueError("CustomTraceSet needs a descriptor")

    @classmethod
    def modular(cls) -> "GroupDescriptor":
        return cls("ModularGroup")

    @classmethod
    def principal(cls, N: int) -> "GroupDescriptor":
        return cls("PrincipalCongruence", N=int(N))

    @classmethod
    def gamma1_bar(cls, M: int) -> "GroupDescriptor":
        """``{gamma = +-[[1, *], [0, 1]] mod M}``, described by its trace set ``n = +-2 mod M``."""
        return cls("CustomTraceSet", descriptor=TraceSetDescriptor.plus_minus_two(M), label=f"Gamma1({M})")

    @classmethod
    def parse(cls, text: str) -> "GroupDescriptor":
        """``SL2Z``, ``Gamma(N)`` or ``Gamma1(M)``."""
        t = text.strip().replace(" ", "")
        low = t.lower()
        if low in ("sl2z", "sl2(z)", "psl2z", "modular"):
            return cls.modular()
        for prefix, make in (("gamma1(", cls.gamma1_bar), ("gamma(", cls.principal)):
            if low.startswith(prefix) and low.endswith(")"):
                try:
                    return make(int(t[len(prefix) : -1]))
                except ValueError as exc:
                    raise ValueError(f"cannot parse group {text!r}") from exc
        raise ValueError(f"cannot parse group {text!r}")

    @classmethod
    def coerce(cls, group) -> "GroupDescriptor":
        if isinstance(group, GroupDescriptor):
            return group
        if isinstance(group, str):
            return cls.parse(group)
        if isinstance(group, dict):
            return cls.from_dict(group)
        raise TypeError(f"cannot interpret {group!r} as a group")

    def __str__(self):
        if self.kind == "ModularGroup":
            return "SL2Z"
        if self.kind == "PrincipalCongruence":
            return f"Gamma({self.N})"
        return self.label or "Custom"

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        if self.N is not None:
            out["N"] = self.N
        if self.descriptor is not None:
            out.update(self.descriptor.to_dict())
        if self.label:
            out["label"] = self.label
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "GroupDescriptor":
        kind = data["kind"]
        if kind == "ModularGroup":
            return cls.modular()
        if kind == "PrincipalCongruence":
            return cls.principal(data["N"])
        desc = TraceSetDescriptor(
            int(data.get("modulus", 1)),
            frozenset(data.get("residues", [0])),
            int(data.get("floor", 3)),
            frozenset(data.get("exceptions", [])),
        )
        return cls("CustomTraceSet", descriptor=desc, label=data.get("label"))


def trace_set(group) -> TraceSetDescriptor:
    """Traces ``> 2`` of hyperbolic elements of the group."""
    group = GroupDescriptor.coerce(group)
    if group.kind == "ModularGroup":
        return TraceSetDescriptor.all_traces()
    if group.kind == "PrincipalCongruence":
        return TraceSetDescriptor.plus_minus_two(group.N**2)
    return group.descriptor


def hat_sets(groups) -> list[TraceSetDescriptor]:
    """``T_j`` minus the union of ``T_i`` for ``i < j``."""
    groups = [GroupDescriptor.coerce(g) for g in groups]
    if not groups:
        raise ValueError("need at least one group")
    out = []
    seen = None
    for g in groups:
        ts = trace_set(g)
        out.append(ts if seen is None else ts - seen)
        seen = ts if seen is None else seen | ts
    return out


def check_sets(groups) -> list[TraceSetDescriptor]:
    """``T_j`` intersected with the union of ``T_i`` for ``i < j`` (traces already seen)."""
    groups = [GroupDescriptor.coerce(g) for g in groups]
    out = []
    seen = None
    for g in groups:
        ts = trace_set(g)
        out.append(TraceSetDescriptor(1, frozenset(), 3) if seen is None else ts & seen)
        seen = ts if seen is None else seen | ts
    return out


@dataclass(frozen=True)
class ConditionResult:
    ok: tuple[bool, ...]
    witnesses: tuple[int | None, ...]

    @property
    def holds(self) -> bool:
        return all(self.ok)

    @property
    def first_failure(self) -> int | None:
        """1-based index of the first empty hat set."""
        for j, ok in enumerate(self.ok, start=1):
            if not ok:
                return j
        return None


def condition_check(groups) -> ConditionResult:
    """Non-emptiness of every hat set, with the smallest witness trace."""
    witnesses = tuple(h.smallest() for h in hat_sets(groups))
    return ConditionResult(tuple(w is not None for w in witnesses), witnesses)


# ---------------------------------------------------------------------------
# PSL2(Z/N)


Mat = tuple[int, int, int, int]


def _mul(A: Mat, B: Mat, N: int) -> Mat:
    a, b, c, d = A
    e, f, g, h = B
    return ((a * e + b * g) % N, (a * f + b * h) % N, (c * e + d * g) % N, (c * f + d * h) % N)


def _canon(M: Mat, N: int) -> Mat:
    """Representative of ``{M, -M}`` mod N."""
    A = tuple(v % N for v in M)
    B = tuple(-v % N for v in M)
    return min(A, B)


def _flatten(M) -> Mat:
    if len(M) == 2:
        (a, b), (c, d) = M
        return (int(a), int(b), int(c), int(d))
    a, b, c, d = M
    return (int(a), int(b), int(c), int(d))


def psl2_element_order(M, N: int) -> int:
    """Least ``f >= 1`` with ``M^f = +-I`` mod ``N``."""
    if N < 2:
        raise ValueError("N must be >= 2")
    M = _flatten(M)
    a, b, c, d = M
    if (a * d - b * c - 1) % N:
        raise ValueError(f"det of {M} is not 1 mod {N}")
    ident = _canon((1, 0, 0, 1), N)
    P = _canon(M, N)
    f = 1
    while P != ident:
        P = _canon(_mul(P, M, N), N)
        f += 1
    return f


@lru_cache(maxsize=None)
def psl2_group_order(N: int) -> int:
    """``|SL2(Z/N)|`` halved when ``-I != I`` (``N > 2``)."""
    if N < 2:
        raise ValueError("N must be >= 2")
    order = Fraction(N**3)
    for p in primefactors(N):
        order *= 1 - Fraction(1, p * p)
    order = int(order)
    return order // 2 if N > 2 else order


@lru_cache(maxsize=None)
def psl2_elements(N: int) -> tuple[Mat, ...]:
    """Canonical representatives of PSL2(Z/N) by brute-force enumeration."""
    seen = set()
    for M in itertools.product(range(N), repeat=4):
        a, b, c, d = M
        if (a * d - b * c) % N == 1:
            seen.add(_canon(M, N))
    return tuple(sorted(seen))


def _inverse(M: Mat, N: int) -> Mat:
    a, b, c, d = M
    return (d % N, -b % N, -c % N, a % N)


@lru_cache(maxsize=None)
def psl2_conjugacy_classes(N: int) -> tuple[tuple[Mat, ...], ...]:
    """Conjugacy classes of PSL2(Z/N), each sorted, in order of their smallest element."""
    elems = psl2_elements(N)
    left = set(elems)
    classes = []
    for g in elems:
        if g not in left:
            continue
        cls = {_canon(_mul(_mul(h, g, N), _inverse(h, N), N), N) for h in elems}
        left -= cls
        classes.append(tuple(sorted(cls)))
    return tuple(classes)


@lru_cache(maxsize=None)
def _class_index(N: int) -> dict:
    return {g: i for i, cls in enumerate(psl2_conjugacy_classes(N)) for g in cls}


def conjugacy_class_of(M, N: int) -> int:
    """Index into :func:`psl2_conjugacy_classes` of the image of ``M``."""
    return _class_index(N)[_canon(_flatten(M), N)]


@dataclass(frozen=True)
class FrobeniusData:
    """Image of a primitive SL2(Z) class in PSL2(Z/N) and its lifts to ``Gamma(N)``."""

    n0: int
    rep: ConjClassRep
    N: int
    f: int
    lift_count: int
    lifted_trace: int


def frobenius_data(rep: ConjClassRep, N: int) -> FrobeniusData:
    f = psl2_element_order(rep.matrix, N)
    G = psl2_group_order(N)
    if G % f:
        raise ArithmeticError(f"element order {f} does not divide |G| = {G}")
    lifted = lucas_trace(rep.trace, f)
    return FrobeniusData(n0=rep.trace, rep=rep, N=N, f=f, lift_count=G // f, lifted_trace=lifted)


def _base_traces_for(n_max: int) -> range:
    return range(3, n_max + 1)


def congruence_multiplicity_table(N: int, n_max: int, *, return_frobenius: bool = False):
    """``m`` and ``p`` for ``Gamma(N)`` from the lifts of every primitive SL2(Z) class.

    A base class of trace ``n0`` and image order ``f`` contributes
    ``|G|/f`` primitive classes of trace ``lucas_trace(n0, f)`` and, through
    their ``j``-th powers, ``(|G|/f) / j`` to ``m(lucas_trace(n0, f j))``.
    """
    group = GroupDescriptor.principal(N)
    if n_max < 3:
        raise ValueError("n_max must be >= 3")
    p = {n: 0 for n in range(3, n_max + 1)}
    m = {n: Fraction(0) for n in range(3, n_max + 1)}
    frob = []
    for n0 in _base_traces_for(n_max):
        for rep in class_rep_matrices(n0):
            fd = frobenius_data(rep, N)
            if fd.lifted_trace > n_max:
                continue
            if return_frobenius:
                frob.append(fd)
            p[fd.lifted_trace] += fd.lift_count
            j = 1
            t = fd.lifted_trace
            while t <= n_max:
                m[t] += Fraction(fd.lift_count, j)
                j += 1
                t = lucas_trace(n0, fd.f * j)
    table = MultiplicityTable(group, n_max, m, p)
    if return_frobenius:
        return table, frob
    return table


def _target_class(target, N: int) -> int:
    if isinstance(target, int):
        return target
    return conjugacy_class_of(target, N)


def chebotarev_count(N: int, target, x: float) -> int:
    """Primitive SL2(Z) classes of norm ``< x`` whose image in PSL2(Z/N) is conjugate to ``target``.

    ``target`` is a matrix (any representative mod N) or a class index.
    """
    counts = chebotarev_counts(N, x)
    return counts.get(_target_class(target, N), 0)


@lru_cache(maxsize=64)
def chebotarev_counts(N: int, x: float) -> dict[int, int]:
    """Counts per conjugacy class of PSL2(Z/N) for primitive classes of norm ``< x``."""
    if N < 2:
        raise ValueError("N must be >= 2")
    n_hi = traces_below_cutoff(x)
    out: Counter = Counter()
    for n0 in range(3, n_hi + 1):
        for rep in class_rep_matrices(n0):
            out[conjugacy_class_of(rep.matrix, N)] += 1
    return dict(out)
