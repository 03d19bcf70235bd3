"""Shift sets, equidistribution of unit phases, and sup-norm shift scans.

A shift ``tau`` moves every term ``eps(n)^(-2s)`` by the phase
``exp(-2 i tau log eps(n))``; on the core set these phases are jointly
equidistributed, which is what the scans here measure and exploit.

Sampling grids are ``tau_k = k * step``.  The default step is a golden-ratio
fraction of ``pi / (8 log eps(n_max))`` so that no phase advances by an exact
rational amount per sample.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .class_numbers import MultiplicityTable, multiplicity_table
from .congruence import GroupDescriptor, condition_check
from .quad_core import build_core_index, is_core, log_epsilon, traces_below_cutoff
from .series import _check_strip, _smoothed_coefficients, _sum, ComplexPoint

__all__ = [
    "PhaseTargetProblem",
    "CompactRegion",
    "TargetFunction",
    "ShiftSearchResult",
    "ConditionWarning",
    "default_step",
    "phase_distance",
    "shift_set_density",
    "find_shift",
    "sup_error",
    "universality_scan",
    "joint_scan",
    "weyl_discrepancy",
    "refinement_diagnostic",
    "zeta_on_region",
    "DEFAULT_SCAN_X",
]

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
DEFAULT_SCAN_X = 1e6
_CHUNK = 1 << 16


class ConditionWarning(UserWarning):
    """A group list fails the new-trace condition needed for joint approximation."""


def default_step(max_log_eps: float) -> float:
    """``golden * pi / (8 * max_log_eps)``: at least 8 samples per fastest phase cycle."""
    return GOLDEN * math.pi / (8.0 * max_log_eps)


def phase_distance(x: np.ndarray) -> np.ndarray:
    """``||x||``, distance to the nearest integer."""
    return np.abs(x - np.rint(x))


@dataclass(frozen=True)
class PhaseTargetProblem:
    """Targets ``theta_n`` for core traces ``n``; ``tau`` qualifies when
    ``||tau log eps(n) / pi - theta_n|| < delta`` for every ``n``."""

    core_traces: tuple[int, ...]
    targets: tuple[float, ...]
    delta: float

    def __post_init__(self):
        traces = tuple(int(n) for n in self.core_traces)
        targets = tuple(float(a) for a in self.targets)
        if not traces:
            raise ValueError("need at least one trace")
        if len(set(traces)) != len(traces):
            raise ValueError("traces must be distinct")
        if len(targets) != len(traces):
            raise ValueError("one target per trace")
        for n in traces:
            if not is_core(n):
                raise ValueError(f"trace {n} is not core")
        for a in targets:
            if not 0.0 <= a < 1.0:
                raise ValueError(f"targets must lie in [0, 1), got {a}")
        if not 0.0 < self.delta < 0.5:
            raise ValueError(f"delta must lie in (0, 1/2), got {self.delta}")
        object.__setattr__(self, "core_traces", traces)
        object.__setattr__(self, "targets", targets)

    @property
    def frequencies(self) -> np.ndarray:
        """``log eps(n) / pi``."""
        return np.array([log_epsilon(n) for n in self.core_traces]) / math.pi

    @property
    def max_log_eps(self) -> float:
        return max(log_epsilon(n) for n in self.core_traces)

    @property
    def predicted_density(self) -> float:
        return (2.0 * self.delta) ** len(self.core_traces)

    def members(self, taus: np.ndarray) -> np.ndarray:
        taus = np.asarray(taus, dtype=float)
        ok = np.ones(taus.shape, dtype=bool)
        for w, th in zip(self.frequencies, self.targets):
            ok &= phase_distance(taus * w - th) < self.delta
        return ok

    @classmethod
    def planted(cls, core_traces: Sequence[int], tau0: float, delta: float) -> "PhaseTargetProblem":
        """Targets ``frac(tau0 log eps(n) / pi)``, so ``tau0`` is a member."""
        targets = [(tau0 * log_epsilon(int(n)) / math.pi) % 1.0 for n in core_traces]
        return cls(tuple(core_traces), tuple(t if t < 1.0 else 0.0 for t in targets), delta)


def _resolve_step(step: float | None, max_log_eps: float, T: float) -> float:
    limit = math.pi / (8.0 * max_log_eps)
    if step is None:
        step = default_step(max_log_eps)
    if not (step > 0 and math.isfinite(step)):
        raise ValueError(f"degenerate step {step}")
    if step > limit * (1 + 1e-12):
        raise ValueError(f"step {step:.4g} exceeds pi/(8 max log eps) = {limit:.4g}")
    if T < 1e3 * step:
        raise ValueError(f"T={T} must be at least 1000 steps ({1e3 * step:.4g})")
    return float(step)


def _sample_count(T: float, step: float) -> int:
    return int(math.floor(T / step + 1e-9)) + 1


def shift_set_density(problem: PhaseTargetProblem, T: float, step: float | None = None) -> float:
    """Fraction of samples ``tau_k = k * step`` in ``[0, T]`` lying in the shift set."""
    step = _resolve_step(step, problem.max_log_eps, T)
    total = _sample_count(T, step)
    hits = 0
    for start in range(0, total, _CHUNK):
        k = np.arange(start, min(start + _CHUNK, total), dtype=float)
        hits += int(np.count_nonzero(problem.members(k * step)))
    return hits / total


def density_report(problem: PhaseTargetProblem, T: float, step: float | None = None) -> dict:
    step = _resolve_step(step, problem.max_log_eps, T)
    return {
        "lambda_set": list(problem.core_traces),
        "delta": problem.delta,
        "T": T,
        "step": step,
        "measured": shift_set_density(problem, T, step),
        "predicted": problem.predicted_density,
    }


def find_shift(problem: PhaseTargetProblem, T: float, step: float | None = None) -> float | None:
    """Smallest sampled member ``tau``, pulled back to the entry point of its
    membership interval by bisection to ``step / 100``."""
    step = _resolve_step(step, problem.max_log_eps, T)
    total = _sample_count(T, step)
    for start in range(0, total, _CHUNK):
        k = np.arange(start, min(start + _CHUNK, total), dtype=float)
        hit = np.flatnonzero(problem.members(k * step))
        if len(hit) == 0:
            continue
        i = start + int(hit[0])
        if i == 0:
            return 0.0
        lo, hi = (i - 1) * step, i * step
        while hi - lo > step / 100.0:
            mid = 0.5 * (lo + hi)
            if problem.members(np.array([mid]))[0]:
                hi = mid
            else:
                lo = mid
        return hi
    return None


def weyl_discrepancy(core_traces: Sequence[int], T: float, step: float | None = None) -> float:
    """Star discrepancy of the phases ``tau log eps(n) / pi mod 1`` over the samples.

    Anchored boxes ``[0, a)`` with corners on the ``1/10`` lattice, counted
    through a ``10^d`` cell histogram, ``d <= 3``.
    """
    traces = [int(n) for n in core_traces]
    d = len(traces)
    if not 1 <= d <= 3:
        raise ValueError("weyl_discrepancy supports 1 to 3 traces")
    for n in traces:
        if not is_core(n):
            raise ValueError(f"trace {n} is not core")
    freqs = np.array([log_epsilon(n) for n in traces]) / math.pi
    step = _resolve_step(step, max(log_epsilon(n) for n in traces), T)
    total = _sample_count(T, step)
    hist = np.zeros((10,) * d, dtype=np.int64)
    for start in range(0, total, _CHUNK):
        k = np.arange(start, min(start + _CHUNK, total), dtype=float)
        cells = np.minimum((np.mod(np.outer(k * step, freqs), 1.0) * 10).astype(np.int64), 9)
        flat = np.ravel_multi_index(cells.T, hist.shape)
        hist += np.bincount(flat, minlength=hist.size).reshape(hist.shape)
    cum = hist.astype(float)
    for axis in range(d):
        cum = np.cumsum(cum, axis=axis)
    grids = np.meshgrid(*([np.arange(1, 11) / 10.0] * d), indexing="ij")
    vol = np.prod(np.stack(grids), axis=0)
    return float(np.max(np.abs(cum / total - vol)))


# ---------------------------------------------------------------------------
# regions, targets and zeta values on a grid


@dataclass(frozen=True)
class CompactRegion:
    """Grid ``rows x cols`` over ``[sigma_lo, sigma_hi] x [t_lo, t_hi]``; rows run in ``t``."""

    sigma_lo: float
    sigma_hi: float
    t_lo: float
    t_hi: float
    rows: int = 9
    cols: int = 9

    def __post_init__(self):
        if not (5 / 6 < self.sigma_lo <= self.sigma_hi < 1.0):
            raise ValueError("region must satisfy 5/6 < sigma_lo <= sigma_hi < 1")
        if not self.t_lo <= self.t_hi:
            raise ValueError("t_lo must not exceed t_hi")
        if self.rows < 5 or self.cols < 5:
            raise ValueError("grid must be at least 5 x 5")

    @property
    def sigmas(self) -> np.ndarray:
        return np.linspace(self.sigma_lo, self.sigma_hi, self.cols)

    @property
    def ts(self) -> np.ndarray:
        return np.linspace(self.t_lo, self.t_hi, self.rows)

    def points(self) -> np.ndarray:
        """Complex grid of shape ``(rows, cols)``; ``[0, 0]`` is the lower-left corner."""
        return self.sigmas[None, :] + 1j * self.ts[:, None]

    def refined(self, factor: int = 2) -> "CompactRegion":
        return CompactRegion(self.sigma_lo, self.sigma_hi, self.t_lo, self.t_hi,
                             factor * (self.rows - 1) + 1, factor * (self.cols - 1) + 1)


def _unwrap_grid(values: np.ndarray) -> np.ndarray:
    """Continuous log along the first column, then along each row."""
    logabs = np.log(np.abs(values))
    ang = np.angle(values)
    first = np.unwrap(ang[:, 0])
    ang = np.unwrap(np.concatenate([first[:, None], ang[:, 1:]], axis=1), axis=1)
    return logabs + 1j * ang


@dataclass(frozen=True)
class TargetFunction:
    """Non-vanishing target: ``Constant(c)``, ``ExpPolynomial`` (``f = exp(sum c_k s^k)``)
    or ``GridSamples`` (values on the region grid)."""

    kind: str
    constant: complex = 1.0
    coefficients: tuple[complex, ...] = ()
    values: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind == "Constant":
            if self.constant == 0:
                raise ValueError("constant target must be non-zero")
        elif self.kind == "ExpPolynomial":
            if not self.coefficients:
                raise ValueError("ExpPolynomial needs coefficients")
        elif self.kind == "GridSamples":
            v = np.asarray(self.values, dtype=complex)
            if v.ndim != 2 or not np.all(np.isfinite(v)) or np.any(v == 0):
                raise ValueError("grid samples must be a finite non-vanishing 2-d array")
            object.__setattr__(self, "values", v)
        else:
            raise ValueError(f"unknown target kind {self.kind!r}")

    @classmethod
    def Constant(cls, c) -> "TargetFunction":
        return cls("Constant", constant=complex(c))

    @classmethod
    def ExpPolynomial(cls, coefficients) -> "TargetFunction":
        return cls("ExpPolynomial", coefficients=tuple(complex(c) for c in coefficients))

    @classmethod
    def GridSamples(cls, values) -> "TargetFunction":
        return cls("GridSamples", values=np.asarray(values, dtype=complex))

    def log_on(self, region: CompactRegion) -> np.ndarray:
        shape = (region.rows, region.cols)
        if self.kind == "Constant":
            return np.full(shape, np.log(self.constant), dtype=complex)
        if self.kind == "ExpPolynomial":
            s = region.points()
            return sum(c * s**k for k, c in enumerate(self.coefficients))
        if self.values.shape != shape:
            raise ValueError(f"grid samples have shape {self.values.shape}, region grid is {shape}")
        return _unwrap_grid(self.values)


def _table_covering(group, x: float, table: MultiplicityTable | None) -> MultiplicityTable:
    if table is not None:
        return table
    return multiplicity_table(GroupDescriptor.coerce(group), max(traces_below_cutoff(x), 3))


def zeta_log_on_region(group, region: CompactRegion, tau: float, x: float = DEFAULT_SCAN_X,
                       table: MultiplicityTable | None = None) -> np.ndarray:
    """``log Z(s + i tau)`` (strip approximation, ``fsum`` per point) on the region grid."""
    if region.t_lo + tau < 1.0:
        raise ValueError("shifted region must lie in Im s >= 1")
    table = _table_covering(group, x, table)
    coef, L = _smoothed_coefficients(table, x)
    pts = region.points() + 1j * tau
    out = np.empty(pts.shape, dtype=complex)
    for idx, s in np.ndenumerate(pts):
        out[idx] = -_sum(coef * np.exp(-2.0 * s * L))
    return out


def zeta_on_region(group, region: CompactRegion, tau: float, x: float = DEFAULT_SCAN_X,
                   table: MultiplicityTable | None = None) -> np.ndarray:
    return np.exp(zeta_log_on_region(group, region, tau, x, table))


def _sup_from_logs(logz: np.ndarray, logf: np.ndarray) -> float:
    return float(np.max(np.abs(np.exp(logf)) * np.abs(np.expm1(logz - logf))))


def sup_error(group, region: CompactRegion, target: TargetFunction, tau: float,
              x: float = DEFAULT_SCAN_X, table: MultiplicityTable | None = None) -> float:
    """``max |f(s)| |exp(log Z(s + i tau) - log f(s)) - 1|`` over the region grid."""
    if tau < 0:
        raise ValueError("tau must be non-negative")
    _check_strip(ComplexPoint(region.sigma_lo, region.t_lo + tau))
    logz = zeta_log_on_region(group, region, tau, x, table)
    return _sup_from_logs(logz, target.log_on(region))


# ---------------------------------------------------------------------------
# scans


@dataclass
class ShiftSearchResult:
    best_tau: float
    best_error: float
    record_history: list[tuple[float, float]]
    samples_evaluated: int
    step: float = 0.0

    def __post_init__(self):
        errs = [e for _, e in self.record_history]
        if any(b >= a for a, b in zip(errs, errs[1:])):
            raise ValueError("record history must be strictly decreasing")
        if self.record_history and self.record_history[-1] != (self.best_tau, self.best_error):
            raise ValueError("best pair must be the last record")


@dataclass
class _ScanItem:
    group: GroupDescriptor
    region: CompactRegion
    target: TargetFunction
    table: MultiplicityTable
    x: float
    logf: np.ndarray = field(init=False)
    A: np.ndarray = field(init=False)
    L: np.ndarray = field(init=False)

    def __post_init__(self):
        _check_strip(ComplexPoint(self.region.sigma_lo, max(self.region.t_lo, 1.0)))
        _check_strip(ComplexPoint(self.region.sigma_hi, max(self.region.t_lo, 1.0)))
        if self.region.t_lo < 1.0:
            raise ValueError("scan regions must lie in Im s >= 1")
        self.logf = self.target.log_on(self.region)
        coef, self.L = _smoothed_coefficients(self.table, self.x)
        s = self.region.points().ravel()
        self.A = -coef[None, :] * np.exp(-2.0 * s[:, None] * self.L[None, :])

    def coarse(self, taus: np.ndarray) -> np.ndarray:
        logz = self.A @ np.exp(-2j * np.outer(self.L, taus))
        logf = self.logf.ravel()[:, None]
        return np.max(np.abs(np.exp(logf)) * np.abs(np.expm1(logz - logf)), axis=0)

    def accurate(self, tau: float) -> float:
        return sup_error(self.group, self.region, self.target, tau, self.x, self.table)

    @property
    def max_log_eps(self) -> float:
        return float(self.L.max())


def _golden_min(f, lo: float, hi: float, tol: float) -> tuple[float, float]:
    """Golden-section search; returns the best point seen."""
    seen = {}

    def ev(t):
        if t not in seen:
            seen[t] = f(t)
        return seen[t]

    a, b = lo, hi
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    while b - a > tol:
        if ev(c) < ev(d):
            b, d = d, c
            c = b - GOLDEN * (b - a)
        else:
            a, c = c, d
            d = a + GOLDEN * (b - a)
    best = min(seen.items(), key=lambda kv: (kv[1], kv[0]))
    return best


def _coarse_all(items: list[_ScanItem], taus: np.ndarray, threads: int) -> np.ndarray:
    chunk = max(64, 2_000_000 // max(1, max(it.A.shape[0] * it.A.shape[1] // 64 for it in items)))
    blocks = [taus[i : i + chunk] for i in range(0, len(taus), chunk)]

    def run(block):
        return np.max(np.stack([it.coarse(block) for it in items]), axis=0)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(run, blocks))
    else:
        parts = [run(b) for b in blocks]
    return np.concatenate(parts) if parts else np.zeros(0)


def _scan(items: list[_ScanItem], T_max: float, step: float | None, threads: int,
          refine_tol: float) -> ShiftSearchResult:
    max_log = max(it.max_log_eps for it in items)
    if step is None:
        step = default_step(max_log)
    if not step > 0:
        raise ValueError("step must be positive")
    total = _sample_count(T_max, step)
    taus = np.arange(total, dtype=float) * step
    coarse = _coarse_all(items, taus, max(1, int(threads)))

    def accurate(t):
        return max(it.accurate(t) for it in items)

    records: list[tuple[float, float]] = []
    best = math.inf
    for k in range(total):
        if not coarse[k] < best:
            continue
        t_k = float(taus[k])
        lo, hi = max(0.0, t_k - step), min(T_max, t_k + step)
        tau, err = _golden_min(accurate, lo, hi, refine_tol)
        e_k = accurate(t_k)
        if e_k <= err:
            tau, err = t_k, e_k
        if err < best:
            best = err
            records.append((tau, err))
    if not records:
        tau = 0.0
        records.append((tau, accurate(tau)))
    best_tau, best_err = records[-1]
    return ShiftSearchResult(best_tau, best_err, records, total, step)


def universality_scan(group, region: CompactRegion, target: TargetFunction, T_max: float,
                      step: float | None = None, x: float = DEFAULT_SCAN_X,
                      table: MultiplicityTable | None = None, threads: int = 1,
                      refine_tol: float = 1e-10) -> ShiftSearchResult:
    """Scan ``tau in [0, T_max]`` for small sup error between shifted ``Z`` and the target.

    A coarse pass evaluates every sample with a matrix product; each sample
    that beats the current best is refined by golden section over
    ``[tau - step, tau + step]`` with the accurate evaluator, and only refined
    values are recorded.
    """
    group = GroupDescriptor.coerce(group)
    item = _ScanItem(group, region, target, _table_covering(group, x, table), x)
    return _scan([item], T_max, step, threads, refine_tol)


def joint_scan(items: Iterable[tuple], T_max: float, step: float | None = None,
               x: float = DEFAULT_SCAN_X, tables: Sequence[MultiplicityTable | None] | None = None,
               threads: int = 1, refine_tol: float = 1e-10) -> ShiftSearchResult:
    """Joint scan: the error at ``tau`` is the maximum of the per-group sup errors."""
    items = list(items)
    if not items:
        raise ValueError("need at least one (group, region, target)")
    groups = [GroupDescriptor.coerce(g) for g, _, _ in items]
    if len(groups) > 1:
        res = condition_check(groups)
        if not res.holds:
            warnings.warn(
                f"groups {[str(g) for g in groups]} fail the new-trace condition at j={res.first_failure}",
                ConditionWarning,
                stacklevel=2,
            )
    tables = list(tables) if tables is not None else [None] * len(items)
    scan_items = [
        _ScanItem(g, region, target, _table_covering(g, x, tab), x)
        for g, (_, region, target), tab in zip(groups, items, tables)
    ]
    return _scan(scan_items, T_max, step, threads, refine_tol)


def write_scan_csv(result: ShiftSearchResult, rows: Iterable[tuple[float, float]], path) -> None:
    """Rows ``(tau, sup_error, is_record)``."""
    import csv

    recs = set(result.record_history)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["tau", "sup_error", "is_record"])
        for tau, err in rows:
            w.writerow([repr(float(tau)), repr(float(err)), int((tau, err) in recs)])


# ---------------------------------------------------------------------------
# diagnostics


def refinement_diagnostic(group, problem: PhaseTargetProblem, s, X3: int, T: float,
                          step: float | None = None, table: MultiplicityTable | None = None,
                          max_members: int = 2000) -> dict:
    """Among sampled members of the shift set, the fraction where
    ``|L(s + i tau; core in [X2, X3))|`` is below the fourth root of the squared
    core tail mass past ``X2``, with ``X2`` one past the largest trace of the problem.

    ``reference`` is ``(1/2)(2 delta)^(#core traces below X2)``, an asymptotic
    lower bound that is reported, not tested.
    """
    s = ComplexPoint.coerce(s)
    X2 = max(problem.core_traces) + 1
    table = table or multiplicity_table(GroupDescriptor.coerce(group), X3)
    table.require(X3 - 1, "refinement diagnostic")
    index = build_core_index(max(table.n_max, X3, 3))
    core = np.array([n for n in range(X2, table.n_max + 1) if index.is_core(n)], dtype=np.int64)
    a = table.coefficients[core - 3] * np.exp(-2.0 * s.sigma * table.log_eps[core - 3])
    threshold = math.fsum((a**2).tolist()) ** 0.25
    window = core < X3
    aw = table.coefficients[core[window] - 3] * np.exp(-2.0 * s.s * table.log_eps[core[window] - 3])
    Lw = table.log_eps[core[window] - 3]
    step = _resolve_step(step, problem.max_log_eps, T)
    total = _sample_count(T, step)
    taus = []
    for start in range(0, total, _CHUNK):
        k = np.arange(start, min(start + _CHUNK, total), dtype=float)
        hit = k[problem.members(k * step)] * step
        taus.extend(hit.tolist())
        if len(taus) >= max_members:
            break
    taus = np.array(taus[:max_members])
    if len(taus):
        vals = np.abs(np.exp(-2j * np.outer(taus, Lw)) @ aw)
        frac = float(np.count_nonzero(vals < threshold)) / len(taus)
    else:
        frac = float("nan")
    n_low = sum(1 for n in range(3, X2) if index.is_core(n))
    return {
        "members_checked": int(len(taus)),
        "threshold": threshold,
        "fraction_below": frac,
        "reference": 0.5 * (2.0 * problem.delta) ** n_low,
    }
