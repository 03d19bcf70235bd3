"""Estimator-style wrappers (``fit`` / ``predict`` / ``transform``, ``get_params``).

The functional modules do the work; these classes hold parameters, build
and cache the multiplicity table in ``fit``, and validate array inputs.
"""

from __future__ import annotations

import math

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .class_numbers import multiplicity_table
from .congruence import GroupDescriptor
from .quad_core import traces_below_cutoff
from .series import DEFAULT_N_MAX, log_zeta_euler, log_zeta_strip
from .universality import (
    DEFAULT_SCAN_X,
    CompactRegion,
    PhaseTargetProblem,
    TargetFunction,
    find_shift,
    shift_set_density,
    universality_scan,
)

__all__ = ["LogZetaEstimator", "ShiftSetEstimator", "UniversalityScanner"]


class LogZetaEstimator(TransformerMixin, BaseEstimator):
    """``log Z`` at rows ``(sigma, t)``: Euler series for ``sigma > 1``, strip sum for ``5/6 < sigma < 1``."""

    def __init__(self, group="SL2Z", n_max=DEFAULT_N_MAX, x=None, tol=1e-4):
        self.group = group
        self.n_max = n_max
        self.x = x
        self.tol = tol

    def fit(self, X=None, y=None):
        self.group_ = GroupDescriptor.coerce(self.group)
        n_max = int(self.n_max)
        if self.x is not None:
            n_max = max(n_max, traces_below_cutoff(float(self.x)))
        self.table_ = multiplicity_table(self.group_, n_max)
        return self

    def _evaluate(self, X):
        check_is_fitted(self, "table_")
        X = check_array(X, dtype=float)
        if X.shape[1] != 2:
            raise ValueError("expected rows (sigma, t)")
        out = []
        for sigma, t in X:
            if sigma > 1.0:
                out.append(log_zeta_euler(self.group_, (sigma, t), tol=self.tol, table=self.table_))
            else:
                out.append(log_zeta_strip(self.group_, (sigma, t), x=self.x, table=self.table_))
        return out

    def predict(self, X):
        return np.array([r.value for r in self._evaluate(X)])

    def transform(self, X):
        """Columns ``re, im, tail_budget, terms_used``."""
        return np.array([[r.value.real, r.value.imag, r.tail_budget, r.terms_used] for r in self._evaluate(X)])


class ShiftSetEstimator(BaseEstimator):
    """Shift-set density and first shift for each row of target phases."""

    def __init__(self, core_traces=(3,), delta=0.05, T=1e6, step=None):
        self.core_traces = core_traces
        self.delta = delta
        self.T = T
        self.step = step

    def fit(self, X=None, y=None):
        traces = tuple(int(n) for n in self.core_traces)
        # validates traces and delta
        PhaseTargetProblem(traces, (0.0,) * len(traces), float(self.delta))
        self.core_traces_ = traces
        return self

    def _problems(self, X):
        check_is_fitted(self, "core_traces_")
        X = check_array(X, dtype=float)
        if X.shape[1] != len(self.core_traces_):
            raise ValueError(f"expected {len(self.core_traces_)} target phases per row")
        return [PhaseTargetProblem(self.core_traces_, tuple(row), float(self.delta)) for row in X]

    def transform(self, X):
        """Measured density per row."""
        return np.array([[shift_set_density(p, self.T, self.step)] for p in self._problems(X)])

    def predict(self, X):
        """First shift per row, ``nan`` when none is sampled."""
        out = [find_shift(p, self.T, self.step) for p in self._problems(X)]
        return np.array([math.nan if t is None else t for t in out])


class UniversalityScanner(BaseEstimator):
    """Scan for shifts approximating grid samples ``y`` of a target on a region."""

    def __init__(self, group="SL2Z", sigma_range=(0.87, 0.95), t_range=(2.0, 4.0), grid=(9, 9),
                 T_max=1e3, step=None, x=DEFAULT_SCAN_X, threads=1):
        self.group = group
        self.sigma_range = sigma_range
        self.t_range = t_range
        self.grid = grid
        self.T_max = T_max
        self.step = step
        self.x = x
        self.threads = threads

    def _region(self):
        return CompactRegion(*self.sigma_range, *self.t_range, *self.grid)

    def fit(self, X=None, y=None):
        """``y``: complex target values of shape ``grid`` (rows run in ``t``)."""
        if y is None:
            raise ValueError("target samples y are required")
        y = np.asarray(y, dtype=complex)
        target = TargetFunction.GridSamples(y)
        self.result_ = universality_scan(self.group, self._region(), target, float(self.T_max),
                                         self.step, float(self.x), threads=int(self.threads))
        self.best_tau_ = self.result_.best_tau
        self.best_error_ = self.result_.best_error
        return self

    def predict(self, X=None):
        check_is_fitted(self, "result_")
        return np.array([self.best_tau_])
