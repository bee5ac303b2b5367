"""scikit-learn style front end: fit on coefficients, query z values."""

import math

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .jacobi import CoeffSeq, disk_radius_jacobi, gordon_defect, growth_scan, rates_from_defects, tail_minima
from .measures import unif_norm
from .sturm import SLCoeff, disk_radius_sl, sl_gordon_defect, sl_growth_scan


def check_z(Z):
    """Coerce spectral parameters to a finite 1-d complex array."""
    arr = np.asarray(Z)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim == 2 and arr.shape[1] == 2 and not np.iscomplexobj(arr):
        arr = arr[:, 0] + 1j * arr[:, 1]
    if arr.ndim != 1:
        raise ValueError("Z must be scalar, 1-d complex, or an (n, 2) array of (re, im) rows")
    if arr.size == 0:
        raise ValueError("Z is empty")
    arr = arr.astype(np.complex128)
    if not np.all(np.isfinite(arr)):
        raise ValueError("Z contains NaN or infinity")
    return arr


def _check_periods(periods, minimum=1):
    periods = [int(p) for p in periods]
    if not periods:
        raise ValueError("periods must be nonempty")
    if any(q <= p for p, q in zip(periods, periods[1:])) or periods[0] < minimum:
        raise ValueError(f"periods must be increasing integers >= {minimum}")
    return periods


class _Certifier(BaseEstimator):
    def _check_fitted(self):
        if not hasattr(self, "disk_radius_"):
            raise NotFittedError(f"{type(self).__name__} is not fitted yet")

    def _scan(self, Z):
        raise NotImplementedError

    def transform(self, Z):
        """Error bounds, shape (n_z, n_periods)."""
        self._check_fitted()
        Z = check_z(Z)
        rows = self._scan(Z)
        return self._table(Z, rows, "error_bound")

    def predict(self, Z):
        """True where every scanned period certifies (error bound < 1/4)."""
        self._check_fitted()
        Z = check_z(Z)
        rows = self._scan(Z)
        return np.all(self._table(Z, rows, "certified").astype(bool), axis=1)

    def in_disk(self, Z):
        self._check_fitted()
        return np.abs(check_z(Z)) < self.disk_radius_

    def _table(self, Z, rows, field):
        lookup = {(r.z, r.period): getattr(r, field) for r in rows}
        return np.array([[lookup[(complex(z), p)] for p in self.periods_] for z in Z], dtype=float)


class JacobiGordonCertifier(_Certifier):
    """Eigenvalue-free disk and per-period scan for Jacobi coefficients.

    Parameters
    ----------
    C : float
        Target exponential rate.
    periods : sequence of int
        Periods p_m at which defects are measured and solutions scanned.
    log_defect_bounds : sequence of float, optional
        Rigorous upper bounds (natural log) on the true defects, used when
        the sampled coefficients cannot resolve them.
    """

    def __init__(self, C=1.0, periods=(1, 2, 4), log_defect_bounds=None):
        self.C = C
        self.periods = periods
        self.log_defect_bounds = log_defect_bounds

    def fit(self, X, y=None):
        if not isinstance(X, CoeffSeq):
            raise TypeError("X must be a CoeffSeq")
        if not self.C > 0:
            raise ValueError("C must be positive")
        self.periods_ = _check_periods(self.periods)
        self.coeffs_ = X
        self.defects_ = [gordon_defect(X, p) for p in self.periods_]
        self.rates_ = rates_from_defects(self.defects_, self.periods_)
        self.tail_rates_ = tail_minima(self.rates_)
        self.disk_radius_ = disk_radius_jacobi(X.norm_a, X.norm_ainv, X.norm_b, self.C)
        return self

    def _scan(self, Z):
        return growth_scan(self.coeffs_, Z, self.periods_, log_defect_bounds=self.log_defect_bounds)


class SturmLiouvilleGordonCertifier(_Certifier):
    """Eigenvalue-free disk and per-period scan for (a, mu) coefficients.

    Parameters
    ----------
    C : float
        Target exponential rate.
    periods : sequence of int
        Periods (integers >= 4).
    alpha : int
        Matching point of true and periodized solutions.
    """

    def __init__(self, C=1.0, periods=(4, 8, 16), alpha=1):
        self.C = C
        self.periods = periods
        self.alpha = alpha

    def fit(self, X, y=None):
        if not isinstance(X, SLCoeff):
            raise TypeError("X must be an SLCoeff")
        if not self.C > 0:
            raise ValueError("C must be positive")
        self.periods_ = _check_periods(self.periods, minimum=4)
        self.coeffs_ = X
        self.mu_unif_ = unif_norm(X.mu)
        self.defects_ = [sl_gordon_defect(X, p) for p in self.periods_]
        self.rates_ = [math.inf if d == 0 else -math.log(d) / p for d, p in zip(self.defects_, self.periods_)]
        self.tail_rates_ = tail_minima(self.rates_)
        self.disk_radius_ = disk_radius_sl(X.norm_ainv, self.mu_unif_, self.C)
        return self

    def _scan(self, Z):
        return sl_growth_scan(self.coeffs_, Z, self.periods_, alpha=self.alpha)
