"""Normalized dispersion statistics for nominal PMFs.

Every statistic here maps a PMF to [0, 1], is 0 exactly on a point mass,
and is 1 on the uniform PMF.  They split into two families: dispersion
about the mode (variation ratios, standard deviation from the mode) and
dispersion of the whole vector (entropies, quadratic indices, distance
from uniform).
"""

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .errors import (
    AlphaOutOfRangeError,
    DegenerateSdmError,
    EmptyInputError,
    MultimodalInputError,
    ValidationError,
)
from .pmf import EPS_MODE, EPS_NORM, Pmf, mode_summary
from .validation import as_float_vector, check_positive

#: Report column order (Table-style comparison order).
STATISTIC_NAMES = (
    "wvr",
    "uvr",
    "sdm",
    "entropy",
    "entropy_star",
    "alpha_quadratic",
    "iqv",
    "cnv",
)


def _unit(x):
    """Clip roundoff excursions so statistics stay inside [0, 1]."""
    return float(min(1.0, max(0.0, x)))


def wvr(pmf):
    """Variation ratio: normalized mean deviation from the mode.

    ``1 - (K*p_hat - 1)/(K - 1)``.  Uses only the modal probability, so
    it is a linear transform of prediction confidence.
    """
    K = pmf.n_classes
    modal = float(pmf.probs.max())
    return _unit(1.0 - (K * modal - 1.0) / (K - 1.0))


def uvr(pmf, eps_mode=EPS_MODE):
    """Variation ratio extended to multimodal PMFs.

    ``(K^2/(K^2-1)) * (1 - p_hat/m)`` with ``m`` the number of tied
    modes at ``eps_mode``.  Discontinuous in the mode count: a binary
    PMF jumps from 4/3*(1 - p_hat) to 1 exactly at p_hat = 0.5.  The
    tie tolerance pins down where that jump happens.
    """
    mode = mode_summary(pmf, eps_mode)
    K = pmf.n_classes
    return _unit(K * K / (K * K - 1.0) * (1.0 - mode.modal_prob / mode.mode_count))


def sdm(pmf):
    """Standard deviation from the mode, normalized to [0, 1].

    ``1 - sqrt(sum_k (p_hat - p_k)^2 / (K - 1))``.  Unlike the
    variation ratios this sees the whole PMF, not just the mode.
    """
    p = pmf.probs
    modal = p.max()
    radicand = max(0.0, ((modal - p) ** 2).sum() / (pmf.n_classes - 1.0))
    return _unit(1.0 - np.sqrt(radicand))


def sdm_sampling_variance(pmf, n, eps_mode=EPS_MODE):
    """Asymptotic variance of the SDM estimated from n categorical samples.

    For a unimodal PMF the sample SDM is asymptotically normal around
    the true value; this returns its variance, enabling confidence
    intervals when the PMF is itself estimated from counts (e.g. votes
    of an ensemble).

    Raises
    ------
    MultimodalInputError
        If the PMF has tied modes at ``eps_mode``.
    DegenerateSdmError
        At the uniform PMF, where the normalizing denominator vanishes.
    """
    if n < 1:
        raise ValidationError(f"n must be >= 1, got {n}")
    mode = mode_summary(pmf, eps_mode)
    p = pmf.probs
    K = pmf.n_classes
    modal = mode.modal_prob
    one_minus_u = np.sqrt(((modal - p) ** 2).sum() / (K - 1.0))
    if one_minus_u <= 0.0:
        raise DegenerateSdmError("SDM variance diverges at the uniform PMF")
    if mode.mode_count != 1:
        raise MultimodalInputError(
            f"SDM variance is defined for unimodal PMFs; found {mode.mode_count} modes")
    numerator = modal * (1.0 - K * modal) ** 2 + (p * (modal - p) ** 2).sum()
    return float(numerator / (n * (K - 1.0) ** 2 * one_minus_u ** 2)
                 - one_minus_u ** 2 / n)


def entropy_norm(pmf):
    """Shannon entropy in base K, so the uniform PMF scores 1.

    Zero probabilities contribute nothing (0 log 0 := 0).
    """
    p = pmf.probs
    positive = p[p > 0]
    return _unit(-(positive * np.log(positive)).sum() / np.log(pmf.n_classes))


def star_transform(value, n_classes):
    """Compress a normalized statistic: ``(K^F - 1)/(K - 1)``.

    Fixes 0 and 1, and is <= the identity everywhere between, which
    damps the statistic's response to small PMF perturbations.
    """
    if n_classes < 2:
        raise ValidationError(f"n_classes must be >= 2, got {n_classes}")
    if not -1e-12 <= value <= 1.0 + 1e-12:
        raise ValidationError(f"star transform input {value!r} outside [0, 1]")
    value = min(1.0, max(0.0, value))
    return _unit((n_classes ** value - 1.0) / (n_classes - 1.0))


def entropy_star(pmf):
    """Star-transformed normalized entropy."""
    return star_transform(entropy_norm(pmf), pmf.n_classes)


def alpha_quadratic_entropy(pmf, alpha=1.0):
    """Quadratic entropy of order ``alpha`` in (0, 1].

    ``(K^(2a-1)/(K-1)^a) * sum_k p_k^a (1-p_k)^a``.  At ``alpha=1`` this
    is identical to :func:`iqv`; smaller ``alpha`` flattens the response
    to changes in the PMF.
    """
    if not 0.0 < alpha <= 1.0:
        raise AlphaOutOfRangeError(f"alpha must be in (0, 1], got {alpha!r}")
    if alpha == 1.0:
        return iqv(pmf)  # the stated special case, kept bit-exact
    p = pmf.probs
    K = pmf.n_classes
    terms = (p ** alpha) * ((1.0 - p) ** alpha)
    return _unit(K ** (2.0 * alpha - 1.0) / (K - 1.0) ** alpha * terms.sum())


def iqv(pmf):
    """Index of qualitative variation: ``(K/(K-1)) * (1 - sum p_k^2)``."""
    p = pmf.probs
    K = pmf.n_classes
    return _unit(K / (K - 1.0) * (1.0 - (p * p).sum()))


def cnv(pmf):
    """Coefficient of nominal variation: ``1 - sqrt(1 - IQV)``.

    Equals one minus the Euclidean distance to the uniform PMF, scaled
    so a point mass is at distance 1.  The radicand is evaluated as
    ``K * sum_k (p_k - 1/K)^2 / (K - 1)`` (algebraically identical),
    which avoids the cancellation that ``1 - IQV`` suffers near the
    uniform PMF and keeps the equal-remainder collapse onto the
    variation ratio exact at the 1e-12 level.
    """
    p = pmf.probs
    K = pmf.n_classes
    dev_sq = ((p - 1.0 / K) ** 2).sum()
    radicand = max(0.0, K * dev_sq / (K - 1.0))
    return _unit(1.0 - np.sqrt(radicand))


@dataclass(frozen=True)
class UncertaintyReport:
    """All dispersion statistics of one PMF, on a shared mode analysis."""

    wvr: float
    uvr: float
    sdm: float
    entropy: float
    entropy_star: float
    alpha_quadratic: float
    iqv: float
    cnv: float
    alpha: float = 1.0

    def as_dict(self):
        return {name: getattr(self, name) for name in STATISTIC_NAMES}

    def values(self):
        return tuple(getattr(self, name) for name in STATISTIC_NAMES)


def report_all(pmf, alpha=1.0, eps_mode=EPS_MODE):
    """Compute every statistic on one PMF.

    The mode analysis is done once, so WVR, UVR and SDM all see the same
    modal probability and mode count.
    """
    mode = mode_summary(pmf, eps_mode)
    p = pmf.probs
    K = pmf.n_classes
    modal = mode.modal_prob
    wvr_val = _unit(1.0 - (K * modal - 1.0) / (K - 1.0))
    uvr_val = _unit(K * K / (K * K - 1.0) * (1.0 - modal / mode.mode_count))
    sdm_val = _unit(1.0 - np.sqrt(max(0.0, ((modal - p) ** 2).sum() / (K - 1.0))))
    ent = entropy_norm(pmf)
    return UncertaintyReport(
        wvr=wvr_val,
        uvr=uvr_val,
        sdm=sdm_val,
        entropy=ent,
        entropy_star=star_transform(ent, K),
        alpha_quadratic=alpha_quadratic_entropy(pmf, alpha),
        iqv=iqv(pmf),
        cnv=cnv(pmf),
        alpha=alpha,
    )


@dataclass(frozen=True)
class StatisticSummary:
    """Median/mean/IQR/sd of one statistic over a dataset of PMFs."""

    statistic: str
    median: float
    mean: float
    iqr: float
    sd: float

    def as_dict(self):
        return {"median": self.median, "mean": self.mean,
                "iqr": self.iqr, "sd": self.sd}


def summarize(values, statistic="value"):
    """Summarize a sequence of statistic values.

    Quartiles use linear-interpolation quantiles; the standard deviation
    uses the n-1 denominator (0 for a single value).
    """
    arr = as_float_vector(values, name="values")
    if arr.size == 0:
        raise EmptyInputError("cannot summarize an empty sequence")
    q1, med, q3 = np.quantile(arr, [0.25, 0.5, 0.75], method="linear")
    sd = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
    return StatisticSummary(
        statistic=statistic,
        median=float(med),
        mean=float(arr.mean()),
        iqr=float(q3 - q1),
        sd=sd,
    )


class DispersionStatistics(BaseEstimator, TransformerMixin):
    """Row-wise dispersion statistics as an sklearn transformer.

    Turns an (N, K) matrix of class-probability rows into an (N, S)
    matrix of uncertainty statistics, so classifier outputs can be
    piped straight into downstream analysis.

    Parameters
    ----------
    statistics : sequence of str, optional
        Subset of :data:`STATISTIC_NAMES`; defaults to all of them.
    alpha : float
        Order of the quadratic entropy column.
    eps_mode : float
        Mode-tie tolerance shared by all mode-based columns.
    policy : {"strict", "renormalize"}
        Row validation policy; "renormalize" accepts unnormalized rows
        (e.g. raw ensemble vote counts).
    eps_norm : float
        Strict-policy tolerance on each row sum.
    """

    def __init__(self, statistics=None, alpha=1.0, eps_mode=EPS_MODE,
                 policy="strict", eps_norm=EPS_NORM):
        self.statistics = statistics
        self.alpha = alpha
        self.eps_mode = eps_mode
        self.policy = policy
        self.eps_norm = eps_norm

    def _names(self):
        if self.statistics is None:
            return STATISTIC_NAMES
        unknown = set(self.statistics) - set(STATISTIC_NAMES)
        if unknown:
            raise ValidationError(f"unknown statistics: {sorted(unknown)}")
        return tuple(self.statistics)

    def fit(self, X, y=None):
        X = np.asarray(X, dtype=float)
        if X.ndim != 2:
            raise ValidationError(f"expected a 2-D matrix, got shape {X.shape}")
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        X = np.asarray(X, dtype=float)
        if X.ndim != 2:
            raise ValidationError(f"expected a 2-D matrix, got shape {X.shape}")
        names = self._names()
        out = np.empty((X.shape[0], len(names)))
        for i, row in enumerate(X):
            report = report_all(
                Pmf(row, policy=self.policy, eps_norm=self.eps_norm),
                alpha=self.alpha, eps_mode=self.eps_mode)
            out[i] = [getattr(report, name) for name in names]
        return out

    def get_feature_names_out(self, input_features=None):
        return np.asarray(self._names(), dtype=object)
