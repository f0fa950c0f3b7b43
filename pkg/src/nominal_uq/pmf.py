"""Probability mass functions over unordered classes.

A :class:`Pmf` is the complete uncertainty statement for a nominal
property: one probability per class, validated and exactly renormalized
at construction.  Mode analysis (modal probability, tied modes, 0/1
distance from the mode set) is what the dispersion statistics build on.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateLengthError,
    NegativeProbabilityError,
    NonFiniteError,
    SumOutOfToleranceError,
    ValidationError,
)
from .validation import as_float_vector, check_class_index, check_positive, frozen

#: Strict-mode tolerance on |sum(p) - 1|.
EPS_NORM = 1e-9

#: Relative tolerance for detecting tied modes.
EPS_MODE = 1e-9


@dataclass(frozen=True, eq=False)
class Pmf:
    """A validated probability vector over K >= 2 named classes.

    Parameters
    ----------
    values : array_like
        K probabilities.  Under ``policy="strict"`` they must already sum
        to 1 within ``eps_norm``; under ``policy="renormalize"`` any
        nonnegative vector with a positive sum is accepted and scaled.
    class_names : sequence of str, optional
        K distinct identifiers.  Defaults to stringified indices.
    policy : {"strict", "renormalize"}
    eps_norm : float
        Strict-mode tolerance on the probability sum.

    Notes
    -----
    Stored probabilities are always divided by their float sum after
    validation, so downstream sums are bit-consistent and statistic
    endpoints land on 0 and 1 to machine precision.  Instances are
    immutable; the underlying array is read-only.
    """

    probs: np.ndarray = field(repr=False)
    class_names: tuple = None

    def __init__(self, values, class_names=None, *, policy="strict",
                 eps_norm=EPS_NORM):
        arr = np.asarray(values, dtype=float)
        if arr.ndim != 1:
            raise ValidationError(f"PMF values must be 1-D, got shape {arr.shape}")
        if arr.size < 2:
            raise DegenerateLengthError(
                f"a PMF needs at least 2 classes, got {arr.size}")
        if not np.all(np.isfinite(arr)):
            raise NonFiniteError("PMF values contain NaN or infinite entries")
        if np.any(arr < 0):
            raise NegativeProbabilityError(
                f"negative probability: min={float(arr.min())!r}")
        total = float(arr.sum())
        if policy == "strict":
            check_positive(eps_norm, "eps_norm")
            if abs(total - 1.0) > eps_norm:
                raise SumOutOfToleranceError(
                    f"probabilities sum to {total!r}, outside 1 +/- {eps_norm}")
        elif policy == "renormalize":
            if total <= 0:
                raise SumOutOfToleranceError(
                    "cannot renormalize: values sum to a nonpositive total")
        else:
            raise ValidationError(f"unknown policy {policy!r}")
        object.__setattr__(self, "probs", frozen(arr / total))
        if class_names is not None:
            names = tuple(str(n) for n in class_names)
            if len(names) != arr.size:
                raise ValidationError(
                    f"{len(names)} class names for {arr.size} classes")
            if len(set(names)) != len(names):
                raise ValidationError("class names must be distinct")
        else:
            names = None
        object.__setattr__(self, "class_names", names)

    @property
    def n_classes(self):
        return self.probs.size

    def names_or_indices(self):
        """Class names if set, else '0'..'K-1'."""
        if self.class_names is not None:
            return self.class_names
        return tuple(str(i) for i in range(self.n_classes))

    @classmethod
    def point_mass(cls, n_classes, index):
        """The no-uncertainty PMF: probability 1 on one class."""
        if n_classes < 2:
            raise DegenerateLengthError(
                f"a PMF needs at least 2 classes, got {n_classes}")
        index = check_class_index(index, n_classes, name="index")
        values = np.zeros(n_classes)
        values[index] = 1.0
        return cls(values)

    @classmethod
    def uniform(cls, n_classes):
        """The maximal-uncertainty PMF: equal probability on every class."""
        if n_classes < 2:
            raise DegenerateLengthError(
                f"a PMF needs at least 2 classes, got {n_classes}")
        return cls(np.full(n_classes, 1.0 / n_classes), policy="renormalize")

    def __len__(self):
        return self.probs.size

    def __getitem__(self, k):
        return float(self.probs[k])

    def __repr__(self):
        body = ", ".join(f"{p:.6g}" for p in self.probs)
        return f"Pmf([{body}])"


@dataclass(frozen=True, eq=False)
class ModeSummary:
    """Mode analysis of a PMF.

    Attributes
    ----------
    modal_prob : float
        The maximal probability p-hat.
    mode_indices : tuple of int
        All indices whose probability ties the maximum within the
        relative tolerance used to build the summary.
    mode_count : int
        Number of tied modes m.
    distance_from_mode : numpy.ndarray
        0 exactly on ``mode_indices``, 1 elsewhere (Hamming distance to
        the mode set).
    """

    modal_prob: float
    mode_indices: tuple
    mode_count: int
    distance_from_mode: np.ndarray = field(repr=False)


def mode_summary(pmf, eps_mode=EPS_MODE):
    """Locate the mode(s) of a PMF.

    Two probabilities tie for the mode when they agree within
    ``eps_mode`` *relative to the modal probability*; the tolerance makes
    statistics that are discontinuous in the mode count deterministic
    under float jitter.
    """
    check_positive(eps_mode, "eps_mode")
    p = pmf.probs
    modal = float(p.max())
    tied = p >= modal * (1.0 - eps_mode)
    indices = tuple(int(i) for i in np.flatnonzero(tied))
    distance = np.where(tied, 0.0, 1.0)
    return ModeSummary(modal, indices, len(indices), frozen(distance))


def expected_distance_to_class(pmf, k):
    """Expected Hamming distance from a PMF to class ``k``: 1 - p_k."""
    k = check_class_index(k, pmf.n_classes)
    return 1.0 - float(pmf.probs[k])


def sample_classes(pmf, rng, size):
    """Draw ``size`` class indices by inverse CDF on the cumulative vector.

    Deterministic for a given ``numpy.random.Generator`` state.
    """
    cdf = np.cumsum(pmf.probs)
    u = rng.random(size)
    idx = np.searchsorted(cdf, u, side="right")
    # float cumsum can land a hair under 1; clamp the overflow bucket
    return np.minimum(idx, pmf.n_classes - 1)


def sample_class(pmf, rng):
    """Draw one class index from the PMF."""
    return int(sample_classes(pmf, rng, 1)[0])
