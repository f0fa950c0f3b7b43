"""Proper scoring rules and confusion-matrix evaluation.

Operates on labeled prediction sets: an (N, K) matrix of class
probabilities plus the true class per observation.  Cross-entropy and
Brier scores grade individual predictions; their expected, normalized
forms (EXE, EBS) grade a whole prediction set against the trivial
classifier that always reports the test-set class frequencies.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    AmbiguousArgmaxError,
    DegeneratePriorError,
    DimensionMismatchError,
    ValidationError,
)
from .pmf import EPS_MODE, EPS_NORM, Pmf
from .validation import as_float_matrix, check_positive, frozen

#: Probabilities below this are clipped inside the cross-entropy log.
EPS_CLIP = 1e-12


@dataclass(frozen=True, eq=False)
class LabeledProbabilities:
    """Validated (probability matrix, one-hot labels) pair.

    Attributes
    ----------
    probs : numpy.ndarray
        (N, K); every row is a valid PMF.
    labels : numpy.ndarray
        (N, K) one-hot float matrix.
    """

    probs: np.ndarray = field(repr=False)
    labels: np.ndarray = field(repr=False)

    def __init__(self, probs, labels, *, eps_norm=EPS_NORM):
        probs = as_float_matrix(probs, name="probs")
        if probs.shape[0] < 1:
            raise ValidationError("need at least one observation")
        if probs.shape[1] < 2:
            raise ValidationError("need at least two classes")
        # row validation (and exact renormalization) via the Pmf contract
        rows = np.empty_like(probs)
        for i, row in enumerate(probs):
            rows[i] = Pmf(row, eps_norm=eps_norm).probs
        labels = np.asarray(labels)
        if labels.ndim == 1:
            idx = labels.astype(int)
            if np.any(idx != np.asarray(labels)):
                raise ValidationError("label vector must hold integer class indices")
            if idx.min() < 0 or idx.max() >= probs.shape[1]:
                raise ValidationError(
                    f"labels outside 0..{probs.shape[1] - 1}")
            onehot = np.zeros_like(rows)
            onehot[np.arange(len(idx)), idx] = 1.0
        elif labels.ndim == 2:
            onehot = labels.astype(float)
            if onehot.shape != rows.shape:
                raise DimensionMismatchError(
                    f"labels shape {onehot.shape} != probs shape {rows.shape}")
            if not np.all(np.isin(onehot, (0.0, 1.0))) or \
                    not np.all(onehot.sum(axis=1) == 1.0):
                raise ValidationError("label rows must be one-hot")
        else:
            raise DimensionMismatchError("labels must be a vector or a matrix")
        object.__setattr__(self, "probs", frozen(rows))
        object.__setattr__(self, "labels", frozen(onehot))

    @property
    def n_observations(self):
        return self.probs.shape[0]

    @property
    def n_classes(self):
        return self.probs.shape[1]

    @property
    def label_indices(self):
        return self.labels.argmax(axis=1)


def xe_per_obs(label_row, prob_row, eps_clip=EPS_CLIP):
    """Cross-entropy of one prediction: ``-sum_k y_k log p_k`` (nats).

    Probabilities are clipped below at ``eps_clip`` so the log stays
    finite when a true class got probability zero.
    """
    check_positive(eps_clip, "eps_clip")
    y = np.asarray(label_row, dtype=float)
    p = np.asarray(prob_row, dtype=float)
    return float(-(y * np.log(np.maximum(p, eps_clip))).sum())


def brier_per_obs(label_row, prob_row):
    """Brier score of one prediction: mean squared error over classes."""
    y = np.asarray(label_row, dtype=float)
    p = np.asarray(prob_row, dtype=float)
    return float(((y - p) ** 2).mean())


def xe_scores(data, eps_clip=EPS_CLIP):
    """Per-observation cross-entropies, as a length-N array."""
    check_positive(eps_clip, "eps_clip")
    picked = data.probs[np.arange(data.n_observations), data.label_indices]
    return -np.log(np.maximum(picked, eps_clip))


def brier_scores(data):
    """Per-observation Brier scores, as a length-N array."""
    return ((data.labels - data.probs) ** 2).mean(axis=1)


def test_prior(data):
    """Class frequencies of the test labels, as a PMF."""
    counts = data.labels.sum(axis=0)
    return Pmf(counts / data.n_observations, policy="renormalize")


def _prior_entropy_nats(q):
    positive = q.probs[q.probs > 0]
    return float(-(positive * np.log(positive)).sum())


def exe(data, eps_clip=EPS_CLIP):
    """Expected cross-entropy, normalized to [0 = perfect, 1 = prior].

    The denominator is the Shannon entropy (nats) of the test-set class
    frequencies, i.e. the mean cross-entropy of the trivial classifier
    that always predicts those frequencies.
    """
    q = test_prior(data)
    denom = _prior_entropy_nats(q)
    if denom <= 0.0:
        raise DegeneratePriorError(
            "test set holds a single class; the prior classifier is exact")
    return float(xe_scores(data, eps_clip).mean() / denom)


def ebs(data):
    """Expected Brier score, normalized to [0 = perfect, 1 = prior]."""
    q = test_prior(data).probs
    denom = float((q * (1.0 - q)).sum())
    if denom <= 0.0:
        raise DegeneratePriorError(
            "test set holds a single class; the prior classifier is exact")
    per_obs = ((data.labels - data.probs) ** 2).sum(axis=1)
    return float(per_obs.mean() / denom)


@dataclass(frozen=True, eq=False)
class ConfusionMatrix:
    """Counts and per-class rates for argmax predictions.

    ``counts[j, k]`` is the number of observations with true class j
    predicted as k.  Rates with an empty denominator (a class absent
    from labels or predictions) are reported as 0.
    """

    counts: np.ndarray = field(repr=False)
    true_positive_rate: np.ndarray = field(repr=False)
    false_positive_rate: np.ndarray = field(repr=False)
    true_negative_rate: np.ndarray = field(repr=False)
    false_negative_rate: np.ndarray = field(repr=False)
    classification_loss: float = 0.0

    @property
    def n_observations(self):
        return int(self.counts.sum())

    def as_dict(self):
        return {
            "counts": self.counts.astype(int).tolist(),
            "true_positive_rate": self.true_positive_rate.tolist(),
            "false_positive_rate": self.false_positive_rate.tolist(),
            "true_negative_rate": self.true_negative_rate.tolist(),
            "false_negative_rate": self.false_negative_rate.tolist(),
            "classification_loss": self.classification_loss,
        }


def _safe_ratio(num, den):
    return np.where(den > 0, num / np.maximum(den, 1), 0.0)


def confusion(data, tie_rule="lowest-index", eps_mode=EPS_MODE):
    """Confusion matrix from argmax predictions.

    Ties in a probability row are detected at the relative tolerance
    ``eps_mode``; ``tie_rule`` picks the lowest tied index (default,
    deterministic) or raises :class:`AmbiguousArgmaxError`.
    """
    if tie_rule not in ("lowest-index", "error"):
        raise ValidationError(f"unknown tie_rule {tie_rule!r}")
    check_positive(eps_mode, "eps_mode")
    K = data.n_classes
    modal = data.probs.max(axis=1, keepdims=True)
    tied = data.probs >= modal * (1.0 - eps_mode)
    if tie_rule == "error":
        ambiguous = np.flatnonzero(tied.sum(axis=1) > 1)
        if ambiguous.size:
            raise AmbiguousArgmaxError(
                f"tied argmax in rows {ambiguous[:10].tolist()}")
    predicted = tied.argmax(axis=1)  # first tied index
    truth = data.label_indices
    counts = np.zeros((K, K))
    np.add.at(counts, (truth, predicted), 1.0)
    n = data.n_observations
    tp = np.diag(counts)
    fn = counts.sum(axis=1) - tp
    fp = counts.sum(axis=0) - tp
    tn = n - tp - fn - fp
    return ConfusionMatrix(
        counts=frozen(counts),
        true_positive_rate=frozen(_safe_ratio(tp, tp + fn)),
        false_positive_rate=frozen(_safe_ratio(fp, fp + tn)),
        true_negative_rate=frozen(_safe_ratio(tn, tn + fp)),
        false_negative_rate=frozen(_safe_ratio(fn, fn + tp)),
        classification_loss=float(1.0 - tp.sum() / n),
    )
