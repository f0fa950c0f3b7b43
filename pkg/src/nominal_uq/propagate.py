"""Propagating nominal-property uncertainty into a quantitative output.

A downstream measurement z = g(x, y) conditioned on a nominal variable y
splits into one regime g_k per class.  Given the class PMF and per-regime
output moments (or samplers), the output mean and variance follow either
analytically (mixture moments) or by Monte Carlo sampling of the PMF.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionMismatchError,
    MissingSamplerError,
    MissingSdError,
    ValidationError,
)
from .pmf import sample_classes
from .validation import as_float_vector, frozen

_SAMPLER_KINDS = ("gaussian", "uniform", "constant")


def _make_sampler(kind, params):
    if kind == "gaussian":
        mu, sigma = float(params["mu"]), float(params["sigma"])
        if sigma < 0:
            raise ValidationError(f"gaussian sigma must be >= 0, got {sigma}")
        return (lambda rng, size: rng.normal(mu, sigma, size)), mu, sigma
    if kind == "uniform":
        low, high = float(params["low"]), float(params["high"])
        if high < low:
            raise ValidationError(f"uniform needs low <= high, got [{low}, {high}]")
        return ((lambda rng, size: rng.uniform(low, high, size)),
                (low + high) / 2.0, (high - low) / np.sqrt(12.0))
    if kind == "constant":
        value = float(params["value"])
        return (lambda rng, size: np.full(size, value)), value, 0.0
    raise ValidationError(f"unknown sampler kind {kind!r}; expected one of {_SAMPLER_KINDS}")


@dataclass(frozen=True, eq=False)
class ConditionalQuantModel:
    """Per-class output regimes of a conditional measurement model.

    Attributes
    ----------
    means : numpy.ndarray
        Regime means mu_k, in output units.
    sds : numpy.ndarray or None
        Regime standard deviations sigma_k >= 0; required for the
        analytic variance.
    samplers : tuple of callables or None
        Per-regime draws of g_k(x); each maps ``(rng, size)`` to a float
        array.  Required for Monte Carlo propagation.
    names : tuple of str or None
    """

    means: np.ndarray = field(repr=False)
    sds: np.ndarray = field(default=None, repr=False)
    samplers: tuple = field(default=None, repr=False)
    names: tuple = None

    def __init__(self, means, sds=None, samplers=None, names=None):
        means = as_float_vector(means, name="means")
        if means.size < 2:
            raise ValidationError("need at least two regimes")
        if sds is not None:
            sds = as_float_vector(sds, name="sds")
            if sds.size != means.size:
                raise DimensionMismatchError(
                    f"{sds.size} sds for {means.size} regimes")
            if np.any(sds < 0):
                raise ValidationError("regime sds must be >= 0")
            sds = frozen(sds)
        if samplers is not None:
            samplers = tuple(samplers)
            if len(samplers) != means.size:
                raise DimensionMismatchError(
                    f"{len(samplers)} samplers for {means.size} regimes")
            if not all(callable(s) for s in samplers):
                raise ValidationError("samplers must be callables (rng, size) -> array")
        if names is not None:
            names = tuple(str(n) for n in names)
            if len(names) != means.size:
                raise DimensionMismatchError(
                    f"{len(names)} names for {means.size} regimes")
        object.__setattr__(self, "means", frozen(means))
        object.__setattr__(self, "sds", sds)
        object.__setattr__(self, "samplers", samplers)
        object.__setattr__(self, "names", names)

    @property
    def n_regimes(self):
        return self.means.size

    @classmethod
    def from_spec(cls, spec):
        """Build a model from a parsed spec mapping.

        Expected layout: ``{"classes": [{"name", "mu", "sigma",
        "sampler": {"kind": gaussian|uniform|constant, "params": {...}}},
        ...]}``.  ``mu``/``sigma`` may be omitted when a sampler with
        derivable moments is given; a sampler may be omitted for
        analytic-only use.
        """
        try:
            entries = spec["classes"]
        except (TypeError, KeyError):
            raise ValidationError('model spec needs a top-level "classes" list')
        if not isinstance(entries, list) or len(entries) < 2:
            raise ValidationError("model spec needs at least two classes")
        means, sds, samplers, names = [], [], [], []
        any_sampler = False
        for i, entry in enumerate(entries):
            names.append(str(entry.get("name", i)))
            sampler_spec = entry.get("sampler")
            if sampler_spec is not None:
                kind = sampler_spec.get("kind")
                fn, mu, sigma = _make_sampler(kind, sampler_spec.get("params", {}))
                samplers.append(fn)
                any_sampler = True
            else:
                samplers.append(None)
                mu = sigma = None
            mu = float(entry["mu"]) if "mu" in entry else mu
            sigma = float(entry["sigma"]) if "sigma" in entry else sigma
            if mu is None:
                raise ValidationError(f'class {i}: no "mu" and no sampler to derive it')
            means.append(mu)
            sds.append(sigma)
        have_all_sds = all(s is not None for s in sds)
        have_all_samplers = all(s is not None for s in samplers)
        return cls(
            means,
            sds=sds if have_all_sds else None,
            samplers=tuple(samplers) if (any_sampler and have_all_samplers) else None,
            names=names,
        )

    def check_consistency(self, rng, n=10_000):
        """Warn when a sampler's sample moments contradict (mu_k, sigma_k).

        Draws ``n`` values per regime and flags regimes whose sample mean
        sits more than 5 standard errors from the declared mean, or whose
        sample sd is off by more than 5 of its own standard errors.
        Catches mis-specified regime definitions before a long MC run.
        """
        if self.sds is None or self.samplers is None:
            return
        for k, sampler in enumerate(self.samplers):
            draws = np.asarray(sampler(rng, n), dtype=float)
            sd = draws.std(ddof=1)
            floor = 1e-12 * (1.0 + abs(self.means[k]))
            se_mean = max(sd / np.sqrt(n), floor)
            if abs(draws.mean() - self.means[k]) > 5.0 * se_mean:
                warnings.warn(
                    f"regime {k}: sampler mean {draws.mean():.6g} is inconsistent "
                    f"with declared mean {self.means[k]:.6g}", stacklevel=2)
            se_sd = max(sd / np.sqrt(2.0 * n), floor)
            if abs(sd - self.sds[k]) > 5.0 * se_sd:
                warnings.warn(
                    f"regime {k}: sampler sd {sd:.6g} is inconsistent "
                    f"with declared sd {self.sds[k]:.6g}", stacklevel=2)


@dataclass(frozen=True, eq=False)
class PropagationResult:
    """Output moments of the propagated quantity."""

    mean: float
    variance: float
    method: str
    n_samples: int = None
    standard_error: float = None
    histogram: tuple = None  # (counts, bin_edges)

    def as_dict(self):
        out = {"mean": self.mean, "variance": self.variance, "method": self.method}
        if self.method == "monte-carlo":
            out["n_samples"] = self.n_samples
            out["standard_error"] = self.standard_error
        if self.histogram is not None:
            counts, edges = self.histogram
            out["histogram"] = {"counts": list(counts), "bin_edges": list(edges)}
        return out


def _check_regimes(pmf, model):
    if model.n_regimes != pmf.n_classes:
        raise DimensionMismatchError(
            f"model has {model.n_regimes} regimes for a {pmf.n_classes}-class PMF")


def analytic_mean(pmf, model):
    """Mixture mean of the output: ``sum_k p_k mu_k``."""
    _check_regimes(pmf, model)
    return float(pmf.probs @ model.means)


def analytic_variance(pmf, model):
    """Mixture variance: ``sum_k p_k (sigma_k^2 + mu_k^2) - mean^2``.

    Nonnegative for every valid input; tiny negative roundoff near
    degenerate mixtures is clamped to zero.
    """
    _check_regimes(pmf, model)
    if model.sds is None:
        raise MissingSdError("analytic variance needs a sd for every regime")
    p = pmf.probs
    mean = float(p @ model.means)
    second = float(p @ (model.sds ** 2 + model.means ** 2))
    return max(0.0, second - mean * mean)


def mc_propagate(pmf, model, n, rng, histogram_bins=None, check=True):
    """Monte Carlo propagation: sample a class, then its regime output.

    Parameters
    ----------
    n : int
        Number of draws.
    rng : numpy.random.Generator
        Owns the randomness; results are deterministic per seed.
    histogram_bins : int, optional
        When given, also return a histogram of the output draws over
        ``histogram_bins`` equal bins spanning the sample range.
    check : bool
        Run the declared-moment consistency check (on an independent
        spawned stream, so the main draw sequence is unaffected).
    """
    _check_regimes(pmf, model)
    if model.samplers is None or any(s is None for s in model.samplers):
        raise MissingSamplerError("Monte Carlo propagation needs a sampler per regime")
    if n < 1:
        raise ValidationError(f"n must be >= 1, got {n}")
    if check and model.sds is not None:
        model.check_consistency(rng.spawn(1)[0])
    classes = sample_classes(pmf, rng, n)
    z = np.empty(n)
    # regimes evaluated in class order: fixed chunking keeps the draw
    # sequence reproducible for a given seed
    for k in range(model.n_regimes):
        mask = classes == k
        count = int(mask.sum())
        if count:
            z[mask] = model.samplers[k](rng, count)
    variance = float(z.var(ddof=1)) if n > 1 else 0.0
    sd = np.sqrt(variance)
    hist = None
    if histogram_bins is not None:
        if histogram_bins < 1:
            raise ValidationError(f"histogram_bins must be >= 1, got {histogram_bins}")
        counts, edges = np.histogram(z, bins=int(histogram_bins))
        hist = (counts.tolist(), edges.tolist())
    return PropagationResult(
        mean=float(z.mean()),
        variance=variance,
        method="monte-carlo",
        n_samples=int(n),
        standard_error=float(sd / np.sqrt(n)),
        histogram=hist,
    )
