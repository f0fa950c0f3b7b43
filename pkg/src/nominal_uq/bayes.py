"""Bayesian Gaussian generative classification (Bayesian QDA).

Each class gets a multivariate Gaussian over the inputs with a conjugate
Normal-Inverse-Wishart belief, and the class prior gets a Dirichlet
belief.  Conjugacy keeps the whole chain analytic: the parameter
posterior updates in closed form, and the exact posterior predictive is
a Dirichlet-mean-weighted mixture of multivariate Student-t densities.
A Monte Carlo predictive (averaging the per-draw class probabilities
over parameter draws) and a plug-in predictive (posterior-mean
parameters only, ignoring parameter uncertainty) sit beside it, so the
contribution of parameter uncertainty can be isolated.

All densities are evaluated in the log domain and combined with
log-sum-exp; well-separated classes underflow naive densities already
at moderate dimension.
"""

from dataclasses import dataclass, field
from math import lgamma

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from .errors import (
    DimensionMismatchError,
    EmptyClassError,
    ImproperPriorError,
    SingularCovarianceError,
    SingularScatterError,
    ValidationError,
)
from .pmf import Pmf, sample_classes
from .validation import as_float_matrix, frozen


@dataclass(frozen=True, eq=False)
class TrainingSet:
    """Labeled feature vectors for the generative classifier.

    ``inputs`` is (N, D); ``labels`` holds class indices 0..K-1.  For a
    proper per-class posterior, N >= K*(D+2) observations are
    recommended (not enforced).
    """

    inputs: np.ndarray = field(repr=False)
    labels: np.ndarray = field(repr=False)
    n_classes: int = 0

    def __init__(self, inputs, labels, n_classes=None):
        inputs = as_float_matrix(inputs, name="inputs")
        labels = np.asarray(labels)
        if labels.ndim != 1 or labels.shape[0] != inputs.shape[0]:
            raise DimensionMismatchError(
                f"labels shape {labels.shape} does not match {inputs.shape[0]} inputs")
        idx = labels.astype(int)
        if np.any(idx != labels):
            raise ValidationError("labels must be integer class indices")
        if inputs.shape[0] < 1 or inputs.shape[1] < 1:
            raise ValidationError("inputs must be a nonempty (N, D) matrix")
        if n_classes is None:
            n_classes = int(idx.max()) + 1
        if n_classes < 2:
            raise ValidationError("need at least two classes")
        if idx.min() < 0 or idx.max() >= n_classes:
            raise ValidationError(f"labels outside 0..{n_classes - 1}")
        object.__setattr__(self, "inputs", frozen(inputs))
        labels_arr = np.array(idx, copy=True)
        labels_arr.setflags(write=False)
        object.__setattr__(self, "labels", labels_arr)
        object.__setattr__(self, "n_classes", int(n_classes))

    @property
    def n_observations(self):
        return self.inputs.shape[0]

    @property
    def n_features(self):
        return self.inputs.shape[1]

    def class_counts(self):
        return np.bincount(self.labels, minlength=self.n_classes)


def _chol(matrix, err):
    try:
        return np.linalg.cholesky(matrix)
    except np.linalg.LinAlgError:
        raise err


@dataclass(frozen=True, eq=False)
class NIWParams:
    """Normal-Inverse-Wishart hyperparameters for one class.

    ``loc`` is the mean's location, ``scale_count`` its pseudo-count,
    ``dof`` the Inverse-Wishart degrees of freedom (> D - 1) and
    ``scatter`` its positive-definite scale matrix.
    """

    loc: np.ndarray = field(repr=False)
    scale_count: float = 1.0
    dof: float = 1.0
    scatter: np.ndarray = field(default=None, repr=False)

    def __init__(self, loc, scale_count, dof, scatter):
        loc = np.asarray(loc, dtype=float)
        scatter = np.asarray(scatter, dtype=float)
        d = loc.shape[0]
        if loc.ndim != 1 or scatter.shape != (d, d):
            raise DimensionMismatchError(
                f"loc {loc.shape} and scatter {scatter.shape} disagree")
        if not (np.all(np.isfinite(loc)) and np.all(np.isfinite(scatter))):
            raise ImproperPriorError("NIW hyperparameters must be finite")
        if scale_count <= 0:
            raise ImproperPriorError(f"scale_count must be > 0, got {scale_count}")
        if dof <= d - 1:
            raise ImproperPriorError(f"dof must exceed D - 1 = {d - 1}, got {dof}")
        scatter = 0.5 * (scatter + scatter.T)  # symmetrize roundoff
        _chol(scatter, ImproperPriorError("scatter matrix is not positive definite"))
        object.__setattr__(self, "loc", frozen(loc))
        object.__setattr__(self, "scale_count", float(scale_count))
        object.__setattr__(self, "dof", float(dof))
        object.__setattr__(self, "scatter", frozen(scatter))

    @property
    def n_features(self):
        return self.loc.shape[0]


@dataclass(frozen=True, eq=False)
class GaussianPosterior:
    """Belief state of the classifier: per-class NIW plus Dirichlet counts.

    The same structure represents the prior (before any data) and the
    posterior (after the conjugate update); an update on zero
    observations is the identity.
    """

    class_params: tuple
    dirichlet: np.ndarray = field(repr=False)

    def __init__(self, class_params, dirichlet):
        class_params = tuple(class_params)
        dirichlet = np.asarray(dirichlet, dtype=float)
        if len(class_params) != dirichlet.shape[0] or len(class_params) < 2:
            raise DimensionMismatchError(
                "need one NIW per class and one Dirichlet count per class")
        if np.any(dirichlet <= 0) or not np.all(np.isfinite(dirichlet)):
            raise ImproperPriorError("Dirichlet counts must be finite and > 0")
        d = class_params[0].n_features
        if any(cp.n_features != d for cp in class_params):
            raise DimensionMismatchError("class NIW dimensions disagree")
        object.__setattr__(self, "class_params", class_params)
        object.__setattr__(self, "dirichlet", frozen(dirichlet))

    @property
    def n_classes(self):
        return len(self.class_params)

    @property
    def n_features(self):
        return self.class_params[0].n_features

    def class_prior_mean(self):
        return self.dirichlet / self.dirichlet.sum()


def default_prior(inputs, n_classes, dirichlet=1.0):
    """Weakly informative proper prior derived from global data moments.

    Location = global mean, scale count = 1, dof = D + 2, scatter =
    global covariance, Dirichlet count ``dirichlet`` per class.
    """
    X = as_float_matrix(inputs, name="inputs")
    if X.shape[0] < 2:
        raise ValidationError("need at least two observations for the default prior")
    d = X.shape[1]
    cov = np.cov(X, rowvar=False).reshape(d, d)
    niw = NIWParams(loc=X.mean(axis=0), scale_count=1.0, dof=d + 2.0, scatter=cov)
    return GaussianPosterior((niw,) * n_classes,
                             np.full(n_classes, float(dirichlet)))


def _niw_update(prior, X_k):
    """Conjugate NIW update from the class-k observations."""
    n = X_k.shape[0]
    if n == 0:
        return prior
    xbar = X_k.mean(axis=0)
    dev = X_k - xbar
    scatter = dev.T @ dev
    kappa_n = prior.scale_count + n
    dm = xbar - prior.loc
    psi_n = (prior.scatter + scatter
             + (prior.scale_count * n / kappa_n) * np.outer(dm, dm))
    loc_n = (prior.scale_count * prior.loc + n * xbar) / kappa_n
    try:
        return NIWParams(loc_n, kappa_n, prior.dof + n, psi_n)
    except ImproperPriorError as err:
        raise SingularScatterError(str(err)) from None


def fit_posterior(data, prior=None, require_all_classes=True):
    """Conjugate posterior from a training set.

    Parameters
    ----------
    data : TrainingSet
    prior : GaussianPosterior, optional
        Defaults to :func:`default_prior` on the pooled inputs.
    require_all_classes : bool
        When True (default) a class with zero observations raises
        :class:`EmptyClassError`; when False its posterior is simply its
        prior (the conjugate update on no data).
    """
    if prior is None:
        prior = default_prior(data.inputs, data.n_classes)
    if prior.n_classes != data.n_classes:
        raise DimensionMismatchError(
            f"prior covers {prior.n_classes} classes, data has {data.n_classes}")
    if prior.n_features != data.n_features:
        raise DimensionMismatchError(
            f"prior is {prior.n_features}-dimensional, data is {data.n_features}")
    counts = data.class_counts()
    if require_all_classes and np.any(counts == 0):
        missing = np.flatnonzero(counts == 0).tolist()
        raise EmptyClassError(f"no observations for classes {missing}")
    params = tuple(
        _niw_update(prior.class_params[k], data.inputs[data.labels == k])
        for k in range(data.n_classes))
    return GaussianPosterior(params, prior.dirichlet + counts)


@dataclass(frozen=True, eq=False)
class PredictiveOutput:
    """Predictive class PMF for one input, tagged with how it was made."""

    pmf: Pmf
    method: str
    n_draws: int = None


def _logsumexp(a, axis=None):
    amax = np.max(a, axis=axis, keepdims=True)
    out = np.log(np.exp(a - amax).sum(axis=axis, keepdims=True)) + amax
    return out if axis is None else np.squeeze(out, axis=axis)


def _softmax_rows(logw):
    shifted = logw - logw.max(axis=1, keepdims=True)
    w = np.exp(shifted)
    return w / w.sum(axis=1, keepdims=True)


def _mahalanobis_sq(X, loc, chol_lower):
    dev = X - loc
    sol = np.linalg.solve(chol_lower, dev.T)
    return (sol * sol).sum(axis=0)


def _gaussian_logpdf(X, loc, cov_chol):
    d = loc.shape[0]
    logdet = 2.0 * np.log(np.diag(cov_chol)).sum()
    q = _mahalanobis_sq(X, loc, cov_chol)
    return -0.5 * (d * np.log(2.0 * np.pi) + logdet + q)


def _student_t_logpdf(X, loc, shape_chol, df):
    d = loc.shape[0]
    logdet = 2.0 * np.log(np.diag(shape_chol)).sum()
    q = _mahalanobis_sq(X, loc, shape_chol)
    return (lgamma(0.5 * (df + d)) - lgamma(0.5 * df)
            - 0.5 * d * np.log(df * np.pi) - 0.5 * logdet
            - 0.5 * (df + d) * np.log1p(q / df))


def _as_points(x_new, d):
    X = np.asarray(x_new, dtype=float)
    single = X.ndim == 1
    X = np.atleast_2d(X)
    if X.shape[1] != d:
        raise DimensionMismatchError(
            f"input has {X.shape[1]} features, posterior expects {d}")
    if not np.all(np.isfinite(X)):
        raise ValidationError("inputs contain NaN or infinite entries")
    return X, single


def predictive_probs_closed(x_new, post):
    """Exact posterior predictive probabilities, (N, K).

    Class k contributes its Dirichlet-mean weight times the multivariate
    Student-t density that integrating the NIW posterior over the class
    mean and covariance produces: df = dof - D + 1, location = loc,
    shape = scatter * (scale_count + 1) / (scale_count * df).
    """
    X, _ = _as_points(x_new, post.n_features)
    d = post.n_features
    logw = np.log(post.class_prior_mean())
    scores = np.empty((X.shape[0], post.n_classes))
    for k, cp in enumerate(post.class_params):
        df = cp.dof - d + 1.0
        scale = cp.scatter * (cp.scale_count + 1.0) / (cp.scale_count * df)
        chol = _chol(scale, SingularScatterError(
            f"class {k}: predictive shape matrix is not positive definite"))
        scores[:, k] = logw[k] + _student_t_logpdf(X, cp.loc, chol, df)
    return _softmax_rows(scores)


def posterior_predictive_closed(x_new, post):
    """Exact predictive PMF for a single input (Student-t mixture)."""
    probs = predictive_probs_closed(x_new, post)
    return PredictiveOutput(Pmf(probs[0], policy="renormalize"), "closed-form")


def _sample_invwishart(rng, dof, scatter_chol):
    """Draw from InvWishart(dof, Psi) given the lower Cholesky of Psi.

    Bartlett construction: with A the lower-triangular factor of a
    Wishart(dof, I) draw, the inverse draw is M^T M for M = A^-1 C^T.
    """
    d = scatter_chol.shape[0]
    A = np.zeros((d, d))
    A[np.diag_indices(d)] = np.sqrt(rng.chisquare(dof - np.arange(d)))
    if d > 1:
        A[np.tril_indices(d, -1)] = rng.standard_normal(d * (d - 1) // 2)
    M = np.linalg.solve(A, scatter_chol.T)
    return M.T @ M


def _sample_invwishart_batch(rng, dof, scatter_chol, size):
    """Batched Inverse-Wishart draws, (size, D, D), via Bartlett factors."""
    d = scatter_chol.shape[0]
    A = np.zeros((size, d, d))
    diag = np.arange(d)
    A[:, diag, diag] = np.sqrt(rng.chisquare(dof - diag, size=(size, d)))
    if d > 1:
        rows, cols = np.tril_indices(d, -1)
        A[:, rows, cols] = rng.standard_normal((size, rows.size))
    M = np.linalg.solve(A, np.broadcast_to(scatter_chol.T, (size, d, d)))
    return np.transpose(M, (0, 2, 1)) @ M


def predictive_probs_mc(x_new, post, n_draws, rng):
    """Monte Carlo posterior predictive probabilities, (N, K).

    Each draw samples class covariances from the Inverse-Wishart
    marginals, class means from their conditional Gaussians, and the
    class prior from the Dirichlet posterior, then evaluates the
    plug-in class probabilities; the draws' probabilities are averaged.
    Draws are processed in fixed-size batches (pure numpy), so results
    are deterministic per seed.
    """
    if n_draws < 1:
        raise ValidationError(f"n_draws must be >= 1, got {n_draws}")
    X, _ = _as_points(x_new, post.n_features)
    n_points, d = X.shape
    chols = [
        _chol(cp.scatter, SingularScatterError(
            f"class {k}: posterior scatter is not positive definite"))
        for k, cp in enumerate(post.class_params)]
    acc = np.zeros((n_points, post.n_classes))
    batch = max(1, min(int(n_draws), 4_000_000 // max(n_points * post.n_classes, 1)))
    done = 0
    log2pi = np.log(2.0 * np.pi)
    while done < n_draws:
        size = min(batch, n_draws - done)
        scores = np.empty((size, n_points, post.n_classes))
        for k, cp in enumerate(post.class_params):
            cov = _sample_invwishart_batch(rng, cp.dof, chols[k], size)
            try:
                cov_chol = np.linalg.cholesky(cov)
            except np.linalg.LinAlgError:
                raise SingularScatterError(
                    f"class {k}: sampled covariance is not positive definite") from None
            z = rng.standard_normal((size, d))
            means = cp.loc + (cov_chol @ z[:, :, None])[:, :, 0] \
                / np.sqrt(cp.scale_count)
            dev = X[None, :, :] - means[:, None, :]       # (size, N, D)
            sol = np.linalg.solve(cov_chol, np.transpose(dev, (0, 2, 1)))
            maha = (sol * sol).sum(axis=1)                # (size, N)
            logdet = 2.0 * np.log(
                np.diagonal(cov_chol, axis1=1, axis2=2)).sum(axis=1)
            scores[:, :, k] = -0.5 * (d * log2pi + logdet[:, None] + maha)
        weights = rng.dirichlet(post.dirichlet, size=size)  # (size, K)
        with np.errstate(divide="ignore"):  # a zero weight is a valid draw
            scores += np.log(weights)[:, None, :]
        shifted = scores - scores.max(axis=2, keepdims=True)
        probs = np.exp(shifted)
        probs /= probs.sum(axis=2, keepdims=True)
        acc += probs.sum(axis=0)
        done += size
    return acc / n_draws


def posterior_predictive_mc(x_new, post, n_draws, rng):
    """Monte Carlo predictive PMF for a single input."""
    probs = predictive_probs_mc(x_new, post, n_draws, rng)
    return PredictiveOutput(Pmf(probs[0], policy="renormalize"), "mc",
                            n_draws=int(n_draws))


def predictive_probs_plug_in(x_new, post):
    """Plug-in class probabilities at the posterior-mean parameters.

    Ignores parameter uncertainty: Gaussian densities at the posterior
    mean location and mean covariance scatter/(dof - D - 1), weighted by
    the Dirichlet mean.  Needs dof > D + 1 for the mean covariance to
    exist.
    """
    X, _ = _as_points(x_new, post.n_features)
    d = post.n_features
    logw = np.log(post.class_prior_mean())
    scores = np.empty((X.shape[0], post.n_classes))
    for k, cp in enumerate(post.class_params):
        if cp.dof <= d + 1.0:
            raise ImproperPriorError(
                f"class {k}: plug-in needs dof > D + 1, got {cp.dof}")
        cov = cp.scatter / (cp.dof - d - 1.0)
        chol = _chol(cov, SingularScatterError(
            f"class {k}: posterior-mean covariance is not positive definite"))
        scores[:, k] = logw[k] + _gaussian_logpdf(X, cp.loc, chol)
    return _softmax_rows(scores)


def plug_in_predict(x_new, post):
    """Plug-in predictive PMF for a single input."""
    probs = predictive_probs_plug_in(x_new, post)
    return PredictiveOutput(Pmf(probs[0], policy="renormalize"), "plug-in")


def predict_over_realizations(realizations, post, method="closed-form",
                              n_draws=1000, rng=None):
    """Average the predictive PMF over measurement realizations of one input.

    Input-measurement uncertainty is represented by replicated
    realizations of the same underlying input (an (R, D) matrix); each
    realization is scored and the predictive PMFs are averaged.
    """
    X, single = _as_points(realizations, post.n_features)
    if single:
        raise ValidationError("expected an (R, D) matrix of realizations")
    if method == "closed-form":
        probs = predictive_probs_closed(X, post)
    elif method == "plug-in":
        probs = predictive_probs_plug_in(X, post)
    elif method == "mc":
        if rng is None:
            raise ValidationError("method='mc' needs an rng")
        probs = predictive_probs_mc(X, post, n_draws, rng)
    else:
        raise ValidationError(f"unknown method {method!r}")
    return PredictiveOutput(Pmf(probs.mean(axis=0), policy="renormalize"), method,
                            n_draws=int(n_draws) if method == "mc" else None)


def synth_gaussian_dataset(means, covs, weights, n, rng):
    """Synthetic Gaussian-mixture training set, deterministic per seed.

    Parameters
    ----------
    means : (K, D) array
    covs : (K, D, D) array of positive-definite covariances
    weights : Pmf or array_like
        Class weights.
    n : int
        Number of labeled draws.
    rng : numpy.random.Generator
    """
    means = as_float_matrix(means, name="means")
    covs = np.asarray(covs, dtype=float)
    K, d = means.shape
    if covs.shape != (K, d, d):
        raise DimensionMismatchError(
            f"covs shape {covs.shape}, expected {(K, d, d)}")
    if not isinstance(weights, Pmf):
        weights = Pmf(weights)
    if weights.n_classes != K:
        raise DimensionMismatchError(
            f"{weights.n_classes} weights for {K} classes")
    if n < 1:
        raise ValidationError(f"n must be >= 1, got {n}")
    chols = [
        _chol(covs[k], SingularCovarianceError(
            f"class {k}: covariance is not positive definite"))
        for k in range(K)]
    labels = sample_classes(weights, rng, n)
    X = np.empty((n, d))
    for k in range(K):  # class-ordered fill: reproducible chunking
        mask = labels == k
        count = int(mask.sum())
        if count:
            X[mask] = means[k] + rng.standard_normal((count, d)) @ chols[k].T
    return TrainingSet(X, labels, n_classes=K)


class BayesianQDA(BaseEstimator, ClassifierMixin):
    """Bayesian quadratic discriminant analysis, sklearn-style.

    ``fit`` runs the conjugate NIW + Dirichlet update; ``predict_proba``
    returns posterior predictive PMFs, and is the natural feed into
    :class:`nominal_uq.dispersion.DispersionStatistics` or the scoring
    functions.

    Parameters
    ----------
    method : {"closed-form", "mc", "plug-in"}
        Predictive path: exact Student-t mixture, Monte Carlo over
        parameter draws, or posterior-mean plug-in.
    posterior_samples : int
        Parameter draws per prediction when ``method="mc"``.
    prior_scale_count, prior_dof, prior_dirichlet : float or None
        Prior hyperparameters; ``prior_dof=None`` uses D + 2.  Location
        and scatter always come from the pooled training data (see
        :func:`default_prior`).
    random_state : int or numpy.random.Generator, optional
        Seeds the MC path; each ``predict_proba`` call re-seeds so
        repeated calls are identical.
    """

    def __init__(self, method="closed-form", posterior_samples=1000,
                 prior_scale_count=1.0, prior_dof=None, prior_dirichlet=1.0,
                 random_state=None):
        self.method = method
        self.posterior_samples = posterior_samples
        self.prior_scale_count = prior_scale_count
        self.prior_dof = prior_dof
        self.prior_dirichlet = prior_dirichlet
        self.random_state = random_state

    def fit(self, X, y):
        X = as_float_matrix(X, name="X")
        y = np.asarray(y)
        if y.shape != (X.shape[0],):
            raise DimensionMismatchError(
                f"y shape {y.shape} does not match {X.shape[0]} rows")
        self.classes_, encoded = np.unique(y, return_inverse=True)
        if self.classes_.shape[0] < 2:
            raise ValidationError("need at least two classes in y")
        data = TrainingSet(X, encoded, n_classes=self.classes_.shape[0])
        prior = default_prior(X, data.n_classes, dirichlet=self.prior_dirichlet)
        if self.prior_scale_count != 1.0 or self.prior_dof is not None:
            d = X.shape[1]
            base = prior.class_params[0]
            niw = NIWParams(base.loc, self.prior_scale_count,
                            self.prior_dof if self.prior_dof is not None else d + 2.0,
                            base.scatter)
            prior = GaussianPosterior((niw,) * data.n_classes, prior.dirichlet)
        self.posterior_ = fit_posterior(data, prior)
        self.n_features_in_ = X.shape[1]
        return self

    def _check_fitted(self):
        if not hasattr(self, "posterior_"):
            raise ValidationError("estimator is not fitted; call fit first")

    def predict_proba(self, X):
        self._check_fitted()
        X = as_float_matrix(X, name="X")
        if self.method == "closed-form":
            return predictive_probs_closed(X, self.posterior_)
        if self.method == "plug-in":
            return predictive_probs_plug_in(X, self.posterior_)
        if self.method == "mc":
            rng = np.random.default_rng(self.random_state)
            return predictive_probs_mc(X, self.posterior_,
                                       self.posterior_samples, rng)
        raise ValidationError(f"unknown method {self.method!r}")

    def predict(self, X):
        probs = self.predict_proba(X)
        return self.classes_[probs.argmax(axis=1)]
