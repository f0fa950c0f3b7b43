from math import lgamma, log, pi

import numpy as np
import pytest

from nominal_uq import (
    GaussianPosterior,
    NIWParams,
    Pmf,
    TrainingSet,
    confusion,
    default_prior,
    ebs,
    entropy_norm,
    exe,
    fit_posterior,
    LabeledProbabilities,
    plug_in_predict,
    posterior_predictive_closed,
    posterior_predictive_mc,
    predict_over_realizations,
    predictive_probs_closed,
    predictive_probs_mc,
    predictive_probs_plug_in,
    report_all,
    synth_gaussian_dataset,
)
from nominal_uq.errors import (
    DimensionMismatchError,
    EmptyClassError,
    ImproperPriorError,
    SingularCovarianceError,
    ValidationError,
)


def unit_prior(d, n_classes):
    niw = NIWParams(loc=np.zeros(d), scale_count=1.0, dof=d + 2.0,
                    scatter=np.eye(d))
    return GaussianPosterior((niw,) * n_classes, np.ones(n_classes))


def two_class_problem(rng, n_per_class=400, gap=2.5):
    means = np.array([[0.0, 0.0], [gap, 0.0]])
    covs = np.stack([np.eye(2)] * 2)
    return synth_gaussian_dataset(means, covs, [0.5, 0.5], 2 * n_per_class, rng)


class TestTrainingSet:
    def test_basic_properties(self):
        data = TrainingSet([[0.0, 1.0], [2.0, 3.0]], [0, 1])
        assert data.n_observations == 2
        assert data.n_features == 2
        np.testing.assert_array_equal(data.class_counts(), [1, 1])

    def test_rejects_bad_labels(self):
        with pytest.raises(ValidationError):
            TrainingSet([[0.0], [1.0]], [0, 2], n_classes=2)
        with pytest.raises(ValidationError):
            TrainingSet([[0.0], [1.0]], [0.5, 1.0])
        with pytest.raises(DimensionMismatchError):
            TrainingSet([[0.0], [1.0]], [0])


class TestPriors:
    def test_default_prior_uses_global_moments(self, rng):
        X = rng.normal(2.0, 3.0, size=(500, 2))
        prior = default_prior(X, 3)
        base = prior.class_params[0]
        np.testing.assert_allclose(base.loc, X.mean(axis=0), rtol=1e-12)
        np.testing.assert_allclose(base.scatter, np.cov(X, rowvar=False),
                                   rtol=1e-12)
        assert base.dof == 4.0 and base.scale_count == 1.0
        np.testing.assert_array_equal(prior.dirichlet, [1.0, 1.0, 1.0])

    def test_improper_hyperparameters_rejected(self):
        with pytest.raises(ImproperPriorError):
            NIWParams(loc=[0.0, 0.0], scale_count=0.0, dof=4.0, scatter=np.eye(2))
        with pytest.raises(ImproperPriorError):
            NIWParams(loc=[0.0, 0.0], scale_count=1.0, dof=0.5, scatter=np.eye(2))
        with pytest.raises(ImproperPriorError):
            NIWParams(loc=[0.0, 0.0], scale_count=1.0, dof=4.0,
                      scatter=[[1.0, 2.0], [2.0, 1.0]])
        with pytest.raises(ImproperPriorError):
            GaussianPosterior((NIWParams([0.0], 1.0, 2.0, [[1.0]]),) * 2,
                              [1.0, 0.0])


class TestFitPosterior:
    def test_hand_computed_unit_case(self):
        """One observation per class under unit hyperparameters (D=1)."""
        prior_niw = NIWParams(loc=[0.0], scale_count=1.0, dof=1.0,
                              scatter=[[1.0]])
        prior = GaussianPosterior((prior_niw,) * 2, [1.0, 1.0])
        post = fit_posterior(TrainingSet([[0.0], [2.0]], [0, 1]), prior)
        for k, (loc, scatter) in enumerate([(0.0, 1.0), (1.0, 3.0)]):
            cp = post.class_params[k]
            assert cp.scale_count == 2.0 and cp.dof == 2.0
            assert abs(cp.loc[0] - loc) < 1e-15
            assert abs(cp.scatter[0, 0] - scatter) < 1e-15
        np.testing.assert_array_equal(post.dirichlet, [2.0, 2.0])

    def test_empty_class_is_identity_update(self):
        prior = unit_prior(2, 3)
        data = TrainingSet([[0.1, 0.2], [0.3, -0.1]], [0, 1], n_classes=3)
        post = fit_posterior(data, prior, require_all_classes=False)
        empty = post.class_params[2]
        base = prior.class_params[2]
        np.testing.assert_array_equal(empty.loc, base.loc)
        np.testing.assert_array_equal(empty.scatter, base.scatter)
        assert empty.scale_count == base.scale_count
        assert post.dirichlet[2] == prior.dirichlet[2]

    def test_empty_class_rejected_by_default(self):
        data = TrainingSet([[0.1, 0.2], [0.3, -0.1]], [0, 1], n_classes=3)
        with pytest.raises(EmptyClassError):
            fit_posterior(data, unit_prior(2, 3))

    def test_location_converges_to_sample_mean(self):
        rng = np.random.default_rng(31)
        data = two_class_problem(rng, n_per_class=10_000)
        post = fit_posterior(data, unit_prior(2, 2))
        for k in range(2):
            sample_mean = data.inputs[data.labels == k].mean(axis=0)
            assert np.max(np.abs(post.class_params[k].loc - sample_mean)) < 1e-3

    def test_duplicated_dataset_matches_sufficient_stats_oracle(self, rng):
        """Doubling every observation equals the update with (2n, xbar, 2S)."""
        X = rng.normal(size=(40, 3))
        labels = rng.integers(0, 2, size=40)
        labels[:2] = [0, 1]
        prior = unit_prior(3, 2)
        doubled = fit_posterior(
            TrainingSet(np.vstack([X, X]), np.concatenate([labels, labels])),
            prior)
        for k in range(2):
            X_k = X[labels == k]
            n = 2 * len(X_k)
            xbar = X_k.mean(axis=0)
            scatter = 2 * (X_k - xbar).T @ (X_k - xbar)
            base = prior.class_params[k]
            kappa = base.scale_count + n
            dm = xbar - base.loc
            psi = base.scatter + scatter \
                + base.scale_count * n / kappa * np.outer(dm, dm)
            loc = (base.scale_count * base.loc + n * xbar) / kappa
            cp = doubled.class_params[k]
            assert cp.scale_count == kappa and cp.dof == base.dof + n
            np.testing.assert_allclose(cp.loc, loc, rtol=1e-12)
            np.testing.assert_allclose(cp.scatter, psi, rtol=1e-10)

    def test_prior_shape_mismatch(self):
        data = TrainingSet([[0.0, 1.0], [1.0, 0.0]], [0, 1])
        with pytest.raises(DimensionMismatchError):
            fit_posterior(data, unit_prior(3, 2))
        with pytest.raises(DimensionMismatchError):
            fit_posterior(data, unit_prior(2, 4))


def student_t_pdf_1d(x, df, loc, scale_sq):
    """Independent scalar Student-t density, written out longhand."""
    z2 = (x - loc) ** 2 / (df * scale_sq)
    return np.exp(lgamma((df + 1) / 2) - lgamma(df / 2)
                  - 0.5 * log(df * pi * scale_sq)
                  - (df + 1) / 2 * log(1 + z2))


class TestClosedFormPredictive:
    def test_hand_computable_1d_case(self):
        """D=1 unit-hyperparameter posterior against a longhand t-ratio."""
        prior_niw = NIWParams(loc=[0.0], scale_count=1.0, dof=1.0,
                              scatter=[[1.0]])
        prior = GaussianPosterior((prior_niw,) * 2, [1.0, 1.0])
        post = fit_posterior(TrainingSet([[0.0], [2.0]], [0, 1]), prior)
        out = posterior_predictive_closed([1.0], post)
        # posterior: kappa=2, dof=2 -> df = 2, scale = Psi * 3 / 4
        d0 = student_t_pdf_1d(1.0, 2.0, 0.0, 1.0 * 3 / 4)
        d1 = student_t_pdf_1d(1.0, 2.0, 1.0, 3.0 * 3 / 4)
        expected = d0 / (d0 + d1)
        assert abs(out.pmf[0] - expected) < 1e-12
        assert abs(out.pmf[0] - 0.4459786133520576) < 1e-12
        assert out.method == "closed-form"

    def test_symmetric_posteriors_split_evenly(self):
        left = NIWParams([-1.0, 0.0], 3.0, 6.0, np.eye(2) * 2)
        right = NIWParams([1.0, 0.0], 3.0, 6.0, np.eye(2) * 2)
        post = GaussianPosterior((left, right), [5.0, 5.0])
        out = posterior_predictive_closed([0.0, 0.7], post)
        np.testing.assert_array_equal(out.pmf.probs, [0.5, 0.5])

    def test_batch_matches_single(self, rng):
        data = two_class_problem(rng)
        post = fit_posterior(data)
        X = data.inputs[:7]
        batch = predictive_probs_closed(X, post)
        for i, x in enumerate(X):
            np.testing.assert_allclose(
                posterior_predictive_closed(x, post).pmf.probs,
                batch[i], rtol=1e-12)

    def test_separated_point_is_certain(self, rng):
        """An input 10 sds inside one class gets >= 0.99 probability."""
        means = np.array([[0.0, 0.0], [10.0, 0.0], [5.0, 9.0]])
        covs = np.stack([np.eye(2)] * 3)
        data = synth_gaussian_dataset(means, covs, [1 / 3] * 3, 900, rng)
        post = fit_posterior(data)
        out = posterior_predictive_closed([0.0, 0.0], post)
        assert out.pmf[0] >= 0.99

    def test_predictive_rows_are_valid_pmfs(self, rng):
        data = two_class_problem(rng)
        post = fit_posterior(data)
        probs = predictive_probs_closed(rng.normal(size=(50, 2)), post)
        for row in probs:
            Pmf(row)  # strict validation

    def test_label_permutation_equivariance(self, rng):
        data = two_class_problem(rng)
        post = fit_posterior(data)
        swapped = fit_posterior(TrainingSet(data.inputs, 1 - data.labels))
        X = rng.normal(loc=[1.2, 0.0], size=(10, 2))
        np.testing.assert_allclose(predictive_probs_closed(X, post),
                                   predictive_probs_closed(X, swapped)[:, ::-1],
                                   rtol=1e-10)


class TestMonteCarloPredictive:
    def test_deterministic_given_seed(self, rng):
        data = two_class_problem(rng)
        post = fit_posterior(data)
        x = [1.25, 0.0]
        a = posterior_predictive_mc(x, post, 500, np.random.default_rng(4))
        b = posterior_predictive_mc(x, post, 500, np.random.default_rng(4))
        np.testing.assert_array_equal(a.pmf.probs, b.pmf.probs)
        assert a.method == "mc" and a.n_draws == 500

    def test_symmetry_within_mc_error(self):
        left = NIWParams([-1.0, 0.0], 3.0, 6.0, np.eye(2) * 2)
        right = NIWParams([1.0, 0.0], 3.0, 6.0, np.eye(2) * 2)
        post = GaussianPosterior((left, right), [5.0, 5.0])
        out = posterior_predictive_mc([0.0, 0.7], post, 20_000,
                                      np.random.default_rng(11))
        assert abs(out.pmf[0] - 0.5) < 0.02

    def test_matches_closed_form_in_total_variation(self, rng):
        data = two_class_problem(rng, n_per_class=600)
        post = fit_posterior(data)
        X = rng.normal(loc=[1.25, 0.0], scale=1.5, size=(25, 2))
        closed = predictive_probs_closed(X, post)
        mc = predictive_probs_mc(X, post, 4000, np.random.default_rng(13))
        tv = 0.5 * np.abs(closed - mc).sum(axis=1)
        assert tv.max() <= 0.01

    def test_error_shrinks_as_sqrt_draws(self, rng):
        """Seed-to-seed sd drops ~sqrt(10) per decade of draws, and the
        seed-averaged MC predictive sits on the closed form."""
        data = two_class_problem(rng, n_per_class=450)
        post = fit_posterior(data)
        x = np.array([1.25, 0.4])  # uncertain point near the boundary
        closed = predictive_probs_closed(x, post)[0, 0]
        sds, gaps = [], []
        for draws in (100, 1000, 10000):
            estimates = np.array([
                predictive_probs_mc(x, post, draws,
                                    np.random.default_rng(3000 + seed))[0, 0]
                for seed in range(12)])
            sds.append(estimates.std(ddof=1))
            gaps.append(abs(estimates.mean() - closed))
        assert 1.5 <= sds[0] / sds[1] <= 6.5
        assert 1.5 <= sds[1] / sds[2] <= 6.5
        for gap, sd in zip(gaps, sds):
            assert gap <= 4 * sd / np.sqrt(12) + 1e-3


class TestPlugInPredictive:
    def test_symmetry(self):
        left = NIWParams([-1.0, 0.0], 3.0, 6.0, np.eye(2) * 2)
        right = NIWParams([1.0, 0.0], 3.0, 6.0, np.eye(2) * 2)
        post = GaussianPosterior((left, right), [5.0, 5.0])
        out = plug_in_predict([0.0, 0.7], post)
        np.testing.assert_array_equal(out.pmf.probs, [0.5, 0.5])
        assert out.method == "plug-in"

    def test_converges_to_closed_form_with_data(self):
        rng = np.random.default_rng(17)
        data = two_class_problem(rng, n_per_class=10_000)
        post = fit_posterior(data)
        X = rng.normal(loc=[1.25, 0.0], scale=1.5, size=(40, 2))
        tv = 0.5 * np.abs(predictive_probs_closed(X, post)
                          - predictive_probs_plug_in(X, post)).sum(axis=1)
        assert tv.max() <= 0.01

    def test_identical_to_closed_form_when_parameters_are_certain(self):
        """As the NIW pseudo-counts grow with the mean covariance held
        fixed, parameter uncertainty vanishes and the closed-form
        predictive collapses onto the plug-in prediction."""
        d = 2
        X = np.column_stack([np.linspace(0.3, 2.7, 9), np.zeros(9)])
        gaps = []
        for count in (10.0, 100.0, 10_000.0):
            dof = count
            params = []
            for loc in ([0.0, 0.0], [3.0, 0.0]):
                scatter = np.eye(d) * (dof - d - 1)  # mean covariance = I
                params.append(NIWParams(loc, count, dof, scatter))
            post = GaussianPosterior(tuple(params), [count, count])
            tv = 0.5 * np.abs(predictive_probs_closed(X, post)
                              - predictive_probs_plug_in(X, post)).sum(axis=1)
            gaps.append(tv.max())
        assert gaps[2] < gaps[0]
        assert gaps[2] < 1e-3

    def test_needs_enough_dof(self):
        niw = NIWParams([0.0, 0.0], 1.0, 2.5, np.eye(2))  # dof <= D + 1
        post = GaussianPosterior((niw,) * 2, [1.0, 1.0])
        with pytest.raises(ImproperPriorError):
            plug_in_predict([0.0, 0.0], post)


class TestRealizationAveraging:
    def test_averages_predictive_pmfs(self, rng):
        data = two_class_problem(rng)
        post = fit_posterior(data)
        realizations = np.array([[0.4, 0.0], [2.1, 0.0], [1.25, 0.5]])
        out = predict_over_realizations(realizations, post)
        per_row = predictive_probs_closed(realizations, post)
        np.testing.assert_allclose(out.pmf.probs, per_row.mean(axis=0),
                                   rtol=1e-12)

    def test_requires_matrix(self, rng):
        post = fit_posterior(two_class_problem(rng))
        with pytest.raises(ValidationError):
            predict_over_realizations(np.array([0.4, 0.0]), post)


class TestSynthDataset:
    def test_degenerate_weights(self, rng):
        means = np.array([[0.0], [5.0]])
        covs = np.ones((2, 1, 1))
        data = synth_gaussian_dataset(means, covs, [1.0, 0.0], 50, rng)
        assert np.all(data.labels == 0)

    def test_class_means_recovered(self):
        rng = np.random.default_rng(23)
        means = np.array([[0.0, 0.0], [4.0, 1.0]])
        covs = np.stack([np.eye(2), np.diag([2.0, 0.5])])
        data = synth_gaussian_dataset(means, covs, [0.5, 0.5], 20_000, rng)
        for k in range(2):
            X_k = data.inputs[data.labels == k]
            bound = 4 * np.sqrt(np.diag(covs[k]) / len(X_k))
            assert np.all(np.abs(X_k.mean(axis=0) - means[k]) <= bound)

    def test_deterministic_given_seed(self):
        means = np.array([[0.0, 0.0], [3.0, 0.0]])
        covs = np.stack([np.eye(2)] * 2)
        a = synth_gaussian_dataset(means, covs, [0.5, 0.5], 100,
                                   np.random.default_rng(55))
        b = synth_gaussian_dataset(means, covs, [0.5, 0.5], 100,
                                   np.random.default_rng(55))
        np.testing.assert_array_equal(a.inputs, b.inputs)
        np.testing.assert_array_equal(a.labels, b.labels)

    def test_singular_covariance_rejected(self, rng):
        means = np.array([[0.0, 0.0], [1.0, 1.0]])
        covs = np.stack([np.eye(2), np.ones((2, 2))])
        with pytest.raises(SingularCovarianceError):
            synth_gaussian_dataset(means, covs, [0.5, 0.5], 10, rng)


class TestDensityCrossChecks:
    """Hand-written densities and samplers against scipy's implementations."""

    def test_student_t_logpdf_matches_scipy(self, rng):
        from scipy.stats import multivariate_t

        from nominal_uq.bayes import _student_t_logpdf

        for _ in range(10):
            d = rng.integers(1, 4)
            A = rng.normal(size=(d, d))
            shape = A @ A.T + d * np.eye(d)
            loc = rng.normal(size=d)
            df = float(rng.uniform(2.5, 30.0))
            X = rng.normal(size=(6, d))
            mine = _student_t_logpdf(X, loc, np.linalg.cholesky(shape), df)
            ref = multivariate_t(loc=loc, shape=shape, df=df).logpdf(X)
            np.testing.assert_allclose(mine, ref, rtol=1e-10)

    def test_invwishart_sampler_mean_matches_analytic(self):
        from nominal_uq.bayes import _sample_invwishart, _sample_invwishart_batch

        psi = np.array([[2.0, 0.3], [0.3, 1.0]])
        dof = 8.0
        chol = np.linalg.cholesky(psi)
        rng = np.random.default_rng(77)
        batch = _sample_invwishart_batch(rng, dof, chol, 60_000)
        expected = psi / (dof - 2 - 1)
        np.testing.assert_allclose(batch.mean(axis=0), expected, atol=0.02)
        singles = np.array([_sample_invwishart(rng, dof, chol)
                            for _ in range(20_000)])
        np.testing.assert_allclose(singles.mean(axis=0), expected, atol=0.04)

    def test_invwishart_sampler_matches_scipy_distribution(self):
        """Marginal diagonal elements agree with scipy.stats.invwishart."""
        from scipy.stats import invwishart

        from nominal_uq.bayes import _sample_invwishart_batch

        psi = np.array([[1.5, -0.4], [-0.4, 0.9]])
        dof = 9.0
        rng = np.random.default_rng(123)
        mine = _sample_invwishart_batch(rng, dof, np.linalg.cholesky(psi), 30_000)
        ref = invwishart(df=dof, scale=psi).rvs(
            size=30_000, random_state=np.random.default_rng(321))
        for i in range(2):
            q_mine = np.quantile(mine[:, i, i], [0.25, 0.5, 0.75])
            q_ref = np.quantile(ref[:, i, i], [0.25, 0.5, 0.75])
            np.testing.assert_allclose(q_mine, q_ref, rtol=0.05)


class TestEndToEndChain:
    def test_predictives_feed_dispersion_and_scoring(self, rng):
        """Held-out predictive PMFs flow into the report and the expected
        scores, with everything landing in [0, 1] and the loss agreeing
        with the confusion matrix."""
        means = np.array([[0.0, 0.0], [3.5, 0.0], [1.75, 3.0]])
        covs = np.stack([np.eye(2)] * 3)
        train = synth_gaussian_dataset(means, covs, [1 / 3] * 3, 900, rng)
        test = synth_gaussian_dataset(means, covs, [1 / 3] * 3, 300, rng)
        post = fit_posterior(train)
        probs = predictive_probs_closed(test.inputs, post)
        for row in probs[:20]:
            report = report_all(Pmf(row, policy="renormalize"))
            assert all(0.0 <= v <= 1.0 for v in report.as_dict().values())
        data = LabeledProbabilities(probs, test.labels)
        assert 0.0 <= exe(data) <= 1.0
        assert 0.0 <= ebs(data) <= 1.0
        matrix = confusion(data)
        misses = (probs.argmax(axis=1) != test.labels).mean()
        assert abs(matrix.classification_loss - misses) < 1e-12
