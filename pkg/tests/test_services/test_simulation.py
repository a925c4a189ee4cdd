"""
Tests for the simulation designs: random streams, covariates, error
distributions and the four example models.
"""

import numpy as np
import pytest

from jvcqma.core.exceptions import InvalidPairingError, ValidationError
from jvcqma.schemas.simulation import ErrorCase, Example, SimDesign
from jvcqma.services.simulation import (
    ar1_covariance,
    covariate_layout,
    draw_errors,
    error_quantile,
    ex1_beta,
    gaussian_copula_covariates,
    generate,
    replication_seed,
    stream,
)


def design(example: str = "ex1", case: int = 1, **kwargs) -> SimDesign:
    return SimDesign(example=Example(example), error_case=ErrorCase(case), **kwargs)


class TestStreams:
    """Seeding."""

    def test_stream_is_reproducible(self):
        np.testing.assert_array_equal(stream(5, 0).random(4), stream(5, 0).random(4))
        assert not np.array_equal(stream(5, 0).random(4), stream(5, 1).random(4))

    def test_replication_seeds(self):
        seeds = [replication_seed(99, r) for r in range(50)]
        assert len(set(seeds)) == 50
        assert seeds == [replication_seed(99, r) for r in range(50)]
        assert all(0 <= s < 2**64 for s in seeds)


class TestCovariates:
    """AR(1) Gaussian covariates."""

    def test_ar1_covariance(self):
        cov = ar1_covariance(3)
        np.testing.assert_allclose(cov, [[1.0, 0.5, 0.25], [0.5, 1.0, 0.5], [0.25, 0.5, 1.0]])

    def test_sample_covariance(self):
        x = gaussian_copula_covariates(40000, 4, seed=3)
        np.testing.assert_allclose(np.cov(x, rowvar=False), ar1_covariance(4), atol=0.03)

    def test_dimension_checked(self):
        with pytest.raises(ValidationError):
            gaussian_copula_covariates(10, 0)


class TestErrors:
    """Error distributions and their quantiles."""

    @pytest.mark.parametrize("case,mean", [(1, 0.0), (3, 0.0), (4, 1.0), (5, 1.0), (6, np.exp(0.625))])
    def test_means(self, case, mean):
        draws = draw_errors(ErrorCase(case), 200000, stream(1, case))
        assert draws.mean() == pytest.approx(mean, abs=0.05)

    @pytest.mark.parametrize("case", list(ErrorCase))
    @pytest.mark.parametrize("tau", [0.1, 0.5, 0.9])
    def test_quantiles_match_draws(self, case, tau):
        draws = draw_errors(case, 200000, stream(2, int(case)))
        empirical = np.quantile(draws, tau)
        assert error_quantile(case, tau) == pytest.approx(empirical, abs=0.05 * max(1.0, abs(empirical)))

    def test_symmetric_cases(self):
        for case in (ErrorCase.CASE1, ErrorCase.CASE2, ErrorCase.CASE3):
            assert error_quantile(case, 0.5) == pytest.approx(0.0, abs=1e-10)
            assert error_quantile(case, 0.2) == pytest.approx(-error_quantile(case, 0.8), abs=1e-10)


class TestExamples:
    """Generated samples."""

    def test_ex1_shapes(self):
        sample = generate(design("ex1", 1, n=200, p=5))
        assert sample.train.x.shape == (200, 5)
        assert sample.test.x.shape == (100, 5)
        assert sample.train.continuous_cols == (0, 1, 2, 3, 4)
        assert sample.true_quantile_fn is not None

    def test_ex3_layout(self):
        sample = generate(design("ex3", 5, n=80))
        data = sample.train
        assert data.x.shape == (80, 10)
        assert data.continuous_cols == tuple(range(6))
        assert data.discrete_cols == tuple(range(6, 10))
        for col, trials in zip(range(6, 10), (2, 2, 3, 3)):
            values = set(np.unique(data.x[:, col]))
            assert values <= set(float(k) for k in range(trials + 1))
        assert sample.true_quantile_fn is None

    def test_ex2_covariates_are_uniform(self):
        data = generate(design("ex2", 4, n=500, p=6)).train
        assert data.x.shape == (500, 6)
        assert data.x.min() >= -2.0 and data.x.max() <= 2.0

    def test_same_seed_same_sample(self):
        a = generate(design("ex4", 2, n=50, seed=17))
        b = generate(design("ex4", 2, n=50, seed=17))
        np.testing.assert_array_equal(a.train.y, b.train.y)
        np.testing.assert_array_equal(a.test.x, b.test.x)
        c = generate(design("ex4", 2, n=50, seed=18))
        assert not np.array_equal(a.train.y, c.train.y)

    def test_train_and_test_streams_differ(self):
        sample = generate(design("ex1", 1, n=100, n_test=100))
        assert not np.array_equal(sample.train.x, sample.test.x)

    def test_pairing(self):
        with pytest.raises(InvalidPairingError):
            generate(design("ex1", 4, n=50))
        assert generate(design("ex1", 4, n=50, allow_any_pairing=True)).train.n == 50

    def test_true_quantile_of_ex1(self):
        sample = generate(design("ex1", 2, n=50, p=5))
        x = np.zeros((1, 5))
        expected = error_quantile(ErrorCase.CASE2, 0.9)
        assert sample.true_quantile_fn(x, 0.9)[0] == pytest.approx(expected)

    def test_true_quantile_coverage(self):
        sample = generate(design("ex1", 1, n=50, n_test=20000, seed=4))
        test = sample.test
        below = test.y <= sample.true_quantile_fn(test.x, 0.3)
        assert below.mean() == pytest.approx(0.3, abs=0.02)

    def test_ex1_beta_padding(self):
        beta = ex1_beta(np.array([0.0, 1.0]), p=7)
        assert beta.shape == (2, 6)
        assert np.all(beta[:, 4:] == 0)
        assert beta[0, 1] == pytest.approx(np.exp(-0.5))

    def test_covariate_layout(self):
        assert covariate_layout(design("ex2", 4, n=10, p=6)) == (
            ("X1", "X2", "X3", "X4", "X5", "X6"),
            (0, 1, 2, 3, 4, 5),
        )
        names, continuous = covariate_layout(design("ex4", 1, n=10))
        assert len(names) == 10 and continuous == tuple(range(6))
