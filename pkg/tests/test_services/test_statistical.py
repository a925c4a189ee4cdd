"""
Statistical properties on simulated data. Seeds are fixed; the thresholds leave
room for Monte Carlo noise at these replication counts.

Run with ``pytest -m statistical``; they take minutes.
"""

import numpy as np
import pytest

from jvcqma.schemas.simulation import ErrorCase, Example, SimDesign
from jvcqma.services.dataset import Dataset
from jvcqma.services.evaluation import run_replications
from jvcqma.services.simulation import generate
from jvcqma.services.vcm_estimator import fit_local, predict_candidate
from jvcqma.workers.pool import WorkerPool

pytestmark = [pytest.mark.slow, pytest.mark.statistical]


def ex1_design(n: int) -> SimDesign:
    return SimDesign(example=Example.EX1, error_case=ErrorCase.CASE1, n=n, p=5, n_test=100)


def test_weight_concentrates_on_true_indices():
    with WorkerPool(4) as pool:
        _, weights = run_replications(
            ex1_design(200), [0.5], methods=["JVCQMA"], reps=50, master_seed=2024, pool=pool
        )
    means = [c.mean for c in weights.per_tau[0].candidates]
    assert means[0] + means[1] >= 0.90
    assert means[2] + means[3] + means[4] <= 0.10


def test_oracle_ratio_improves_with_n():
    ratios = {}
    with WorkerPool(4) as pool:
        for n in (100, 400):
            report, _ = run_replications(
                ex1_design(n), [0.5], methods=["JVCQMA"], reps=30, master_seed=77, pool=pool, ratio_resolution=0.1
            )
            ratios[n] = report.oracle_ratio[0].mean
    assert ratios[400] <= ratios[100]
    assert ratios[400] <= 1.15


def test_upper_quantile_lies_above_lower_on_average():
    sample = generate(ex1_design(400).with_seed(31))
    queries = sample.test.x[:20]
    upper = predict_candidate(sample.train, 0, queries, 0.75, 0.5)
    lower = predict_candidate(sample.train, 0, queries, 0.25, 0.5)
    assert not upper.failed.any() and not lower.failed.any()
    assert np.mean(upper.values - lower.values) > 0


@pytest.mark.parametrize("tau", [0.25, 0.5, 0.75])
def test_jvcqma_is_not_worse_than_simple_rivals(tau):
    rivals = ["VCQMA1", "VCQR1", "LQR"]
    with WorkerPool(4) as pool:
        report, _ = run_replications(
            ex1_design(200), [tau], methods=["JVCQMA", *rivals], reps=50, master_seed=5, pool=pool
        )
    ours = report.cell("JVCQMA", tau).mean
    for method in rivals:
        assert ours <= 1.02 * report.cell(method, tau).mean, method


def test_local_fit_error_shrinks_with_n():
    grid = np.linspace(-0.5, 0.5, 11)
    errors = {}
    for n in (200, 2000):
        gen = np.random.Generator(np.random.Philox(n))
        x = gen.uniform(-1.0, 1.0, (n, 2))
        y = np.sin(2.0 * x[:, 0]) + x[:, 1] * (1.0 + x[:, 0] ** 2)
        data = Dataset(y, x, continuous_cols=(0, 1))
        h = 0.3 * (n / 200) ** (-0.2)
        worst = 0.0
        for point in grid:
            fit = fit_local(data, 0, float(point), 0.5, h, kind="epanechnikov")
            worst = max(worst, abs(fit.alpha - np.sin(2.0 * point)), abs(fit.beta[0] - (1.0 + point**2)))
        errors[n] = worst
    assert errors[2000] < 0.7 * errors[200]
