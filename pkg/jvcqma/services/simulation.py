"""
Simulation designs for the comparison experiments.

Four data-generating models:

* ex1: varying-coefficient model indexed by X1 and X2, AR(1) Gaussian covariates;
* ex2: heteroscedastic varying-coefficient model with U(-2, 2) covariates;
* ex3: partially linear additive model with binomial discrete covariates;
* ex4: nonlinear multivariate model with interactions.

Every draw comes from a Philox stream seeded by SeedSequence([seed, ...]), so a
replication depends only on its own seed.
"""

from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np
import structlog
from scipy import optimize, stats

from ..core.exceptions import InvalidPairingError, ValidationError
from ..schemas.simulation import ErrorCase, Example, SimDesign
from .core_math import as_quantile_level
from .dataset import Dataset

logger = structlog.get_logger(__name__)

AR1_BASE = 0.5
MIXTURE_WEIGHT = 0.05
MIXTURE_SD = 5.0

TRAIN_STREAM = 0
TEST_STREAM = 1


# ============================================================================
# Random Streams
# ============================================================================

def stream(seed: int, *keys: int) -> np.random.Generator:
    """Philox generator for (seed, *keys)."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), *map(int, keys)])))


def replication_seed(master_seed: int, r: int) -> int:
    """64-bit seed of replication r."""
    state = np.random.SeedSequence([int(master_seed), int(r)]).generate_state(1, dtype=np.uint64)
    return int(state[0])


# ============================================================================
# Covariates and Errors
# ============================================================================

def ar1_covariance(dim: int, base: float = AR1_BASE) -> np.ndarray:
    """Sigma[j, l] = base^|j - l|."""
    idx = np.arange(dim)
    return base ** np.abs(idx[:, None] - idx[None, :])


def gaussian_copula_covariates(
    n: int,
    dim: int,
    rho_power_base: float = AR1_BASE,
    seed: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
) -> np.ndarray:
    """Mean-zero normal rows with covariance rho_power_base^|j - l| via Cholesky."""
    if dim < 1:
        raise ValidationError("Covariate dimension must be at least 1")
    rng = rng if rng is not None else stream(0 if seed is None else seed)
    chol = np.linalg.cholesky(ar1_covariance(dim, rho_power_base))
    return rng.standard_normal((n, dim)) @ chol.T


def draw_errors(case: ErrorCase, size: int, rng: np.random.Generator) -> np.ndarray:
    case = ErrorCase(case)
    if case is ErrorCase.CASE1:
        return rng.standard_normal(size)
    if case is ErrorCase.CASE2:
        return rng.standard_t(3, size)
    if case is ErrorCase.CASE3:
        wide = rng.random(size) < MIXTURE_WEIGHT
        return np.where(wide, MIXTURE_SD, 1.0) * rng.standard_normal(size)
    if case is ErrorCase.CASE4:
        return rng.chisquare(1, size)
    if case is ErrorCase.CASE5:
        return rng.gamma(1.0, 1.0, size)
    return rng.lognormal(0.5, 0.5, size)


def error_quantile(case: ErrorCase, tau: float) -> float:
    """tau-quantile of the error distribution of ``case``."""
    tau = float(as_quantile_level(tau))
    case = ErrorCase(case)
    if case is ErrorCase.CASE1:
        return float(stats.norm.ppf(tau))
    if case is ErrorCase.CASE2:
        return float(stats.t.ppf(tau, 3))
    if case is ErrorCase.CASE3:
        def cdf(e: float) -> float:
            return (1 - MIXTURE_WEIGHT) * stats.norm.cdf(e) + MIXTURE_WEIGHT * stats.norm.cdf(e / MIXTURE_SD) - tau
        return float(optimize.brentq(cdf, -60.0, 60.0, xtol=1e-14))
    if case is ErrorCase.CASE4:
        return float(stats.chi2.ppf(tau, 1))
    if case is ErrorCase.CASE5:
        return float(stats.gamma.ppf(tau, 1.0))
    return float(stats.lognorm.ppf(tau, 0.5, scale=np.exp(0.5)))


# ============================================================================
# Example Models
# ============================================================================

def ex1_beta(u: np.ndarray, p: int) -> np.ndarray:
    """(n, p - 1) coefficient matrix of example 1 at index values u."""
    u = np.asarray(u, dtype=float)
    bump = np.exp(-0.5 * u**2)
    cols = [
        u * (1 - 0.5 * u),
        np.exp(u / 2 - 0.5),
        np.sin(2 * np.pi * u) - u,
        2 * bump / (bump + 1),
    ]
    out = np.zeros(u.shape + (p - 1,))
    out[..., :4] = np.stack(cols, axis=-1)
    return out


def _ex1_mean(x: np.ndarray) -> np.ndarray:
    p = x.shape[1]
    without_1 = np.delete(x, 0, axis=1)
    without_2 = np.delete(x, 1, axis=1)
    return (
        x[:, 0]
        + np.sum(without_1 * ex1_beta(x[:, 0], p), axis=1)
        + np.sum(without_2 * ex1_beta(x[:, 1], p), axis=1)
    )


def ex2_beta1(u: np.ndarray, p: int) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    out = np.zeros(u.shape + (p - 1,))
    out[..., 0] = (2 + u**2) / (1 + u**2)
    out[..., 1] = u
    return out


def ex2_beta2(u: np.ndarray, p: int) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    out = np.zeros(u.shape + (p - 1,))
    out[..., 0] = 2 * np.sin(2 * np.pi * u) / (2 - np.cos(2 * np.pi * u))
    out[..., 1] = np.exp(-0.5 * u**2)
    out[..., 2] = 1.0
    out[..., 3] = -1.0
    return out


def _ex2_mean(x: np.ndarray) -> np.ndarray:
    p = x.shape[1]
    u1 = x[:, 0]
    return (
        u1 * (1 - u1)
        + np.sum(np.delete(x, 2, axis=1) * ex2_beta1(x[:, 2], p), axis=1)
        + np.sum(np.delete(x, 3, axis=1) * ex2_beta2(x[:, 3], p), axis=1)
    )


def _ex3_mean(x: np.ndarray) -> np.ndarray:
    additive = (
        -np.sin(2 * x[:, 0])
        + 0.5 * (x[:, 1] ** 2 - 25.0 / 12.0)
        + x[:, 2]
        + np.exp(-x[:, 3]) - 0.4 * np.sinh(2.5)
        + x[:, 4]
        - 2 * x[:, 5]
    )
    return additive + x[:, 6:10] @ np.array([1.0, -2.0, 1.0, -2.0])


def _ex4_mean(x: np.ndarray) -> np.ndarray:
    return (
        4 * np.cos(x[:, 0] * x[:, 1] * x[:, 2] * x[:, 3])
        - x[:, 4] * x[:, 5]
        + x[:, 6] * x[:, 7] * x[:, 8] * x[:, 9]
    )


def _additive_scale(x: np.ndarray) -> np.ndarray:
    return np.abs(0.5 * x[:, 0] - 0.5 * x[:, 1]) + 0.5


def _draw(design: SimDesign, n: int, rng: np.random.Generator) -> Dataset:
    example = Example(design.example)
    if example is Example.EX1:
        x = gaussian_copula_covariates(n, design.p, rng=rng)
        y = _ex1_mean(x) + draw_errors(design.error_case, n, rng)
        return Dataset(y, x, continuous_cols=tuple(range(design.p)))
    if example is Example.EX2:
        x = rng.uniform(-2.0, 2.0, (n, design.p))
        scale = 0.5 * (np.sin(x[:, 0]) ** 2 + np.cos(x[:, 1]) ** 2 + 0.5)
        y = _ex2_mean(x) + scale * draw_errors(design.error_case, n, rng)
        return Dataset(y, x, continuous_cols=tuple(range(design.p)))

    trials = (2, 2, 3, 3) if example is Example.EX3 else (1, 1, 2, 2)
    continuous = gaussian_copula_covariates(n, 6, rng=rng)
    discrete = np.column_stack([rng.binomial(k, 0.5, n) for k in trials]).astype(float)
    x = np.hstack([continuous, discrete])
    mean = _ex3_mean(x) if example is Example.EX3 else _ex4_mean(x)
    y = mean + _additive_scale(x) * draw_errors(design.error_case, n, rng)
    return Dataset(y, x, continuous_cols=tuple(range(6)), discrete_cols=tuple(range(6, 10)))


# ============================================================================
# Generation
# ============================================================================

@dataclass(frozen=True, eq=False)
class GeneratedSample:
    """Independent train and test draws from one design."""

    train: Dataset
    test: Dataset
    design: SimDesign
    true_quantile_fn: Optional[Callable[[np.ndarray, float], np.ndarray]] = None


def true_quantile_fn(design: SimDesign) -> Optional[Callable[[np.ndarray, float], np.ndarray]]:
    """Q_tau(Y | X) for ex1 (homoscedastic); None for the other examples."""
    if Example(design.example) is not Example.EX1:
        return None
    case = ErrorCase(design.error_case)

    def quantile(x: np.ndarray, tau: float) -> np.ndarray:
        return _ex1_mean(np.atleast_2d(np.asarray(x, dtype=float))) + error_quantile(case, tau)

    return quantile


def check_pairing(design: SimDesign) -> None:
    if not design.allow_any_pairing and not design.is_default_pairing:
        raise InvalidPairingError(
            f"Error case {int(design.error_case)} is not run with {Example(design.example).value}",
            details={"example": Example(design.example).value, "error_case": int(design.error_case)},
        )


def generate(design: SimDesign) -> GeneratedSample:
    """
    Draw a training set of size n and a test set of size n_test.

    Raises:
        InvalidPairingError: If the error case is not paired with the example and
            the design does not allow any pairing
    """
    check_pairing(design)
    train = _draw(design, design.n, stream(design.seed, TRAIN_STREAM))
    test = _draw(design, design.n_test, stream(design.seed, TEST_STREAM))
    logger.debug(
        "sample generated",
        example=Example(design.example).value,
        error_case=int(design.error_case),
        n=design.n,
        seed=design.seed,
    )
    return GeneratedSample(train=train, test=test, design=design, true_quantile_fn=true_quantile_fn(design))


def covariate_layout(design: SimDesign) -> Tuple[Tuple[str, ...], Tuple[int, ...]]:
    """Covariate names and continuous column indices produced by ``design``."""
    if Example(design.example) in (Example.EX1, Example.EX2):
        width, continuous = design.p, design.p
    else:
        width, continuous = 10, 6
    return tuple(f"X{j + 1}" for j in range(width)), tuple(range(continuous))
