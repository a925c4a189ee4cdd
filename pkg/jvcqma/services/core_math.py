"""
Scalar building blocks shared by every estimator.

Check loss and its subgradient, the two smoothing kernels, standard-normal helpers
and the quantile bandwidth adjustment factor. All functions are pure and accept
either scalars or numpy arrays.
"""

from enum import Enum
from typing import Union

import numpy as np
from scipy import special, stats

from ..core.exceptions import InvalidBandwidthError, ValidationError

ArrayLike = Union[float, np.ndarray]

_SQRT_2PI = np.sqrt(2.0 * np.pi)


# ============================================================================
# Domain Types
# ============================================================================

class QuantileLevel(float):
    """A quantile level tau, strictly inside (0, 1)."""

    def __new__(cls, tau: float) -> "QuantileLevel":
        value = float(tau)
        if not np.isfinite(value) or not 0.0 < value < 1.0:
            raise ValidationError(f"Quantile level must lie in (0, 1), got {tau!r}", details={"tau": tau})
        return super().__new__(cls, value)


def as_quantile_level(tau: float) -> QuantileLevel:
    """Validate ``tau`` and return it as a QuantileLevel."""
    if isinstance(tau, QuantileLevel):
        return tau
    return QuantileLevel(tau)


class KernelKind(str, Enum):
    """Second-order smoothing kernels."""
    GAUSSIAN = "gauss"
    EPANECHNIKOV = "epanechnikov"

    @classmethod
    def parse(cls, value: Union[str, "KernelKind"]) -> "KernelKind":
        """Accept enum members, values and the long name 'gaussian'."""
        if isinstance(value, cls):
            return value
        name = str(value).strip().lower()
        if name in ("gauss", "gaussian", "normal"):
            return cls.GAUSSIAN
        if name in ("epanechnikov", "epa"):
            return cls.EPANECHNIKOV
        raise ValidationError(f"Unknown kernel '{value}'")


# ============================================================================
# Check Loss
# ============================================================================

def _finite(u: ArrayLike) -> np.ndarray:
    arr = np.asarray(u, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValidationError("Check loss argument must be finite")
    return arr


def _unwrap(arr: np.ndarray) -> ArrayLike:
    return float(arr) if arr.ndim == 0 else arr


def check_loss(tau: float, u: ArrayLike) -> ArrayLike:
    """
    Quantile check loss rho_tau(u) = u * (tau - I(u <= 0)).

    Returns tau*u for u > 0 and (tau - 1)*u for u <= 0; never negative.
    """
    tau = as_quantile_level(tau)
    arr = _finite(u)
    return _unwrap(arr * (tau - (arr <= 0.0)))


def check_subgradient(tau: float, u: ArrayLike) -> ArrayLike:
    """psi_tau(u) = tau - I(u <= 0); the boundary u = 0 takes the tau - 1 branch."""
    tau = as_quantile_level(tau)
    arr = _finite(u)
    return _unwrap(tau - (arr <= 0.0).astype(float))


def mean_check_loss(tau: float, residuals: np.ndarray) -> float:
    """Average check loss of a residual vector."""
    residuals = np.asarray(residuals, dtype=float)
    if residuals.size == 0:
        raise ValidationError("Cannot average the check loss of an empty vector")
    return float(np.mean(check_loss(tau, residuals)))


# ============================================================================
# Kernels
# ============================================================================

def kernel_eval(kind: Union[str, KernelKind], u: ArrayLike) -> ArrayLike:
    """Evaluate the unscaled kernel K(u)."""
    kind = KernelKind.parse(kind)
    arr = np.asarray(u, dtype=float)
    if kind is KernelKind.GAUSSIAN:
        out = np.exp(-0.5 * arr**2) / _SQRT_2PI
    else:
        out = np.clip(0.75 * (1.0 - arr**2), 0.0, None)
    return _unwrap(out)


def kernel_scaled(kind: Union[str, KernelKind], h: float, u: ArrayLike) -> ArrayLike:
    """K_h(u) = K(u / h) / h."""
    if not np.isfinite(h) or h <= 0:
        raise InvalidBandwidthError(f"Bandwidth must be positive, got {h!r}", details={"h": h})
    arr = np.asarray(u, dtype=float)
    return _unwrap(np.asarray(kernel_eval(kind, arr / h)) / h)


# ============================================================================
# Standard Normal Helpers
# ============================================================================

def normal_pdf(x: ArrayLike) -> ArrayLike:
    """Standard normal density."""
    return _unwrap(np.asarray(stats.norm.pdf(x)))


def normal_ppf(p: ArrayLike) -> ArrayLike:
    """Standard normal quantile function."""
    return _unwrap(np.asarray(special.ndtri(p)))


def quantile_adjust_factor(tau: float) -> float:
    """
    Bandwidth rescaling {tau(1 - tau) / phi(Phi^-1(tau))^2}^(1/5).

    Evaluated at min(tau, 1 - tau) so the factor is exactly symmetric.
    """
    tau = as_quantile_level(tau)
    t = min(float(tau), 1.0 - float(tau))
    density = float(normal_pdf(normal_ppf(t)))
    return float((t * (1.0 - t) / density**2) ** 0.2)
