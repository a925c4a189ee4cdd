"""
Options shared by several subcommands.
"""

from typing import Any, Callable, List, Optional, Sequence

import click
import numpy as np

from ..core.config import settings
from ..core.exceptions import JvcqmaError
from ..services.bandwidth import parse_grid_spec
from ..services.core_math import KernelKind

F = Callable[..., Any]


def tau_option(f: F) -> F:
    return click.option(
        "--tau",
        "taus",
        type=float,
        multiple=True,
        help="Quantile level; repeat for several. Defaults to the configured grid.",
    )(f)


def kernel_option(f: F) -> F:
    return click.option(
        "--kernel",
        type=click.Choice([k.value for k in KernelKind]),
        default=lambda: KernelKind.parse(settings.DEFAULT_KERNEL).value,
        show_default="gauss",
        help="Smoothing kernel.",
    )(f)


def grid_option(f: F) -> F:
    return click.option(
        "--bandwidth-grid",
        "grid_spec",
        default=None,
        metavar="MIN:MAX:COUNT",
        help="Absolute geometric pilot grid instead of the default sd * n^(-1/5) grid.",
    )(f)


def seed_option(f: F) -> F:
    return click.option("--seed", type=int, default=lambda: settings.DEFAULT_SEED, help="Master seed.")(f)


def out_option(f: F) -> F:
    return click.option(
        "--out",
        "out_dir",
        type=click.Path(file_okay=False),
        required=True,
        help="Run output directory.",
    )(f)


def parse_grid(spec: Optional[str]) -> Optional[np.ndarray]:
    if spec is None:
        return None
    try:
        return parse_grid_spec(spec)
    except JvcqmaError as exc:
        raise click.BadParameter(exc.message, param_hint="--bandwidth-grid") from exc


def resolve_taus(taus: Sequence[float], default: Optional[List[float]] = None) -> List[float]:
    """Given levels in order without duplicates, or the default grid."""
    values = list(taus) if taus else list(default if default is not None else settings.tau_grid_values)
    for tau in values:
        if not 0.0 < tau < 1.0:
            raise click.BadParameter(f"{tau} is not in (0, 1)", param_hint="--tau")
    return list(dict.fromkeys(round(float(t), 10) for t in values))
