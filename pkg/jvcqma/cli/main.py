"""
Top-level click group.
"""

from dataclasses import dataclass
from typing import Any, Optional

import click
import structlog

from .. import __version__
from ..core.config import settings, validate_settings
from ..core.exceptions import JvcqmaError
from ..core.logging import configure_logging

logger = structlog.get_logger(__name__)


@dataclass
class CliContext:
    threads: int


class JvcqmaGroup(click.Group):
    """Group that turns library errors into a one-line message and exit code 1."""

    def invoke(self, ctx: click.Context) -> Any:
        try:
            return super().invoke(ctx)
        except JvcqmaError as exc:
            where = f" [{exc.stage}]" if exc.stage else ""
            click.echo(f"Error{where}: {exc.message}", err=True)
            ctx.exit(1)


@click.group(cls=JvcqmaGroup)
@click.version_option(__version__, prog_name="jvcqma")
@click.option(
    "--log-level",
    type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"], case_sensitive=False),
    default=lambda: settings.LOG_LEVEL,
    help="Logging level.",
)
@click.option(
    "--log-format",
    type=click.Choice(["console", "json"]),
    default=lambda: settings.LOG_FORMAT,
    help="Log renderer.",
)
@click.option("--threads", type=click.IntRange(min=1), default=None, help="Worker threads (default MAX_WORKERS).")
@click.pass_context
def cli(ctx: click.Context, log_level: str, log_format: str, threads: Optional[int]) -> None:
    """Jackknife varying-coefficient quantile model averaging."""
    configure_logging(log_level, log_format)
    validate_settings()
    ctx.obj = CliContext(threads=threads if threads is not None else settings.MAX_WORKERS)


def _register() -> None:
    from .commands.bootstrap import bootstrap_weights
    from .commands.evaluate import evaluate
    from .commands.fit import fit
    from .commands.predict import predict
    from .commands.simulate import simulate

    for command in (fit, predict, simulate, evaluate, bootstrap_weights):
        cli.add_command(command)


_register()
