"""
``jvcqma bootstrap-weights``: pairs-bootstrap intervals for the leave-one-out weights.
"""

from pathlib import Path
from typing import Optional, Sequence

import click

from ...services.core_math import KernelKind
from ...services.evaluation import bootstrap_weight_draws
from ...workers.pool import WorkerPool
from ..options import grid_option, kernel_option, out_option, parse_grid, resolve_taus, seed_option, tau_option
from ..output import RunWriter, stage
from . import data_options, load_dataset, schema_from_options


@click.command(name="bootstrap-weights")
@click.option("--data", "data_path", type=click.Path(exists=True, dir_okay=False), required=True, help="CSV file.")
@data_options
@tau_option
@click.option("-B", "--resamples", "B", type=click.IntRange(min=2), default=200, show_default=True)
@click.option("--fixed-bandwidth", is_flag=True, help="Reuse full-data bandwidths in every resample.")
@seed_option
@kernel_option
@grid_option
@out_option
@click.pass_obj
def bootstrap_weights(
    obj,
    data_path: str,
    schema_path: Optional[str],
    boston: bool,
    no_standardize: bool,
    taus: Sequence[float],
    B: int,
    fixed_bandwidth: bool,
    seed: int,
    kernel: str,
    grid_spec: Optional[str],
    out_dir: str,
) -> None:
    """Bootstrap mean +/- 1.96 sd intervals of the averaging weights."""
    schema, schema_files = schema_from_options(schema_path, boston)
    levels = resolve_taus(taus)
    grid = parse_grid(grid_spec)
    kind = KernelKind.parse(kernel)
    config = {
        "data": data_path,
        "taus": levels,
        "B": B,
        "fixed_bandwidth": fixed_bandwidth,
        "seed": seed,
        "kernel": kind.value,
        "bandwidth_grid": grid_spec,
        "standardize": not no_standardize,
    }
    with RunWriter(out_dir, "bootstrap-weights", config, inputs=[Path(data_path), *schema_files]) as run:
        data, _ = load_dataset(data_path, schema, scale=not no_standardize)
        with WorkerPool(obj.threads) as pool, stage("bootstrap"):
            summary = bootstrap_weight_draws(data, levels, B, seed, kind, grid, fixed_bandwidth, pool)
        run.write_json("report.json", summary)
        run.write_text("report.tsv", summary.to_tsv())
    click.echo(str(Path(out_dir)))
