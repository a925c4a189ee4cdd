"""
``jvcqma evaluate``: FPE comparison by simulation replications or repeated splits.
"""

import json
from pathlib import Path
from typing import Optional, Sequence

import click

from ...core.config import settings
from ...core.exceptions import DataError
from ...schemas.simulation import ErrorCase, Example, SimDesign
from ...services.core_math import KernelKind
from ...services.evaluation import DEFAULT_RATIO_RESOLUTION, run_replications, run_split_evaluation
from ...workers.pool import WorkerPool
from ..options import grid_option, kernel_option, out_option, parse_grid, resolve_taus, seed_option, tau_option
from ..output import RunWriter, stage
from . import data_options, load_dataset, schema_from_options


def _merge_external(report, path: Optional[str]):  # type: ignore[no-untyped-def]
    """Add externally computed mean FPEs: JSON {"PLQR": {"0.5": 1.23, ...}, ...}."""
    if path is None:
        return report
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        for name, values in sorted(payload.items()):
            report = report.merge_external(name, {float(t): float(v) for t, v in values.items()})
    except (OSError, ValueError, AttributeError) as exc:
        raise DataError(f"Cannot merge external results from {path}: {exc}", stage="report") from exc
    return report


@click.command()
@click.option("--example", type=click.Choice([e.value for e in Example]), help="Simulation mode: example model.")
@click.option("--case", "error_case", type=click.IntRange(1, 6), help="Simulation mode: error case.")
@click.option("--n", type=click.IntRange(min=2), default=200, show_default=True, help="Simulation training size.")
@click.option("--p", type=click.IntRange(min=5), default=5, show_default=True, help="Covariates (ex1/ex2).")
@click.option("--allow-any-pairing", is_flag=True)
@click.option("--data", "data_path", type=click.Path(exists=True, dir_okay=False), help="Real-data mode: CSV file.")
@data_options
@click.option("--n-test", type=click.IntRange(min=1), default=None, help="Test rows per split (default TEST_SIZE).")
@tau_option
@click.option("--method", "methods", multiple=True, help="Method to compare; repeat. Default: all.")
@click.option("--reps", type=click.IntRange(min=1), default=None, help="Replications (default DEFAULT_REPS).")
@seed_option
@kernel_option
@grid_option
@click.option("--ratio", is_flag=True, help="Also report the oracle ratio of the JVCQMA weights.")
@click.option("--external", "external_path", type=click.Path(exists=True, dir_okay=False), help="External mean FPEs JSON.")
@out_option
@click.pass_obj
def evaluate(
    obj,
    example: Optional[str],
    error_case: Optional[int],
    n: int,
    p: int,
    allow_any_pairing: bool,
    data_path: Optional[str],
    schema_path: Optional[str],
    boston: bool,
    no_standardize: bool,
    n_test: Optional[int],
    taus: Sequence[float],
    methods: Sequence[str],
    reps: Optional[int],
    seed: int,
    kernel: str,
    grid_spec: Optional[str],
    ratio: bool,
    external_path: Optional[str],
    out_dir: str,
) -> None:
    """Compare out-of-sample check loss across methods."""
    simulation = example is not None
    if simulation == (data_path is not None):
        raise click.UsageError("Give either --example/--case (simulation) or --data (real data)")
    if simulation and error_case is None:
        raise click.UsageError("--case is required with --example")

    levels = resolve_taus(taus)
    grid = parse_grid(grid_spec)
    kind = KernelKind.parse(kernel)
    count = reps if reps is not None else settings.DEFAULT_REPS
    config = {
        "taus": levels,
        "methods": list(methods),
        "reps": count,
        "seed": seed,
        "kernel": kind.value,
        "bandwidth_grid": grid_spec,
        "ratio": ratio,
    }
    inputs = [Path(external_path)] if external_path else []

    if simulation:
        design = SimDesign(
            example=Example(example),
            error_case=ErrorCase(error_case),
            n=n,
            p=p,
            n_test=n_test or settings.TEST_SIZE,
            allow_any_pairing=allow_any_pairing,
        )
        config["design"] = design.model_dump(mode="json")
        with RunWriter(out_dir, "evaluate", config, inputs=inputs) as run:
            with WorkerPool(obj.threads) as pool, stage("evaluate"):
                report, weights = run_replications(
                    design,
                    levels,
                    methods,
                    count,
                    seed,
                    kind,
                    grid,
                    pool,
                    DEFAULT_RATIO_RESOLUTION if ratio else None,
                )
            report = _merge_external(report, external_path)
            run.timings = report.seconds_per_replication
            run.write_json("report.json", report)
            run.write_text("report.tsv", report.to_tsv())
            if weights.per_tau:
                run.write_json("weights.json", weights)
                run.write_text("weights.tsv", weights.to_tsv())
    else:
        schema, schema_files = schema_from_options(schema_path, boston)
        config.update({"data": data_path, "n_test": n_test or settings.TEST_SIZE, "standardize": not no_standardize})
        with RunWriter(out_dir, "evaluate", config, inputs=[Path(data_path), *schema_files, *inputs]) as run:
            data, _ = load_dataset(data_path, schema, scale=False)
            with WorkerPool(obj.threads) as pool, stage("evaluate"):
                report = run_split_evaluation(
                    data,
                    None if no_standardize else schema,
                    levels,
                    methods,
                    n_test or settings.TEST_SIZE,
                    count,
                    seed,
                    kind,
                    grid,
                    pool,
                )
            report = _merge_external(report, external_path)
            run.timings = report.seconds_per_replication
            run.write_json("report.json", report)
            run.write_text("report.tsv", report.to_tsv())
    click.echo(str(Path(out_dir)))
