"""
``jvcqma fit``: weights and bandwidths for every requested tau, saved as model.json.
"""

from pathlib import Path
from typing import Optional, Sequence

import click
import structlog

from ...schemas.models import ModelDocument, TrainingReference
from ...services.bandwidth import select_pilots
from ...services.core_math import KernelKind
from ...services.data_io import file_sha256
from ...services.model_average import WeightScheme, fit_averaged_model, to_fit_entry
from ...workers.pool import WorkerPool
from ..options import grid_option, kernel_option, out_option, parse_grid, resolve_taus, tau_option
from ..output import RunWriter, stage
from . import data_options, load_dataset, schema_from_options

logger = structlog.get_logger(__name__)

MODEL_FILE = "model.json"


@click.command()
@click.option("--data", "data_path", type=click.Path(exists=True, dir_okay=False), required=True, help="Training CSV.")
@data_options
@tau_option
@kernel_option
@click.option(
    "--scheme",
    type=click.Choice([s.value for s in WeightScheme]),
    default=WeightScheme.LOOCV.value,
    show_default=True,
    help="Averaging weights: leave-one-out CV, equal, or smoothed BIC.",
)
@grid_option
@out_option
@click.pass_obj
def fit(
    obj,
    data_path: str,
    schema_path: Optional[str],
    boston: bool,
    no_standardize: bool,
    taus: Sequence[float],
    kernel: str,
    scheme: str,
    grid_spec: Optional[str],
    out_dir: str,
) -> None:
    """Fit the averaged quantile model."""
    schema, schema_files = schema_from_options(schema_path, boston)
    levels = resolve_taus(taus, default=[0.5])
    grid = parse_grid(grid_spec)
    kind = KernelKind.parse(kernel)
    config = {
        "data": data_path,
        "schema": schema_path or ("boston" if boston else None),
        "taus": levels,
        "kernel": kind.value,
        "scheme": scheme,
        "bandwidth_grid": grid_spec,
        "standardize": not no_standardize,
    }

    with RunWriter(out_dir, "fit", config, inputs=[Path(data_path), *schema_files]) as run:
        data, record = load_dataset(data_path, schema, scale=not no_standardize)
        with WorkerPool(obj.threads) as pool:
            with stage("bandwidth"):
                pilots = select_pilots(data, grid, kind, pool)
            fits = []
            for tau in levels:
                with stage("weights"):
                    model = fit_averaged_model(data, tau, scheme, kind, pilots=pilots, pool=pool)
                fits.append(to_fit_entry(model))

        document = ModelDocument(
            scheme=scheme,
            kernel=kind.value,
            candidates=model.candidate_names(),
            index_cols=list(model.column_index_map),
            training=TrainingReference(
                path=str(Path(data_path).resolve()),
                sha256=file_sha256(data_path),
                columns=schema.columns,
                standardization=record,
            ),
            fits=fits,
            provenance=run.provenance,
        )
        run.write_json(MODEL_FILE, document)
    click.echo(str(Path(out_dir) / MODEL_FILE))
