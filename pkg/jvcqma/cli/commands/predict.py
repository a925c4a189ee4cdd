"""
``jvcqma predict``: averaged quantile predictions for a query CSV.
"""

from pathlib import Path

import click
import numpy as np
import pandas as pd
import pydantic

from ...core.exceptions import DataError, StaleModelError
from ...schemas.data import DatasetSchema
from ...schemas.models import ModelDocument
from ...services.data_io import file_sha256, load_queries, load_training, standardize_matrix
from ...services.model_average import from_fit_entry, predict_averaged
from ...workers.pool import WorkerPool
from ..options import out_option
from ..output import RunWriter, stage

PREDICTIONS_FILE = "predictions.csv"


def read_model(path: str) -> ModelDocument:
    try:
        return ModelDocument.model_validate_json(Path(path).read_text(encoding="utf-8"))
    except (OSError, pydantic.ValidationError) as exc:
        raise DataError(f"Cannot read model document {path}: {exc}", stage="load") from exc


def tau_column(tau: float) -> str:
    return f"tau_{tau:g}"


@click.command()
@click.option("--model", "model_path", type=click.Path(exists=True, dir_okay=False), required=True, help="model.json")
@click.option("--queries", "query_path", type=click.Path(exists=True, dir_okay=False), required=True, help="Query CSV.")
@out_option
@click.pass_obj
def predict(obj, model_path: str, query_path: str, out_dir: str) -> None:
    """Predict every fitted quantile level at each query row."""
    config = {"model": model_path, "queries": query_path}
    with RunWriter(out_dir, "predict", config, inputs=[Path(model_path), Path(query_path)]) as run:
        document = read_model(model_path)
        training = document.training
        with stage("load"):
            if not Path(training.path).is_file() or file_sha256(training.path) != training.sha256:
                raise StaleModelError(
                    f"Training data {training.path} is missing or changed since the model was fitted",
                    details={"path": training.path, "expected_sha256": training.sha256},
                )
            schema = DatasetSchema(columns=training.columns)
            data, record = load_training(training.path, schema, training.standardization)
            queries = standardize_matrix(load_queries(query_path, data.names), data.names, record)

        frame = pd.DataFrame({"row": np.arange(1, queries.shape[0] + 1)})
        with WorkerPool(obj.threads) as pool:
            for entry in document.fits:
                with stage("predict"):
                    model = from_fit_entry(entry, data, document.scheme, document.kernel)
                    frame[tau_column(entry.tau)] = predict_averaged(model, queries, pool=pool)
        run.write_text(PREDICTIONS_FILE, frame.to_csv(index=False, na_rep="NA", lineterminator="\n"))
    click.echo(str(Path(out_dir) / PREDICTIONS_FILE))
