"""
``jvcqma simulate``: write one generated train/test pair as CSV.
"""

from pathlib import Path

import click

from ...schemas.simulation import ErrorCase, Example, SimDesign
from ...services.data_io import save_csv, schema_for
from ...services.simulation import generate
from ..options import out_option, seed_option
from ..output import RunWriter, stage


@click.command()
@click.option("--example", type=click.Choice([e.value for e in Example]), required=True)
@click.option("--case", "error_case", type=click.IntRange(1, 6), required=True, help="Error distribution 1-6.")
@click.option("--n", type=click.IntRange(min=2), required=True, help="Training rows.")
@click.option("--p", type=click.IntRange(min=5), default=5, show_default=True, help="Covariates (ex1/ex2).")
@click.option("--n-test", type=click.IntRange(min=1), default=100, show_default=True)
@click.option("--allow-any-pairing", is_flag=True, help="Allow error cases outside the usual pairing.")
@seed_option
@out_option
def simulate(example: str, error_case: int, n: int, p: int, n_test: int, allow_any_pairing: bool, seed: int, out_dir: str) -> None:
    """Generate a simulation sample (train.csv, test.csv, schema.json)."""
    design = SimDesign(
        example=Example(example),
        error_case=ErrorCase(error_case),
        n=n,
        p=p,
        n_test=n_test,
        seed=seed,
        allow_any_pairing=allow_any_pairing,
    )
    with RunWriter(out_dir, "simulate", design.model_dump(mode="json")) as run:
        with stage("simulate"):
            sample = generate(design)
        for name, data in (("train.csv", sample.train), ("test.csv", sample.test)):
            save_csv(run.path(name), data)
            run.outputs.append(name)
        run.write_json("schema.json", [c.model_dump(mode="json") for c in schema_for(sample.train).columns])
    click.echo(str(Path(out_dir)))
