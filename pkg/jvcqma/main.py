"""
Process entry point: ``python -m jvcqma.main`` or the ``jvcqma`` console script.
"""

from .cli.main import cli


def main() -> None:
    cli(prog_name="jvcqma")


if __name__ == "__main__":
    main()
