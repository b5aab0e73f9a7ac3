"""List preset families and print the version."""

from __future__ import annotations

from typing import Optional

import typer

from glpp.cli.app_instance import app
from glpp.cli.utils import _configure_logging, cli_print_table, exit_on_error, verbose_option


@app.command(help="List the preset families, or show one in full.")
def families(
    name: Optional[str] = typer.Argument(None, metavar="[NAME]", help="Preset or family shorthand to expand."),
    verbose: bool = verbose_option(),
) -> None:
    """
    Examples:
        glpp families
        glpp families geometric-half
        glpp families "edge_lpp(poisson:1)"
    """
    _configure_logging(verbose)
    from glpp.config import parse_family, preset_rows
    from glpp.outputs import to_json_text

    if name is None:
        cli_print_table(["name", "spec", "description"], preset_rows(), title="preset families")
        return
    with exit_on_error():
        spec = parse_family(name)
        doc = {"spec": spec.to_dict(), "continuous": spec.is_continuous}
        if not spec.is_continuous:
            law = spec.family().at(0)
            doc["mu0_head"] = [law.mass(i) for i in range(1, 11)]
            doc["mu0_mean"] = law.mean()
    typer.echo(to_json_text(doc))


@app.command(help="Print the installed version.")
def version() -> None:
    from glpp._version import __version__

    typer.echo(f"glpp version {__version__}")
