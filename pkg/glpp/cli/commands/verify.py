"""Run a named verification suite."""

from __future__ import annotations

from pathlib import Path
from typing import Optional

import typer
from loguru import logger

from glpp.cli.app_instance import app
from glpp.cli.utils import (
    _configure_logging,
    cli_print,
    cli_print_table,
    exit_on_error,
    fail_unless,
    out_dir_option,
    parse_int_list,
    seed_option,
    verbose_option,
)


@app.command(help="Run the acceptance criteria and print a pass/fail table.")
def verify(
    suite: str = typer.Option("desk", "--suite", help="Suite name: desk or quick."),
    only: Optional[str] = typer.Option(None, "--only", help="Comma-separated criterion numbers."),
    seed: Optional[int] = seed_option(),
    out_dir: Optional[Path] = out_dir_option(),
    verbose: bool = verbose_option(),
) -> None:
    """
    Run every criterion of a suite; exit 3 when any fails.

    Examples:
        glpp verify --suite quick
        glpp verify --suite desk --only 1,2,6 -o reports/
    """
    _configure_logging(verbose)
    from glpp.outputs import write_json
    from glpp.suites import run_suite

    with exit_on_error():
        report = run_suite(suite, seed=seed, only=parse_int_list(only, "--only"))
    rows = [
        (
            str(r.number),
            r.name,
            "pass" if r.passed else "FAIL",
            f"{r.value:.3g}",
            r.threshold,
            f"{r.seconds:.1f}",
        )
        for r in report.results
    ]
    cli_print_table(["#", "criterion", "result", "value", "threshold", "seconds"], rows, title=f"suite {suite}")
    for r in report.results:
        if r.error:
            cli_print(f"  {r.number}: {r.error}", style="red")
    if out_dir is not None:
        path = write_json(Path(out_dir) / f"verify_{suite}.json", report.to_dict())
        logger.info(f"Report written to {path}")
    fail_unless(report.passed, f"suite {suite}: {sum(not r.passed for r in report.results)} criteria failed")
    cli_print(f"suite {suite}: all {len(report.results)} criteria passed", style="green")
