"""Shared CLI utilities for logging, printing, error mapping and result output."""

from __future__ import annotations

import contextlib
import sys
from pathlib import Path
from typing import Any, Iterator, List, Mapping, Optional, Sequence

import typer
from loguru import logger

from glpp.core import ExitCode, GLPPError
from glpp.outputs import to_json_text, write_json

try:
    from rich.console import Console  # type: ignore
    from rich.text import Text  # type: ignore

    _RICH_CONSOLE = Console()
except Exception:
    _RICH_CONSOLE = None
    Text = None  # type: ignore


def _configure_logging(verbose: bool) -> None:
    """Configure loguru logging level based on verbosity."""
    logger.remove()
    logger.add(sys.stderr, level="DEBUG" if verbose else "INFO", colorize=True)


def cli_print(text: str, style: Optional[str] = None, end: str = "\n") -> None:
    """Print text with optional Rich styling, falling back to typer.echo if Rich is unavailable."""
    if _RICH_CONSOLE is not None and Text is not None and style:
        _RICH_CONSOLE.print(Text(text, style=style), end=end)
    else:
        typer.echo(text, nl=(end == "\n"))


def cli_print_table(headers: List[str], rows: Sequence[Sequence[str]], title: Optional[str] = None) -> None:
    """Print a table with Rich Table if available, otherwise formatted text."""
    if _RICH_CONSOLE is not None:
        try:
            from rich.table import Table

            table = Table(title=title)
            for header in headers:
                table.add_column(header, style="cyan", no_wrap=False)
            for row in rows:
                table.add_row(*[str(cell) for cell in row])
            _RICH_CONSOLE.print(table)
            return
        except Exception:
            pass

    col_widths = [len(h) for h in headers]
    for row in rows:
        for i, cell in enumerate(row):
            if i < len(col_widths):
                col_widths[i] = max(col_widths[i], len(str(cell)))
    header_line = " | ".join(h.ljust(col_widths[i]) for i, h in enumerate(headers))
    typer.echo(header_line)
    typer.echo("-" * len(header_line))
    for row in rows:
        typer.echo(" | ".join(str(cell).ljust(col_widths[i]) for i, cell in enumerate(row)))


@contextlib.contextmanager
def exit_on_error() -> Iterator[None]:
    """Turn library errors into their exit codes, logging the message without a traceback."""
    try:
        yield
    except GLPPError as err:
        logger.error(str(err))
        raise typer.Exit(code=err.exit_code)


def emit_result(data: Mapping[str, Any], out_dir: Optional[Path], name: str) -> None:
    """Print the result document on stdout and, with an output directory, write it there too."""
    typer.echo(to_json_text(data))
    if out_dir is not None:
        path = write_json(Path(out_dir) / f"{name}.json", data)
        logger.info(f"Result written to {path}")


def fail_unless(passed: bool, message: str) -> None:
    if not passed:
        logger.error(message)
        raise typer.Exit(code=ExitCode.OPERATION_FAILED)


def parse_int_list(text: Optional[str], label: str) -> Optional[List[int]]:
    """'10,30' -> [10, 30]; exit 2 on anything else."""
    if text is None:
        return None
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        logger.error(f"{label} must be comma-separated integers, got {text!r}")
        raise typer.Exit(code=ExitCode.INVALID_INPUT)


# ==================== Option factories ====================


def verbose_option() -> bool:
    """Factory for the --verbose/-v option used across all commands."""
    return typer.Option(False, "--verbose", "-v", help="Increase logging verbosity.")


def seed_option() -> Optional[int]:
    return typer.Option(None, "--seed", help="Random seed (default: $GLPP_SEED, else 0).")


def jobs_option() -> Optional[int]:
    return typer.Option(None, "--jobs", "-j", min=1, help="Worker processes for replicas.")


def config_option() -> Optional[Path]:
    return typer.Option(
        None, "--config", exists=True, dir_okay=False, help="YAML or JSON run file; flags override its values."
    )


def out_dir_option() -> Optional[Path]:
    return typer.Option(None, "--out-dir", "-o", file_okay=False, help="Directory for JSON/CSV/SVG outputs.")
