"""glpp Command Line Interface package.

Public API:
    app: The main Typer application (with all commands registered)
"""

from __future__ import annotations

# Import from app.py (not app_instance.py) to trigger command registration
from glpp.cli.app import app
from glpp.cli.utils import (
    _configure_logging,
    cli_print,
    cli_print_table,
    emit_result,
    exit_on_error,
)

__all__ = [
    "app",
    "_configure_logging",
    "cli_print",
    "cli_print_table",
    "emit_result",
    "exit_on_error",
]
