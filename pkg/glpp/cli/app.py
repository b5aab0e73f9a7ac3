#!/usr/bin/env python3
"""glpp CLI application.

Commands are defined in the commands/ submodule and self-register
via @app.command() decorators.
"""

from __future__ import annotations

from glpp.cli.app_instance import app

from glpp.cli.commands import simulate  # noqa: F401
from glpp.cli.commands import exact  # noqa: F401
from glpp.cli.commands import pca_check  # noqa: F401
from glpp.cli.commands import quarterplane  # noqa: F401
from glpp.cli.commands import verify  # noqa: F401
from glpp.cli.commands import info  # noqa: F401

try:
    from rich.traceback import install as _rich_tb_install

    _rich_tb_install(show_locals=False)
except Exception:
    pass


if __name__ == "__main__":
    app()
