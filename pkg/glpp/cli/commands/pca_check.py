"""Local identity checks on the PCA transition kernel."""

from __future__ import annotations

from pathlib import Path
from typing import Optional

import typer
from loguru import logger

from glpp.cli.app_instance import app
from glpp.cli.utils import (
    _configure_logging,
    config_option,
    emit_result,
    exit_on_error,
    fail_unless,
    out_dir_option,
    parse_int_list,
    verbose_option,
)


def _grid(values, label):
    """'S,T,U' or 'ST,U' -> (st_max, u_max)."""
    if values is None:
        return None, None
    if len(values) == 3:
        return max(values[0], values[1]), values[2]
    if len(values) == 2:
        return values[0], values[1]
    logger.error(f"{label} takes two or three integers, got {values}")
    raise typer.Exit(code=2)


@app.command("pca-check", help="Check the stable and eight-factor exchange identities of the PCA kernel.")
def pca_check(
    mu0: Optional[str] = typer.Option(None, "--mu0", help="Base law of the integrable family."),
    grid: Optional[str] = typer.Option(None, "--grid", help="Stable identity caps 's,t,u' (default 10,10,30)."),
    exchange_grid: Optional[str] = typer.Option(
        None, "--exchange-grid", help="Exchange identity caps 'st,u' (default 6,20)."
    ),
    alpha: Optional[float] = typer.Option(None, "--alpha", help="Deformation of the kernels (1 is undeformed)."),
    perturb: Optional[float] = typer.Option(
        None, "--perturb", help="Check a perturbed family instead; the identities should then fail."
    ),
    config: Optional[Path] = config_option(),
    out_dir: Optional[Path] = out_dir_option(),
    verbose: bool = verbose_option(),
) -> None:
    """
    Run the identity checks and exit 3 when any residual exceeds its tolerance.

    Examples:
        glpp pca-check --mu0 poisson:1
        glpp pca-check --mu0 geometric:0.5 --grid 10,10,30
        glpp pca-check --mu0 geometric:0.5 --perturb 0.01
    """
    _configure_logging(verbose)
    from glpp.config import PcaCheckConfig, build_config
    from glpp.measures import perturb_family
    from glpp.pca import PcaTransition, check_belyaev, check_stable_identity, derive_cond_int

    st_max, u_max = _grid(parse_int_list(grid, "--grid"), "--grid")
    b_st, b_u = _grid(parse_int_list(exchange_grid, "--exchange-grid"), "--exchange-grid")
    with exit_on_error():
        cfg = build_config(
            PcaCheckConfig,
            config,
            mu0=mu0,
            st_max=st_max,
            u_max=u_max,
            exchange_st_max=b_st,
            exchange_u_max=b_u,
            alpha=alpha,
            perturb=perturb,
        )
        measure = cfg.mu0.measure()
        fam = cfg.mu0.family()
        if cfg.perturb is not None:
            fam = perturb_family(fam, eps=cfg.perturb)
            logger.info(f"Checking the perturbed family {fam.label}")
        reports = [
            check_stable_identity(measure, cfg.st_max, cfg.u_max, alpha=cfg.alpha),
            check_belyaev(fam, cfg.exchange_st_max, cfg.exchange_u_max),
            derive_cond_int(fam, measure),
        ]
        for report in reports:
            logger.info(f"{report.identity}: residual {report.max_residual:.3g} (tolerance {report.tolerance:g})")
        result = {
            "command": "pca-check",
            "config": cfg.provenance(),
            "mu0": cfg.mu0.to_dict(),
            "checks": [r.to_dict() for r in reports],
            "stochasticity_residual": PcaTransition(fam).stochasticity_residual(cfg.exchange_st_max),
            "passed": all(r.passed for r in reports),
        }
        emit_result(result, out_dir, "pca_check")
    failed = [r.identity for r in reports if not r.passed]
    fail_unless(not failed, f"identities failed: {', '.join(failed)}")
