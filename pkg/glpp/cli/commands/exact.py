"""Exact stationary laws and speeds of integrable families."""

from __future__ import annotations

from pathlib import Path
from typing import Optional

import numpy as np
import typer
from loguru import logger

from glpp.cli.app_instance import app
from glpp.cli.utils import (
    _configure_logging,
    config_option,
    emit_result,
    exit_on_error,
    jobs_option,
    out_dir_option,
    seed_option,
    verbose_option,
)


@app.command(help="Compute the exact stationary bridge law (and speeds) of an integrable family.")
def exact(
    L: Optional[int] = typer.Option(None, "--L", "-L", help="Half the circumference."),
    mu0: Optional[str] = typer.Option(None, "--mu0", help="Base law, e.g. geometric:0.5 or exp:1."),
    cap: Optional[int] = typer.Option(None, "--cap", help="Age cap T for the kernel contraction (default 40)."),
    tol: Optional[float] = typer.Option(None, "--tol", help="Fail when the tail estimate exceeds tol·Z."),
    speed: Optional[bool] = typer.Option(None, "--speed", help="Also compute c_L by both exact routes."),
    continuous: Optional[bool] = typer.Option(None, "--continuous", help="Integrate the continuous density."),
    n_samples: Optional[int] = typer.Option(None, "--n-samples", help="Monte Carlo samples for continuous L=3."),
    oracle: Optional[bool] = typer.Option(
        None, "--oracle", help="Compare against the truncated transition matrix (L <= 3)."
    ),
    svg: Optional[Path] = typer.Option(None, "--svg", dir_okay=False, help="Bar chart of the bridge law."),
    seed: Optional[int] = seed_option(),
    jobs: Optional[int] = jobs_option(),
    config: Optional[Path] = config_option(),
    out_dir: Optional[Path] = out_dir_option(),
    verbose: bool = verbose_option(),
) -> None:
    """
    Compute ν_L exactly, with a tail bound per bridge.

    A divergent Σ√μ₀ (for instance zeta:1.5) exits with code 4.

    Examples:
        glpp exact --L 3 --mu0 geometric:0.5 --cap 40
        glpp exact --L 2 --mu0 poisson:1 --speed --oracle -o results/
        glpp exact --L 2 --mu0 exp:1 --continuous
    """
    _configure_logging(verbose)
    from glpp.config import ExactConfig, build_config
    from glpp.outputs import BridgeLawFrame, TransitionFrame, bridge_law_frame, plot_bridge_law, write_frame

    with exit_on_error():
        cfg = build_config(
            ExactConfig,
            config,
            L=L,
            mu0=mu0,
            T_cap=cap,
            tol=tol,
            speed=speed,
            continuous=continuous,
            n_samples=n_samples,
            oracle=oracle,
            seed=seed,
            jobs=jobs,
        )
        header = {"command": "exact", "config": cfg.provenance(), "mu0": cfg.mu0.to_dict()}
        if cfg.continuous:
            result, law, bounds = _continuous(cfg)
        else:
            result, law, bounds, chain = _discrete(cfg)
            if chain is not None and out_dir is not None:
                write_frame(chain.to_frame(), TransitionFrame, Path(out_dir) / "transitions.csv")
        frame = bridge_law_frame(law, "exact", bounds)
        if out_dir is not None:
            write_frame(frame, BridgeLawFrame, Path(out_dir) / "bridge_law.csv")
        if svg is not None:
            plot_bridge_law(frame, svg)
        emit_result({**header, **result}, out_dir, "exact")


def _discrete(cfg):
    from glpp.core import ClosurePolicy
    from glpp.exact import speed_exact, stationary_law
    from glpp.oracle import oracle_stationary, tv_distance

    mu0 = cfg.mu0.measure()
    logger.info(f"Exact stationary law for L={cfg.L}, {mu0.label}, T_cap={cfg.T_cap}")
    law = stationary_law(cfg.L, mu0, cfg.T_cap, tol=cfg.tol, jobs=cfg.jobs)
    marginal = law.t1_marginal()
    result = {"law": law.to_dict(), "mean_t1": float(np.dot(np.arange(marginal.size), marginal))}
    if cfg.speed:
        result["speed"] = speed_exact(cfg.L, mu0, cfg.T_cap).to_dict()
    chain = None
    if cfg.oracle:
        fam = cfg.mu0.family()
        logger.info("Cross-checking against the truncated transition matrix")
        ref = oracle_stationary(cfg.L, fam, cfg.T_cap, ClosurePolicy.REFLECT_TO_CAP)
        result["oracle"] = {**ref.to_dict(), "tv_to_exact": tv_distance(ref.bridge_marginal(), law.nu)}
        chain = ref.chain
    bounds = {code: law.nu_bound(code) for code in law.nu}
    return result, law.nu, bounds, chain


def _continuous(cfg):
    from glpp.exact import continuous_law, sqrt_integral

    fam = cfg.mu0.density_family()
    logger.info(f"Continuous stationary law for L={cfg.L}, {fam.label}")
    law = continuous_law(cfg.L, fam, n_samples=cfg.n_samples, seed=cfg.seed)
    result = {
        "law": {"L": law.L, "family": law.family, "Z": law.Z, "Z_error": law.error, "method": law.method, "nu": law.nu},
        "sqrt_integral": sqrt_integral(fam),
    }
    return result, law.nu, None
