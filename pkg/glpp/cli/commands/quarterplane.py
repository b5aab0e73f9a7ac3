"""Quarter-plane growth and its limit-shape profile."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from functools import partial
from pathlib import Path
from typing import Dict, Optional

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


def _replica_summary(N: int, fam, until: float, n: float, seed: int) -> Dict[str, Optional[float]]:
    from glpp.growth import grow_quarter_plane, shape_profile

    field_ = grow_quarter_plane(N, fam, until_time=until, seed=seed)
    profile = shape_profile(field_, n, fam)
    return {"seed": seed, "deviation": profile.deviation, "diagonal_ratio": field_.diagonal_ratio()}


@app.command(help="Grow GLPP on the quarter-plane and compare its front with the limit shape.")
def quarterplane(
    N: Optional[int] = typer.Option(None, "--N", "-N", help="Box size."),
    family: Optional[str] = typer.Option(None, "--family", "-f", help="Waiting-time family."),
    until: Optional[float] = typer.Option(None, "--until", help="Growth time (default N)."),
    n: Optional[float] = typer.Option(None, "--n", help="Profile time (default until)."),
    replicas: Optional[int] = typer.Option(None, "--replicas", help="Independent boxes to summarize."),
    svg: Optional[Path] = typer.Option(None, "--svg", dir_okay=False, help="Scaled front with the limit shape."),
    field_csv: Optional[Path] = typer.Option(None, "--field", dir_okay=False, help="Write every τ(x, y) as CSV."),
    seed: Optional[int] = seed_option(),
    jobs: Optional[int] = jobs_option(),
    config: Optional[Path] = config_option(),
    out_dir: Optional[Path] = out_dir_option(),
    verbose: bool = verbose_option(),
) -> None:
    """
    Grow the N x N box, extract the front at time n, and report its deviation.

    With a classical geometric family (constant(geometric:p), or geometric:p
    whose integrable family is constant) the deviation is measured against
    (x + y + 2√((1-p)xy)) / p.

    Examples:
        glpp quarterplane --N 1000 --family geometric:0.5 --until 1000 --svg shape.svg
        glpp quarterplane --N 400 --family edge_lpp(poisson:1) --replicas 8 --jobs 4
    """
    _configure_logging(verbose)
    from glpp.config import QuarterPlaneConfig, build_config
    from glpp.growth import geometric_shape, grow_quarter_plane, shape_profile
    from glpp.outputs import FieldFrame, ShapeProfileFrame, plot_shape_profile, write_frame
    from glpp.utils import spawn_seeds

    with exit_on_error():
        cfg = build_config(
            QuarterPlaneConfig,
            config,
            N=N,
            family=family,
            until=until,
            n=n,
            replicas=replicas,
            svg=svg,
            seed=seed,
            jobs=jobs,
        )
        fam = cfg.family.family()
        logger.info(f"Growing the {cfg.N}x{cfg.N} quarter-plane with {fam.label} up to t={cfg.until:g}")
        field_ = grow_quarter_plane(cfg.N, fam, until_time=cfg.until, seed=cfg.seed)
        profile = shape_profile(field_, cfg.n, fam)
        result = {
            "command": "quarterplane",
            "config": cfg.provenance(),
            "family": cfg.family.to_dict(),
            "reference": profile.reference,
            "deviation": profile.deviation,
            "diagonal_ratio": field_.diagonal_ratio(),
        }
        p = None
        if profile.reference is not None:
            p = fam.at(0).mass(1)
            result["diagonal_limit"] = float(geometric_shape(1.0, 1.0, p))
        if cfg.replicas > 1:
            seeds = [int(c.generate_state(1)[0]) for c in spawn_seeds(cfg.seed, cfg.replicas - 1)]
            work = partial(_replica_summary, cfg.N, fam, cfg.until, cfg.n)
            if cfg.jobs > 1:
                with ProcessPoolExecutor(max_workers=min(cfg.jobs, len(seeds))) as pool:
                    extra = list(pool.map(work, seeds))
            else:
                extra = [work(s) for s in seeds]
            ratios = np.array(
                [r for r in [result["diagonal_ratio"]] + [e["diagonal_ratio"] for e in extra] if r is not None]
            )
            result["replicas"] = extra
            result["diagonal_ratio_mean"] = float(ratios.mean())
            result["diagonal_ratio_se"] = float(ratios.std(ddof=1) / np.sqrt(ratios.size))
        if out_dir is not None:
            write_frame(profile.points, ShapeProfileFrame, Path(out_dir) / "shape_profile.csv")
        if field_csv is not None:
            write_frame(field_.to_frame(), FieldFrame, field_csv)
        if cfg.svg is not None:
            plot_shape_profile(profile, cfg.svg, p=p)
        emit_result(result, out_dir, "quarterplane")
