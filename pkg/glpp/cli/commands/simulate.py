"""Simulate the front-line chain on the cylinder."""

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
    jobs_option,
    out_dir_option,
    seed_option,
    verbose_option,
)


@app.command(help="Simulate the front line of GLPP on a cylinder of circumference 2L.")
def simulate(
    L: Optional[int] = typer.Option(None, "--L", "-L", help="Half the circumference."),
    family: Optional[str] = typer.Option(
        None, "--family", "-f", help="Family shorthand, preset, table@file.json or JSON document."
    ),
    steps: Optional[int] = typer.Option(None, "--steps", help="Discrete steps (default 1e6)."),
    burn_in: Optional[int] = typer.Option(None, "--burn-in", help="Discarded steps (default steps/10)."),
    continuous: Optional[bool] = typer.Option(
        None, "--continuous/--discrete", help="Run the continuous-time event-driven chain."
    ),
    horizon: Optional[float] = typer.Option(None, "--horizon", help="Continuous-time horizon."),
    sample_every: Optional[float] = typer.Option(None, "--sample-every", help="Continuous sampling period."),
    max_events: Optional[int] = typer.Option(None, "--max-events", help="Continuous event budget."),
    force: Optional[bool] = typer.Option(None, "--force", help="Run even when certificates fail."),
    replicas: Optional[int] = typer.Option(None, "--replicas", help="Independent discrete replicas to pool."),
    trajectory: Optional[Path] = typer.Option(
        None, "--trajectory", dir_okay=False, help="Write the per-step (or per-event) log as CSV."
    ),
    seed: Optional[int] = seed_option(),
    jobs: Optional[int] = jobs_option(),
    config: Optional[Path] = config_option(),
    out_dir: Optional[Path] = out_dir_option(),
    verbose: bool = verbose_option(),
) -> None:
    """
    Simulate the front-line chain and report its empirical laws and speeds.

    Args:
        L: Half the circumference
        family: Waiting-time family
        steps: Number of discrete steps
        burn_in: Discarded leading steps
        continuous: Use continuous time
        horizon: Continuous-time horizon
        sample_every: Continuous sampling period
        max_events: Continuous event budget
        force: Continue past failed certificates
        replicas: Independent discrete replicas
        trajectory: CSV path for the run log
        seed: Random seed
        jobs: Worker processes for replicas
        config: YAML/JSON run file
        out_dir: Output directory
        verbose: Increase logging verbosity

    Examples:
        glpp simulate --L 2 --family geometric:0.5 --steps 1000000 --seed 7
        glpp simulate --L 3 --family edge_lpp(poisson:1) --replicas 8 --jobs 4
        glpp simulate --L 2 --family exp:1 --continuous --horizon 10000
    """
    _configure_logging(verbose)
    from glpp.config import SimulationConfig, build_config
    from glpp.outputs import (
        BridgeLawFrame,
        EventFrame,
        TrajectoryFrame,
        bridge_law_frame,
        write_frame,
    )

    with exit_on_error():
        cfg = build_config(
            SimulationConfig,
            config,
            L=L,
            family=family,
            steps=steps,
            burn_in=burn_in,
            continuous=continuous,
            horizon=horizon,
            sample_every=sample_every,
            max_events=max_events,
            force=force,
            replicas=replicas,
            record=True if trajectory else None,
            seed=seed,
            jobs=jobs,
        )
        header = {"command": "simulate", "config": cfg.provenance(), "family": cfg.family.to_dict()}
        if cfg.continuous:
            result, log, schema, law = _run_continuous(cfg)
        else:
            result, log, schema, law = _run_discrete(cfg)
        if trajectory is not None:
            if log is None:
                logger.warning("no run log to write; --trajectory needs a single replica")
            else:
                write_frame(log, TrajectoryFrame if schema == "trajectory" else EventFrame, trajectory)
                logger.info(f"Run log written to {trajectory}")
        if out_dir is not None:
            write_frame(bridge_law_frame(law, "simulated"), BridgeLawFrame, Path(out_dir) / "bridge_law.csv")
        emit_result({**header, **result}, out_dir, "simulate")


def _run_discrete(cfg):
    from glpp.chain import estimate_speed, simulate_discrete, simulate_replicas
    from glpp.core import InsufficientSamples

    fam = cfg.family.family()
    logger.info(f"Simulating L={cfg.L} {fam.label} for {cfg.steps} steps x {cfg.replicas} replicas")
    if cfg.replicas == 1:
        traj = simulate_discrete(cfg.L, fam, cfg.steps, cfg.burn_in, cfg.seed, record=cfg.record)
    else:
        traj = simulate_replicas(cfg.L, fam, cfg.steps, cfg.replicas, cfg.burn_in, cfg.seed, jobs=cfg.jobs)
    law = traj.bridge_law()
    result = {"samples": traj.samples, "nu": law}
    try:
        speed = estimate_speed(traj)
        result["mean_t1"] = speed.mean_t1
        result["speed"] = {**speed.to_dict(), "routes_agree": speed.agree()}
    except InsufficientSamples as err:
        logger.warning(str(err))
        result["speed"] = None
    return result, traj.log, "trajectory", law


def _run_continuous(cfg):
    from glpp.chain import simulate_continuous

    fam = cfg.family.density_family()
    logger.info(f"Simulating L={cfg.L} {fam.label} in continuous time up to t={cfg.horizon}")
    traj = simulate_continuous(
        cfg.L,
        fam,
        cfg.horizon,
        seed=cfg.seed,
        sample_every=cfg.sample_every,
        max_events=cfg.max_events,
        force=cfg.force,
        record_events=cfg.record,
    )
    law = traj.occupancy()
    result = {
        "horizon": traj.horizon,
        "burn_in": traj.burn_in,
        "events": traj.events,
        "max_rate": traj.max_rate,
        "nu": law,
        "sampled_bridges": dict(sorted(traj.sampled_bridges.items())),
        "mean_t1": float(traj.t1_samples.mean()) if traj.t1_samples.size else None,
    }
    return result, traj.event_log, "events", law
