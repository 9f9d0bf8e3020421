"""
CLI entry point for coopsim
"""

import logging
import os
import sys
import tomllib
from functools import wraps
from pathlib import Path
from typing import Optional

import click
import numpy as np
from dotenv import load_dotenv
from rich.console import Console
from rich.logging import RichHandler

from . import __version__
from .channel import ChannelState
from .config import ConfigError, ExperimentConfig, load_config, preset_names
from .controller import ControllerParams, VirtualQueues, decide, performance_bound, solver_input
from .dp import CooperativeTwoStage, enumerate_outcomes, exact_dp, mc_estimate
from .engine import Simulation, feasibility_table, fit_queue_growth, sweep_v, verify_identities
from .oracle import grid_best_action, grid_second_stage
from .report import (
    dp_frame,
    feasibility_frame,
    metrics_frame,
    print_dp,
    print_feasibility,
    print_identities,
    print_metrics,
    print_mode_table,
    print_sweep,
    sweep_frame,
    trace_frame,
    write_frame,
)
from .solver import af_source_grid

console = Console()
logger = logging.getLogger(__name__)

# exact expectation is skipped above this many outcomes
EXACT_DP_LIMIT = 4096


def setup_logging() -> None:
    load_dotenv()
    level = os.getenv("COOPSIM_LOG_LEVEL", "WARNING").upper()
    logging.basicConfig(
        level=level,
        format="%(message)s",
        handlers=[RichHandler(console=console, show_path=False)],
        force=True,
    )


def experiment_options(func):
    """Options shared by every experiment command"""
    @click.option("--config", "-c", "config_path", default=None,
                  help="Config file or preset name (default: $COOPSIM_CONFIG or 'baseline')")
    @click.option("--out", "-o", "out_dir", default="results", show_default=True, help="Output directory")
    @click.option("--seed", "-s", type=int, default=None, help="Override simulation.seed")
    @click.option("--set", "overrides", multiple=True, metavar="SECTION.KEY=VALUE",
                  help="Override a config value (repeatable)")
    @wraps(func)
    def wrapper(config_path, out_dir, seed, overrides, **kwargs):
        overrides = list(overrides)
        if seed is not None:
            overrides.append(f"simulation.seed={seed}")
        try:
            config = load_config(config_path, overrides)
        except ConfigError as e:
            console.print(f"[red]Configuration error: {e}[/red]")
            sys.exit(1)

        try:
            func(config=config, out_dir=Path(out_dir), **kwargs)
        except ConfigError as e:
            console.print(f"[red]Configuration error: {e}[/red]")
            sys.exit(1)
        except ValueError as e:
            console.print(f"[red]Error: {e}[/red]")
            sys.exit(1)
    return wrapper


def _save_echo(config: ExperimentConfig, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "config.toml").write_text(config.to_toml(), encoding="utf-8")


@click.group()
@click.version_option(version=__version__, prog_name="coopsim")
def cli():
    """coopsim - dynamic cooperative relaying under drift-plus-penalty control"""
    setup_logging()


@cli.command()
@experiment_options
@click.option("--trace", is_flag=True, help="Also write the per-slot trace.csv")
@click.option("--progress/--no-progress", default=True, help="Show a progress bar")
def simulate(config: ExperimentConfig, out_dir: Path, trace: bool, progress: bool):
    """Run one simulation and write metrics.csv

    Examples:
        coopsim simulate
        coopsim simulate --config baseline --set control.v=20 --trace
        coopsim simulate --set simulation.slots=10000 --seed 4
    """
    sim_config = config.sim_config(trace=trace)
    config_hash = config.config_hash()
    console.print(f"[cyan]Simulating {sim_config.slots} slots (config {config_hash})...[/cyan]")
    metrics = Simulation(sim_config).run(show_progress=progress, console=console)

    print_metrics(console, metrics, sim_config.source_ids)
    print_identities(console, verify_identities(metrics, sim_config))
    _save_echo(config, out_dir)
    write_frame(metrics_frame(metrics, sim_config.source_ids, config_hash), out_dir / "metrics.csv")
    if trace:
        write_frame(trace_frame(metrics, config_hash), out_dir / "trace.csv")
    console.print(f"[green]Results written to {out_dir}[/green]")


@cli.command(name="sweep-v")
@experiment_options
@click.option("--progress/--no-progress", default=True, help="Show a progress bar")
def sweep_v_command(config: ExperimentConfig, out_dir: Path, progress: bool):
    """Average sum power and queue occupancy over the V list

    Examples:
        coopsim sweep-v
        coopsim sweep-v --set "sweep.v_values=[1, 10, 100]"
    """
    sim_config = config.sim_config()
    config_hash = config.config_hash()
    v_values = config.sweep.v_values
    console.print(f"[cyan]Sweeping V over {v_values}...[/cyan]")
    results = sweep_v(sim_config, v_values, show_progress=progress, console=console)

    fit = fit_queue_growth(results) if len(results) > 1 else None
    params = sim_config.params()
    constants = [performance_bound(params, s) for s in sim_config.source_ids]
    print_sweep(console, results, fit, constants)
    _save_echo(config, out_dir)
    write_frame(sweep_frame(results, config_hash, constants), out_dir / "sweep.csv")
    console.print(f"[green]Results written to {out_dir}[/green]")


@cli.command()
@experiment_options
@click.option("--progress/--no-progress", default=True, help="Show a progress bar")
def feasibility(config: ExperimentConfig, out_dir: Path, progress: bool):
    """Feasibility of rate-reliability pairs under each strategy

    Examples:
        coopsim feasibility --config baseline-feasibility
        coopsim feasibility --config baseline-feasibility --set simulation.slots=100000
    """
    sim_config = config.sim_config()
    config_hash = config.config_hash()
    spec = config.feasibility
    console.print(
        f"[cyan]Checking {len(spec.pairs)} pairs x {len(spec.strategies)} strategies...[/cyan]"
    )
    cells = feasibility_table(sim_config, spec.pairs, spec.strategies, spec.tol,
                              show_progress=progress, console=console)
    print_feasibility(console, cells)
    _save_echo(config, out_dir)
    write_frame(feasibility_frame(cells, config_hash), out_dir / "feasibility.csv")
    console.print(f"[green]Results written to {out_dir}[/green]")


def load_slot_state(path: str) -> tuple[ChannelState, VirtualQueues]:
    """
    Read a hand-written channel state

    The file holds source, sd_gain, an optional [queues] table (z, x_source)
    and [[relays]] entries with id, sr_gain, rd_gain and queue.
    """
    try:
        with open(path, "rb") as f:
            raw = tomllib.load(f)
    except (OSError, tomllib.TOMLDecodeError) as e:
        raise ConfigError(f"{path}: {e}") from e
    allowed = {"source", "sd_gain", "queues", "relays"}
    unknown = set(raw) - allowed
    if unknown:
        raise ConfigError(f"unknown state key '{sorted(unknown)[0]}'")
    if "sd_gain" not in raw:
        raise ConfigError("state file needs 'sd_gain'")
    source = int(raw.get("source", 0))
    relays = raw.get("relays", [])
    for entry in relays:
        extra = set(entry) - {"id", "sr_gain", "rd_gain", "queue"}
        if extra:
            raise ConfigError(f"unknown state key 'relays.{sorted(extra)[0]}'")
        if not {"id", "sr_gain", "rd_gain"} <= set(entry):
            raise ConfigError("every [[relays]] entry needs id, sr_gain and rd_gain")
    ids = [int(r["id"]) for r in relays]
    if len(set(ids)) != len(ids) or source in ids:
        raise ConfigError("relay ids must be unique and differ from the source id")
    state = ChannelState(
        slot=0,
        source=source,
        sd_gain=float(raw["sd_gain"]),
        available_relays=frozenset(ids),
        sr_gains={int(r["id"]): float(r["sr_gain"]) for r in relays},
        rd_gains={int(r["id"]): float(r["rd_gain"]) for r in relays},
    )
    queues_raw = raw.get("queues", {})
    extra = set(queues_raw) - {"z", "x_source"}
    if extra:
        raise ConfigError(f"unknown state key 'queues.{sorted(extra)[0]}'")
    queues = VirtualQueues(
        z={source: float(queues_raw.get("z", 0.0))},
        x={source: float(queues_raw.get("x_source", 0.0)),
           **{int(r["id"]): float(r.get("queue", 0.0)) for r in relays}},
    )
    return state, queues


def _slot_params(config: ExperimentConfig, source: int, nodes: list[int]) -> ControllerParams:
    ctl = config.control
    return ControllerParams(
        v=ctl.v,
        rho={source: ctl.rho},
        lam={source: ctl.lam},
        alpha={source: ctl.alpha},
        p_avg={i: ctl.p_avg for i in nodes},
        p_max={i: ctl.p_max for i in nodes},
        beta={i: ctl.beta for i in nodes},
    )


@cli.command(name="solve-slot")
@click.argument("state_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--oracle", is_flag=True, hidden=True, help="Cross-check against the brute-force grid oracle")
@experiment_options
def solve_slot(config: ExperimentConfig, out_dir: Path, state_file: str, oracle: bool):
    """Solve one slot for a hand-written channel state

    STATE_FILE: TOML with sd_gain, [[relays]] (id, sr_gain, rd_gain, queue)
    and [queues] (z, x_source)

    Examples:
        coopsim solve-slot state.toml
        coopsim solve-slot state.toml --set link.scheme=af-ortho
    """
    state, queues = load_slot_state(state_file)
    params = _slot_params(config, state.source, [state.source, *state.relays])
    ctl = config.control
    action, table = decide(
        queues, state, params, config.budget(), config.link.scheme,
        modes=ctl.strategy.modes, af_grid_points=ctl.af_grid_points, af_refine=ctl.af_refine,
    )
    print_mode_table(console, table, action)

    if oracle:
        inp = solver_input(queues, state, params, config.budget(), config.link.scheme,
                           af_grid_points=ctl.af_grid_points, af_refine=ctl.af_refine)
        reference = grid_best_action(inp)
        console.print(f"[dim]grid oracle: {reference.action.mode.name.lower()} at cost {reference.cost:.6g}[/dim]")


def build_dp_model(config: ExperimentConfig) -> CooperativeTwoStage:
    dp, ctl = config.dp, config.control
    relays = list(range(1, dp.relays + 1))
    weight = dp.x + ctl.v * ctl.beta
    return CooperativeTwoStage(
        space=enumerate_outcomes(relays, dp.bins, rate=config.link.rate),
        fading=config.fading_model(),
        budget=config.budget(),
        scheme=config.link.scheme,
        reward=dp.z + ctl.v * ctl.alpha,
        source_weight=weight,
        relay_weights={i: weight for i in relays},
        relay_max={i: ctl.p_max for i in relays},
        source_max=ctl.p_max,
        mc_samples=dp.mc_samples,
        grid_points=dp.second_stage_points,
        seed=config.simulation.seed,
    )


@cli.command(name="dp-estimate")
@click.option("--oracle", is_flag=True, hidden=True, help="Cross-check against the brute-force grid oracle")
@experiment_options
def dp_estimate(config: ExperimentConfig, out_dir: Path, oracle: bool):
    """Exact and Monte Carlo cost-to-go of the unknown-channels problem

    Examples:
        coopsim dp-estimate --config dp-small
        coopsim dp-estimate --config dp-small --set dp.p_s=2.0 --set "dp.n_values=[10, 100]"
    """
    model = build_dp_model(config)
    dp = config.dp
    config_hash = config.config_hash()
    seed = config.simulation.seed

    exact: Optional[float] = None
    p_s = dp.p_s
    if len(model.space) <= EXACT_DP_LIMIT:
        console.print(f"[cyan]Exact DP over {len(model.space)} outcomes...[/cyan]")
        if p_s is None:
            solution = exact_dp(model, af_source_grid(config.control.p_max, dp.grid_points))
            p_s, exact = solution.p_s, solution.value
        else:
            exact = exact_dp(model, [p_s]).value
    elif p_s is None:
        raise ConfigError(f"{len(model.space)} outcomes is too many for the exact DP; set 'dp.p_s'")

    streams = np.random.SeedSequence(seed).spawn(len(dp.n_values))
    estimates = [
        mc_estimate(model, p_s, n, np.random.default_rng(stream))
        for n, stream in zip(dp.n_values, streams)
    ]
    console.print(f"P_s = {p_s:.6g}")
    print_dp(console, exact, estimates, dp.epsilons)

    if oracle:
        probs = model.outcome_probs(p_s)
        for index in np.flatnonzero(probs > 1e-6):
            ours = model.stage_two(p_s, int(index))
            reference = grid_second_stage(model, p_s, int(index))
            console.print(f"[dim]outcome {index}: J1 {ours:.6g}, grid oracle {reference:.6g}[/dim]")

    _save_echo(config, out_dir)
    write_frame(dp_frame(estimates, dp.epsilons, exact, seed, config_hash), out_dir / "dp_estimate.csv")
    console.print(f"[green]Results written to {out_dir}[/green]")


@cli.command()
def presets():
    """List the bundled experiment presets"""
    for name in preset_names():
        console.print(name)


if __name__ == "__main__":
    cli()
