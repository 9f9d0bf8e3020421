"""
Console summaries
"""

import math
from typing import Mapping, Optional, Sequence

from rich.console import Console
from rich.table import Table

from ..controller import PerformanceBound
from ..dp import MonteCarloEstimate, chebyshev_bound
from ..engine import FeasibilityCell, IdentityCheck, Metrics, QueueGrowthFit, Strategy
from ..phy import Mode
from ..solver import ControlAction, ModeCost


def _fmt(value: float, digits: int = 4) -> str:
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    if math.isnan(value):
        return "-"
    return f"{value:.{digits}f}"


def print_metrics(console: Console, metrics: Metrics, sources: Sequence[int]) -> None:
    """Per-source reliability and per-node power, 4 decimals"""
    table = Table(title=f"Run summary (V={metrics.v:g}, seed={metrics.seed}, {metrics.measured_slots} measured slots)")
    table.add_column("node", justify="right")
    table.add_column("role")
    table.add_column("arrival rate", justify="right")
    table.add_column("delivered", justify="right")
    table.add_column("reliability", justify="right")
    table.add_column("avg power", justify="right")
    table.add_column("avg Z", justify="right")
    table.add_column("avg X", justify="right")
    for node in sorted(metrics.avg_power):
        if node in sources:
            table.add_row(
                str(node), "source",
                _fmt(metrics.arrival_rate[node]), _fmt(metrics.delivered_fraction[node]),
                _fmt(metrics.reliability[node]), _fmt(metrics.avg_power[node]),
                _fmt(metrics.avg_z[node]), _fmt(metrics.avg_x[node]),
            )
        else:
            table.add_row(
                str(node), "relay", "-", "-", "-",
                _fmt(metrics.avg_power[node]), "-", _fmt(metrics.avg_x[node]),
            )
    console.print(table)
    modes = ", ".join(f"{name}={count}" for name, count in sorted(metrics.mode_counts.items()))
    console.print(f"[bold]sum power[/bold] {_fmt(metrics.sum_power)}   [bold]objective[/bold] {_fmt(metrics.objective)}")
    console.print(f"[dim]modes: {modes}[/dim]")


def print_sweep(
    console: Console,
    results: Sequence[Metrics],
    fit: Optional[QueueGrowthFit] = None,
    constants: Optional[Sequence[PerformanceBound]] = None,
) -> None:
    table = Table(title="Average sum power and queues vs V")
    for name in ("V", "sum power", "avg Z", "avg X", "min reliability"):
        table.add_column(name, justify="right")
    for m in results:
        table.add_row(f"{m.v:g}", _fmt(m.sum_power), _fmt(m.mean_z), _fmt(m.mean_x), _fmt(min(m.reliability.values())))
    console.print(table)
    if fit is not None:
        console.print(
            f"avg Z ~ {fit.slope:.4g} V + {fit.intercept:.4g}  (R^2 = {fit.r_squared:.4f})"
        )
    if constants:
        b = max(c.b for c in constants)
        console.print(f"[dim]B = {b:.6g}; utility gap bound B/V, queue bound (B + V(alpha + sum beta P_max))/eps[/dim]")


def print_feasibility(console: Console, cells: Sequence[FeasibilityCell]) -> None:
    """Verdict matrix: strategies as rows, (lambda, rho) pairs as columns"""
    pairs = list(dict.fromkeys((c.lam, c.rho) for c in cells))
    strategies = list(dict.fromkeys(c.strategy for c in cells))
    verdict = {(c.strategy, c.lam, c.rho): c.feasible for c in cells}
    table = Table(title="Feasibility of rate-reliability pairs")
    table.add_column("(lambda, rho)")
    for lam, rho in pairs:
        table.add_column(f"({lam:g}, {rho:g})", justify="center")
    labels = {Strategy.DIRECT: "direct transmission", Strategy.COOPERATIVE: "always cooperate",
              Strategy.OPTIMAL: "optimal strategy"}
    for strategy in strategies:
        marks = [
            "[green]✓[/green]" if verdict[(strategy, lam, rho)] else "[red]✗[/red]"
            for lam, rho in pairs
        ]
        table.add_row(labels[strategy], *marks)
    console.print(table)


def print_mode_table(console: Console, table: Mapping[Mode, ModeCost], chosen: ControlAction) -> None:
    out = Table(title="Per-mode drift-plus-penalty cost")
    out.add_column("mode")
    out.add_column("cost", justify="right")
    out.add_column("P_s", justify="right")
    out.add_column("relay powers")
    for mode, result in table.items():
        action = result.action
        relays = "-"
        source_power = "-"
        if action is not None:
            source_power = _fmt(action.alloc.source_power)
            relays = ", ".join(f"{i}:{_fmt(p)}" for i, p in sorted(action.alloc.relay_powers.items())) or "-"
        marker = " *" if mode is chosen.mode else ""
        out.add_row(mode.name.lower() + marker, _fmt(result.cost), source_power, relays)
    console.print(out)
    console.print(f"[bold green]chosen:[/bold green] {chosen.mode.name.lower()}")


def print_dp(
    console: Console,
    exact: Optional[float],
    estimates: Sequence[MonteCarloEstimate],
    epsilons: Sequence[float],
) -> None:
    if exact is not None:
        console.print(f"[bold]exact J0[/bold] {exact:.6g}")
    table = Table(title="Monte Carlo cost-to-go estimate")
    table.add_column("n", justify="right")
    table.add_column("estimate", justify="right")
    table.add_column("variance", justify="right")
    for eps in epsilons:
        table.add_column(f"P(err >= {eps:g}) <=", justify="right")
    for est in estimates:
        bounds = [_fmt(chebyshev_bound(est.variance, est.n, eps)) for eps in epsilons]
        table.add_row(str(est.n), f"{est.value:.6g}", f"{est.variance:.6g}", *bounds)
    console.print(table)


def print_identities(console: Console, checks: Sequence[IdentityCheck]) -> None:
    failed = [c for c in checks if not c.ok]
    if not failed:
        console.print(f"[green]all {len(checks)} queue identities hold[/green]")
        return
    for c in failed:
        console.print(f"[red]{c.name} identity violated at node {c.node}: {c.lhs:.9g} vs {c.rhs:.9g}[/red]")
