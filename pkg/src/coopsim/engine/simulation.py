"""
Slotted simulation of the drift-plus-penalty controller
"""

import logging
from collections import Counter
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional

import numpy as np
from rich.console import Console
from rich.progress import BarColumn, Progress, SpinnerColumn, TextColumn, TimeElapsedColumn

from ..channel import CellGrid, FadingModel, MobilityModel, sample_channel_state, step_mobility
from ..controller import ControllerParams, DriftPlusPenaltyController, power_by_node
from ..phy import LinkBudget, Mode, Scheme, outcome

logger = logging.getLogger(__name__)

PROGRESS_EVERY = 1000
STREAMS = ("arrivals", "tdma", "mobility", "fading")


class Access(str, Enum):
    """How sources share the medium"""
    ROUND_ROBIN = "round_robin"
    RANDOM = "random"
    # every source owns an orthogonal channel
    ORTHOGONAL = "orthogonal"


class Strategy(str, Enum):
    OPTIMAL = "optimal"
    DIRECT = "direct"
    COOPERATIVE = "cooperative"

    @property
    def modes(self) -> frozenset[Mode]:
        if self is Strategy.DIRECT:
            return frozenset({Mode.IDLE, Mode.DIRECT})
        if self is Strategy.COOPERATIVE:
            return frozenset({Mode.IDLE, Mode.COOPERATIVE})
        return frozenset(Mode)


@dataclass(frozen=True)
class TdmaSchedule:
    """Picks the single source allowed to transmit in a slot"""
    order: tuple[int, ...]
    randomized: bool = False

    def __post_init__(self):
        if not self.order:
            raise ValueError("TDMA schedule needs at least one source")

    def select(self, t: int, rng: np.random.Generator) -> int:
        if self.randomized:
            return self.order[int(rng.integers(len(self.order)))]
        return self.order[t % len(self.order)]


@dataclass(frozen=True)
class SourceSpec:
    """Stationary source with its traffic and constraints"""
    cell: int
    lam: float
    rho: float
    alpha: float = 0.0
    beta: float = 1.0
    p_avg: float = 1.0
    p_max: float = 10.0


@dataclass(frozen=True)
class RelaySpec:
    """Mobile relay with its starting cell"""
    cell: int
    beta: float = 1.0
    p_avg: float = 1.0
    p_max: float = 10.0


@dataclass(frozen=True)
class SimConfig:
    """
    Full description of one simulation run

    Node ids: sources are 0..S-1 in list order, relays follow as S..S+N-1.
    """
    sources: tuple[SourceSpec, ...]
    relays: tuple[RelaySpec, ...] = ()
    grid: CellGrid = field(default_factory=CellGrid)
    fading: FadingModel = field(default_factory=FadingModel)
    scheme: Scheme = Scheme.REG_DF_ORTHO
    budget: LinkBudget = field(default_factory=LinkBudget)
    v: float = 1.0
    slots: int = 500_000
    seed: int = 0
    stay_probability: float = 0.8
    access: Access = Access.ROUND_ROBIN
    strategy: Strategy = Strategy.OPTIMAL
    include_adjacent: bool = False
    sources_as_relays: bool = False
    burn_in: float = 0.5
    af_grid_points: int = 100
    af_refine: bool = False
    trace: bool = False

    def __post_init__(self):
        if self.slots < 1:
            raise ValueError(f"horizon must be at least 1 slot, got {self.slots}")
        if not self.sources:
            raise ValueError("at least one source is required")
        if not 0.0 <= self.burn_in < 1.0:
            raise ValueError(f"burn_in must be in [0, 1), got {self.burn_in}")
        for spec in (*self.sources, *self.relays):
            if not self.grid.contains(spec.cell):
                raise ValueError(f"cell {spec.cell} is outside the {self.grid.rows}x{self.grid.cols} grid")
        for spec in self.sources:
            if not 0.0 <= spec.lam <= 1.0:
                raise ValueError(f"arrival rate must be in [0, 1], got {spec.lam}")

    @property
    def source_ids(self) -> list[int]:
        return list(range(len(self.sources)))

    @property
    def relay_ids(self) -> list[int]:
        first = len(self.sources)
        return list(range(first, first + len(self.relays)))

    @property
    def measured_from(self) -> int:
        """First slot counted in the time averages"""
        return int(self.slots * self.burn_in)

    def params(self) -> ControllerParams:
        nodes = {**dict(enumerate(self.sources)), **dict(zip(self.relay_ids, self.relays))}
        return ControllerParams(
            v=self.v,
            rho={s: spec.rho for s, spec in enumerate(self.sources)},
            lam={s: spec.lam for s, spec in enumerate(self.sources)},
            alpha={s: spec.alpha for s, spec in enumerate(self.sources)},
            p_avg={i: spec.p_avg for i, spec in nodes.items()},
            p_max={i: spec.p_max for i, spec in nodes.items()},
            beta={i: spec.beta for i, spec in nodes.items()},
        )

    def with_v(self, v: float) -> "SimConfig":
        return replace(self, v=v)

    def with_traffic(self, lam: float, rho: float) -> "SimConfig":
        """Same network with every source at rate lam and reliability rho"""
        return replace(self, sources=tuple(replace(s, lam=lam, rho=rho) for s in self.sources))


@dataclass(frozen=True)
class SlotTrace:
    """What one source did in one slot"""
    slot: int
    source: int
    arrived: int
    mode: str
    source_power: float
    relay_power: float
    relays_used: int
    success: int
    z: float
    x_source: float


@dataclass
class Metrics:
    """Time averages over the measured window plus full-horizon totals"""
    v: float
    seed: int
    slots: int
    measured_slots: int
    arrival_rate: dict[int, float]
    delivered_fraction: dict[int, float]
    reliability: dict[int, float]
    avg_power: dict[int, float]
    avg_z: dict[int, float]
    avg_x: dict[int, float]
    final_z: dict[int, float]
    final_x: dict[int, float]
    max_z: dict[int, float]
    max_x: dict[int, float]
    total_arrivals: dict[int, int]
    total_deliveries: dict[int, int]
    total_power: dict[int, float]
    mode_counts: dict[str, int]
    objective: float
    trace: list[SlotTrace] = field(default_factory=list)

    @property
    def sum_power(self) -> float:
        return sum(self.avg_power.values())

    @property
    def mean_z(self) -> float:
        return float(np.mean(list(self.avg_z.values())))

    @property
    def mean_x(self) -> float:
        return float(np.mean(list(self.avg_x.values()))) if self.avg_x else 0.0


class Simulation:
    """Owns the world state of one run and advances it slot by slot"""

    def __init__(self, config: SimConfig):
        self.config = config
        self.params = config.params()
        self.controller = DriftPlusPenaltyController(
            self.params,
            config.budget,
            config.scheme,
            modes=config.strategy.modes,
            af_grid_points=config.af_grid_points,
            af_refine=config.af_refine,
        )
        seeds = np.random.SeedSequence(config.seed).spawn(len(STREAMS))
        self.rng = {name: np.random.default_rng(s) for name, s in zip(STREAMS, seeds)}
        self.mobility = MobilityModel(
            stay_probability=config.stay_probability,
            positions={i: spec.cell for i, spec in zip(config.relay_ids, config.relays)},
        )
        self.tdma: Optional[TdmaSchedule] = None
        if config.access is not Access.ORTHOGONAL:
            self.tdma = TdmaSchedule(tuple(config.source_ids), randomized=config.access is Access.RANDOM)
        self.t = 0

        sources, nodes = config.source_ids, self.params.nodes
        self._arrivals = Counter({s: 0 for s in sources})
        self._deliveries = Counter({s: 0 for s in sources})
        self._power = {i: 0.0 for i in nodes}
        self._z_sum = {s: 0.0 for s in sources}
        self._x_sum = {i: 0.0 for i in nodes}
        self._total_arrivals = Counter({s: 0 for s in sources})
        self._total_deliveries = Counter({s: 0 for s in sources})
        self._total_power = {i: 0.0 for i in nodes}
        self._max_z = {s: 0.0 for s in sources}
        self._max_x = {i: 0.0 for i in nodes}
        self._modes: Counter = Counter()
        self._measured = 0
        self.trace: list[SlotTrace] = []

    def _schedule(self, t: int) -> list[int]:
        sources = self.config.source_ids
        if self.tdma is not None:
            return [self.tdma.select(t, self.rng["tdma"])]
        # service order rotates by one source per slot
        start = t % len(sources)
        return sources[start:] + sources[:start]

    def _helpers(self, transmitting: set[int]) -> MobilityModel:
        if not self.config.sources_as_relays:
            return self.mobility
        positions = dict(self.mobility.positions)
        positions.update({
            s: spec.cell for s, spec in enumerate(self.config.sources) if s not in transmitting
        })
        return replace(self.mobility, positions=positions)

    def run_slot(self) -> list[SlotTrace]:
        """
        Advance the world by one slot

        Order: arrivals, source selection, channels, decisions, outcomes,
        queue updates, metrics, then the end-of-slot relay moves.
        """
        config, t = self.config, self.t
        lam = np.array([spec.lam for spec in config.sources])
        drawn = self.rng["arrivals"].random(len(lam)) < lam
        arrivals = {s: int(a) for s, a in zip(config.source_ids, drawn)}
        scheduled = self._schedule(t)

        transmitting = {s for s in scheduled if arrivals[s]}
        helpers = self._helpers(transmitting)
        queues = self.controller.queues
        busy: set[int] = set()
        outcomes: dict[int, int] = {}
        powers: dict[int, float] = {}
        rows = []
        for s in scheduled:
            state = sample_channel_state(
                config.sources[s].cell, helpers, config.fading, self.rng["fading"],
                slot=t, source=s, grid=config.grid,
                include_adjacent=config.include_adjacent, exclude=busy,
            )
            action, _ = self.controller.decide(state, arrived=bool(arrivals[s]))
            phi = outcome(action.mode, config.scheme, action.alloc, state, config.budget.for_state(state))
            used = power_by_node(action.alloc, s)
            for node, p in used.items():
                powers[node] = powers.get(node, 0.0) + p
            busy.update(node for node in used if node != s)
            outcomes[s] = phi
            self._modes[action.mode.name.lower()] += 1
            if config.trace:
                rows.append(SlotTrace(
                    slot=t,
                    source=s,
                    arrived=arrivals[s],
                    mode=action.mode.name.lower(),
                    source_power=action.alloc.source_power,
                    relay_power=sum(action.alloc.relay_powers.values()),
                    relays_used=sum(1 for p in action.alloc.relay_powers.values() if p > 0),
                    success=phi,
                    z=queues.z[s],
                    x_source=queues.x[s],
                ))

        self.controller.update(outcomes, arrivals, powers)
        self._accumulate(t, arrivals, outcomes, powers)
        self.trace.extend(rows)
        self.mobility = step_mobility(self.mobility, config.grid, self.rng["mobility"])
        self.t += 1
        return rows

    def _accumulate(self, t: int, arrivals: dict[int, int], outcomes: dict[int, int], powers: dict[int, float]):
        queues = self.controller.queues
        for s, a in arrivals.items():
            self._total_arrivals[s] += a
            self._total_deliveries[s] += outcomes.get(s, 0)
            self._max_z[s] = max(self._max_z[s], queues.z[s])
        for i, p in powers.items():
            self._total_power[i] += p
        for i, x in queues.x.items():
            self._max_x[i] = max(self._max_x[i], x)
        if t < self.config.measured_from:
            return
        self._measured += 1
        for s, a in arrivals.items():
            self._arrivals[s] += a
            self._deliveries[s] += outcomes.get(s, 0)
            self._z_sum[s] += queues.z[s]
        for i, p in powers.items():
            self._power[i] += p
        for i, x in queues.x.items():
            self._x_sum[i] += x

    def metrics(self) -> Metrics:
        """Snapshot of the averages accumulated so far"""
        n = max(self._measured, 1)
        sources = self.config.source_ids
        arrival_rate = {s: self._arrivals[s] / n for s in sources}
        delivered = {s: self._deliveries[s] / n for s in sources}
        avg_power = {i: p / n for i, p in self._power.items()}
        objective = sum(self.params.alpha[s] * delivered[s] for s in sources) - sum(
            self.params.beta[i] * avg_power[i] for i in avg_power
        )
        queues = self.controller.queues
        return Metrics(
            v=self.config.v,
            seed=self.config.seed,
            slots=self.t,
            measured_slots=self._measured,
            arrival_rate=arrival_rate,
            delivered_fraction=delivered,
            reliability={
                s: self._deliveries[s] / self._arrivals[s] if self._arrivals[s] else 1.0 for s in sources
            },
            avg_power=avg_power,
            avg_z={s: z / n for s, z in self._z_sum.items()},
            avg_x={i: x / n for i, x in self._x_sum.items()},
            final_z=dict(queues.z),
            final_x=dict(queues.x),
            max_z=dict(self._max_z),
            max_x=dict(self._max_x),
            total_arrivals=dict(self._total_arrivals),
            total_deliveries=dict(self._total_deliveries),
            total_power=dict(self._total_power),
            mode_counts=dict(self._modes),
            objective=objective,
            trace=list(self.trace),
        )

    def run(self, show_progress: bool = False, console: Optional[Console] = None) -> Metrics:
        """
        Execute the remaining slots of the horizon

        Args:
            show_progress: Whether to show a progress bar
            console: Console the progress bar renders to

        Returns:
            Metrics over the measured window
        """
        remaining = self.config.slots - self.t
        logger.info(
            "running %d slots (V=%g, seed=%d, scheme=%s, access=%s, strategy=%s)",
            remaining, self.config.v, self.config.seed, self.config.scheme.value,
            self.config.access.value, self.config.strategy.value,
        )
        if show_progress:
            with Progress(
                SpinnerColumn(),
                TextColumn("[progress.description]{task.description}"),
                BarColumn(),
                TimeElapsedColumn(),
                console=console,
            ) as progress:
                task = progress.add_task(f"Simulating V={self.config.v:g}...", total=remaining)
                while self.t < self.config.slots:
                    self.run_slot()
                    if self.t % PROGRESS_EVERY == 0 or self.t == self.config.slots:
                        progress.update(task, completed=remaining - (self.config.slots - self.t))
        else:
            while self.t < self.config.slots:
                self.run_slot()
        return self.metrics()


def run(config: SimConfig, show_progress: bool = False, console: Optional[Console] = None) -> Metrics:
    return Simulation(config).run(show_progress=show_progress, console=console)
