"""
Cell-partitioned mobility and Rayleigh block fading
"""

import logging
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CellGrid:
    """Rectangular grid of cells, indexed row-major"""
    rows: int = 3
    cols: int = 3
    base_station_cell: int = 4

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError(f"grid must have positive size, got {self.rows}x{self.cols}")
        if not self.contains(self.base_station_cell):
            raise ValueError(f"base station cell {self.base_station_cell} is outside the grid")

    @property
    def size(self) -> int:
        return self.rows * self.cols

    def contains(self, cell: int) -> bool:
        return 0 <= cell < self.rows * self.cols

    def neighbors(self, cell: int) -> list[int]:
        """4-neighbour cells, no wraparound, in ascending order"""
        if not self.contains(cell):
            raise ValueError(f"cell {cell} is outside the {self.rows}x{self.cols} grid")
        row, col = divmod(cell, self.cols)
        result = []
        if row > 0:
            result.append(cell - self.cols)
        if col > 0:
            result.append(cell - 1)
        if col < self.cols - 1:
            result.append(cell + 1)
        if row < self.rows - 1:
            result.append(cell + self.cols)
        return result


@dataclass(frozen=True)
class MobilityModel:
    """Markov random walk state for the mobile relays"""
    stay_probability: float
    positions: dict[int, int] = field(default_factory=dict)

    def __post_init__(self):
        if not 0.0 <= self.stay_probability <= 1.0:
            raise ValueError(f"stay_probability must be in [0, 1], got {self.stay_probability}")


@dataclass(frozen=True)
class FadingModel:
    """Mean |h|^2 per link class (noise-normalized)"""
    sr_mean: float = 1.0
    rd_mean: float = 1.0
    sd_mean: float = 1.0
    # relays in a neighbouring cell of the source
    adjacent_sr_mean: float = 1.0
    adjacent_rd_mean: float = 1.0

    def __post_init__(self):
        for name in ("sr_mean", "rd_mean", "sd_mean", "adjacent_sr_mean", "adjacent_rd_mean"):
            if getattr(self, name) <= 0:
                raise ValueError(f"fading {name} must be positive")


@dataclass(frozen=True)
class ChannelState:
    """Channel observation T(t) for one source in one slot"""
    slot: int
    source: int
    sd_gain: float
    available_relays: frozenset[int] = frozenset()
    sr_gains: dict[int, float] = field(default_factory=dict)
    rd_gains: dict[int, float] = field(default_factory=dict)

    def __post_init__(self):
        if set(self.sr_gains) != set(self.available_relays) or set(self.rd_gains) != set(self.available_relays):
            raise ValueError("gains must be present exactly for the available relays")
        if self.sd_gain < 0 or any(g < 0 for g in self.sr_gains.values()) or any(
            g < 0 for g in self.rd_gains.values()
        ):
            raise ValueError("gain-squared values must be nonnegative")

    @property
    def relays(self) -> list[int]:
        """Available relays in ascending id order"""
        return sorted(self.available_relays)

    def without_relays(self, excluded: Iterable[int]) -> "ChannelState":
        excluded = set(excluded)
        keep = frozenset(self.available_relays - excluded)
        return ChannelState(
            slot=self.slot,
            source=self.source,
            sd_gain=self.sd_gain,
            available_relays=keep,
            sr_gains={i: g for i, g in self.sr_gains.items() if i in keep},
            rd_gains={i: g for i, g in self.rd_gains.items() if i in keep},
        )


def step_mobility(
    model: MobilityModel,
    grid: CellGrid,
    rng: np.random.Generator,
) -> MobilityModel:
    """
    Advance every node one step of the random walk

    Args:
        model: Current positions and stay probability
        grid: Cell topology
        rng: Seeded random source

    Returns:
        New MobilityModel; each node stays with stay_probability, otherwise
        moves to a uniformly chosen adjacent cell
    """
    positions = {}
    for node in sorted(model.positions):
        cell = model.positions[node]
        if not grid.contains(cell):
            raise ValueError(f"node {node} sits in cell {cell} outside the grid")
        # both variates are drawn every time; stream position is independent of outcomes
        stay_draw = rng.random()
        move_draw = rng.random()
        adjacent = grid.neighbors(cell)
        if stay_draw < model.stay_probability or not adjacent:
            positions[node] = cell
        else:
            positions[node] = adjacent[int(move_draw * len(adjacent))]
    return MobilityModel(stay_probability=model.stay_probability, positions=positions)


def relay_set(
    mobility: MobilityModel,
    source_cell: int,
    exclude: Iterable[int] = (),
    grid: Optional[CellGrid] = None,
    include_adjacent: bool = False,
) -> set[int]:
    """
    Relays eligible to help a source

    Args:
        mobility: Relay positions
        source_cell: Cell of the transmitting source
        exclude: Node ids that may not relay (the source itself, busy nodes)
        grid: Required when include_adjacent is set
        include_adjacent: Also admit relays in 4-neighbour cells

    Returns:
        Set of eligible relay ids
    """
    cells = {source_cell}
    if include_adjacent:
        if grid is None:
            raise ValueError("adjacent-cell eligibility needs the cell grid")
        cells.update(grid.neighbors(source_cell))
    excluded = set(exclude)
    return {
        node for node, cell in mobility.positions.items()
        if cell in cells and node not in excluded
    }


def sample_channel_state(
    source_cell: int,
    mobility: MobilityModel,
    fading: FadingModel,
    rng: np.random.Generator,
    *,
    slot: int = 0,
    source: int = 0,
    grid: Optional[CellGrid] = None,
    include_adjacent: bool = False,
    exclude: Iterable[int] = (),
) -> ChannelState:
    """
    Draw the per-slot channel state for one source

    Args:
        source_cell: Cell of the transmitting source
        mobility: Relay positions this slot
        fading: Exponential means per link class
        rng: Seeded random source
        slot: Slot index recorded in the state
        source: Id of the transmitting source
        grid: Cell topology, needed for adjacent-cell eligibility
        include_adjacent: Admit relays from neighbouring cells
        exclude: Node ids that may not relay this slot

    Returns:
        ChannelState with independent exponential |h|^2 on every active link
    """
    relays = sorted(
        relay_set(mobility, source_cell, exclude=set(exclude) | {source},
                  grid=grid, include_adjacent=include_adjacent)
    )
    sd_gain = float(rng.exponential(fading.sd_mean))
    sr_gains = {}
    rd_gains = {}
    for node in relays:
        same_cell = mobility.positions[node] == source_cell
        sr_mean = fading.sr_mean if same_cell else fading.adjacent_sr_mean
        rd_mean = fading.rd_mean if same_cell else fading.adjacent_rd_mean
        sr_gains[node] = float(rng.exponential(sr_mean))
        rd_gains[node] = float(rng.exponential(rd_mean))
    logger.debug("slot %d source %d: %d relays available", slot, source, len(relays))
    return ChannelState(
        slot=slot,
        source=source,
        sd_gain=sd_gain,
        available_relays=frozenset(relays),
        sr_gains=sr_gains,
        rd_gains=rd_gains,
    )
