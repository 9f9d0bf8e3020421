"""
Configuration management for coopsim
"""

import hashlib
import json
import logging
import os
import tomllib
from importlib import resources
from pathlib import Path
from typing import Any, Literal, Optional, Sequence

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .channel import CellGrid, FadingModel
from .engine import Access, RelaySpec, SimConfig, SourceSpec, Strategy
from .phy import LinkBudget, Scheme

logger = logging.getLogger(__name__)

DEFAULT_PRESET = "baseline"
PRESET_PACKAGE = "coopsim.presets"


class ConfigError(ValueError):
    """Malformed or unknown configuration"""


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class NetworkConfig(_Section):
    """Cell layout and node placement"""
    rows: int = Field(3, ge=1)
    cols: int = Field(3, ge=1)
    base_station_cell: int = 4
    source_cells: list[int] = Field(default_factory=lambda: [0])
    relay_cells: list[int] = Field(default_factory=list)
    stay_probability: float = Field(0.8, ge=0.0, le=1.0)
    relay_eligibility: Literal["same_cell", "adjacent"] = "same_cell"
    sources_as_relays: bool = False


class FadingConfig(_Section):
    """Mean |h|^2 per link class"""
    sr_mean: float = Field(1.0, gt=0)
    rd_mean: float = Field(1.0, gt=0)
    sd_mean: float = Field(1.0, gt=0)
    adjacent_sr_mean: float = Field(1.0, gt=0)
    adjacent_rd_mean: float = Field(1.0, gt=0)


class LinkConfig(_Section):
    bandwidth: float = Field(1.0, gt=0)
    rate: float = Field(1.0, gt=0)
    scheme: Scheme = Scheme.REG_DF_ORTHO


class ControlConfig(_Section):
    """Controller weights and constraints, shared by all sources and nodes"""
    v: float = Field(1.0, ge=0)
    lam: float = Field(0.5, ge=0, le=1)
    rho: float = Field(0.98, ge=0, le=1)
    alpha: float = Field(0.0, ge=0)
    beta: float = Field(1.0, ge=0)
    p_avg: float = Field(1.0, gt=0)
    p_max: float = Field(10.0, gt=0)
    strategy: Strategy = Strategy.OPTIMAL
    af_grid_points: int = Field(100, ge=1)
    af_refine: bool = False

    @model_validator(mode="after")
    def _power_order(self) -> "ControlConfig":
        if self.p_avg > self.p_max:
            raise ValueError(f"p_avg {self.p_avg} exceeds p_max {self.p_max}")
        return self


class SimulationConfig(_Section):
    slots: int = Field(500_000, ge=1)
    seed: int = 0
    burn_in: float = Field(0.5, ge=0, lt=1)
    access: Access = Access.ORTHOGONAL


class SweepConfig(_Section):
    v_values: list[float] = Field(default_factory=lambda: [1.0, 5.0, 10.0, 20.0, 50.0, 100.0])


class FeasibilityConfig(_Section):
    pairs: list[tuple[float, float]] = Field(default_factory=lambda: [
        (0.1, 0.9), (0.2, 0.9), (0.2, 0.95), (0.5, 0.95), (0.5, 0.98), (0.6, 0.98), (0.7, 0.99),
    ])
    strategies: list[Strategy] = Field(default_factory=lambda: [
        Strategy.DIRECT, Strategy.COOPERATIVE, Strategy.OPTIMAL,
    ])
    tol: float = Field(5e-3, ge=0)


class DpConfig(_Section):
    """Unknown-channels two-stage problem for one source"""
    relays: int = Field(2, ge=0, le=10)
    bins: int = Field(4, ge=1)
    z: float = Field(10.0, ge=0)
    x: float = Field(0.0, ge=0)
    p_s: Optional[float] = Field(None, ge=0)
    grid_points: int = Field(100, ge=1)
    second_stage_points: int = Field(50, ge=2)
    mc_samples: int = Field(10_000, ge=10_000)
    n_values: list[int] = Field(default_factory=lambda: [100, 1000, 10_000])
    epsilons: list[float] = Field(default_factory=lambda: [0.1, 0.5, 1.0])

    @model_validator(mode="after")
    def _positive_lists(self) -> "DpConfig":
        if any(n < 1 for n in self.n_values):
            raise ValueError("n_values must be positive")
        if any(e <= 0 for e in self.epsilons):
            raise ValueError("epsilons must be positive")
        return self


class ExperimentConfig(_Section):
    """Root of an experiment file"""
    network: NetworkConfig = Field(default_factory=NetworkConfig)
    fading: FadingConfig = Field(default_factory=FadingConfig)
    link: LinkConfig = Field(default_factory=LinkConfig)
    control: ControlConfig = Field(default_factory=ControlConfig)
    simulation: SimulationConfig = Field(default_factory=SimulationConfig)
    sweep: SweepConfig = Field(default_factory=SweepConfig)
    feasibility: FeasibilityConfig = Field(default_factory=FeasibilityConfig)
    dp: DpConfig = Field(default_factory=DpConfig)

    def config_hash(self) -> str:
        """Short digest of the canonical JSON form"""
        canonical = json.dumps(self.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()[:12]

    def to_toml(self) -> str:
        """Echo of the effective configuration"""
        lines = []
        for section, values in self.model_dump(mode="json").items():
            lines.append(f"[{section}]")
            for key, value in values.items():
                if value is not None:
                    lines.append(f"{key} = {_toml_value(value)}")
            lines.append("")
        return "\n".join(lines)

    def grid(self) -> CellGrid:
        net = self.network
        return CellGrid(rows=net.rows, cols=net.cols, base_station_cell=net.base_station_cell)

    def fading_model(self) -> FadingModel:
        return FadingModel(**self.fading.model_dump())

    def budget(self) -> LinkBudget:
        return LinkBudget(bandwidth=self.link.bandwidth, rate=self.link.rate)

    def sim_config(self, trace: bool = False) -> SimConfig:
        net, ctl, sim = self.network, self.control, self.simulation
        sources = tuple(
            SourceSpec(cell=c, lam=ctl.lam, rho=ctl.rho, alpha=ctl.alpha, beta=ctl.beta,
                       p_avg=ctl.p_avg, p_max=ctl.p_max)
            for c in net.source_cells
        )
        relays = tuple(RelaySpec(cell=c, beta=ctl.beta, p_avg=ctl.p_avg, p_max=ctl.p_max) for c in net.relay_cells)
        return SimConfig(
            sources=sources,
            relays=relays,
            grid=self.grid(),
            fading=self.fading_model(),
            scheme=self.link.scheme,
            budget=self.budget(),
            v=ctl.v,
            slots=sim.slots,
            seed=sim.seed,
            stay_probability=net.stay_probability,
            access=sim.access,
            strategy=ctl.strategy,
            include_adjacent=net.relay_eligibility == "adjacent",
            sources_as_relays=net.sources_as_relays,
            burn_in=sim.burn_in,
            af_grid_points=ctl.af_grid_points,
            af_refine=ctl.af_refine,
            trace=trace,
        )


def _toml_value(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_toml_value(v) for v in value) + "]"
    if isinstance(value, str):
        return json.dumps(value)
    return repr(value)


def parse_override(item: str) -> tuple[list[str], Any]:
    """
    Split a section.key=value override

    The value is read as a TOML literal; anything that does not parse is kept
    as a plain string.
    """
    dotted, sep, raw = item.partition("=")
    if not sep or not dotted.strip():
        raise ConfigError(f"override '{item}' must look like section.key=value")
    path = [part.strip() for part in dotted.split(".")]
    if len(path) != 2 or not all(path):
        raise ConfigError(f"override key '{dotted.strip()}' must be section.key")
    try:
        value = tomllib.loads(f"value = {raw.strip()}")["value"]
    except tomllib.TOMLDecodeError:
        value = raw.strip()
    return path, value


def apply_overrides(tree: dict, overrides: Sequence[str]) -> dict:
    """Apply --set overrides to a raw config tree, rejecting unknown keys"""
    for item in overrides:
        (section, key), value = parse_override(item)
        section_model = ExperimentConfig.model_fields.get(section)
        if section_model is None:
            raise ConfigError(f"unknown config key '{section}.{key}'")
        if key not in section_model.annotation.model_fields:
            raise ConfigError(f"unknown config key '{section}.{key}'")
        tree.setdefault(section, {})[key] = value
    return tree


def read_config_text(path_or_preset: str) -> str:
    """Contents of a config file or of a bundled preset"""
    path = Path(path_or_preset)
    if path.is_file():
        return path.read_text(encoding="utf-8")
    preset = resources.files(PRESET_PACKAGE) / f"{path_or_preset}.toml"
    if preset.is_file():
        return preset.read_text(encoding="utf-8")
    raise ConfigError(f"config '{path_or_preset}' is neither a file nor a bundled preset")


def preset_names() -> list[str]:
    return sorted(
        entry.name.removesuffix(".toml")
        for entry in resources.files(PRESET_PACKAGE).iterdir()
        if entry.name.endswith(".toml")
    )


def load_config(path: Optional[str] = None, overrides: Sequence[str] = ()) -> ExperimentConfig:
    """
    Load an experiment configuration

    Args:
        path: File path or preset name; defaults to $COOPSIM_CONFIG, then the
            baseline preset
        overrides: section.key=value strings applied before validation

    Returns:
        Validated ExperimentConfig

    Raises:
        ConfigError: Unreadable TOML, unknown keys or invalid values
    """
    load_dotenv()
    source = path or os.getenv("COOPSIM_CONFIG") or DEFAULT_PRESET
    try:
        tree = tomllib.loads(read_config_text(source))
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"{source}: {e}") from e
    tree = apply_overrides(tree, overrides)
    try:
        config = ExperimentConfig.model_validate(tree)
    except ValidationError as e:
        first = e.errors()[0]
        dotted = ".".join(str(part) for part in first["loc"])
        if first["type"] == "extra_forbidden":
            raise ConfigError(f"unknown config key '{dotted}'") from e
        raise ConfigError(f"invalid value for '{dotted}': {first['msg']}") from e

    try:
        grid = config.grid()
    except ValueError as e:
        raise ConfigError(f"invalid 'network': {e}") from e
    for cell in (*config.network.source_cells, *config.network.relay_cells):
        if not grid.contains(cell):
            raise ConfigError(f"cell {cell} in 'network' lies outside the {grid.rows}x{grid.cols} grid")
    if not config.network.source_cells:
        raise ConfigError("'network.source_cells' must list at least one source")
    logger.debug("loaded config %s (hash %s)", source, config.config_hash())
    return config
