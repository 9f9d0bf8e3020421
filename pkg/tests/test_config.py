import tomllib

import pytest

from coopsim.config import (
    ConfigError,
    ExperimentConfig,
    apply_overrides,
    load_config,
    parse_override,
    preset_names,
)
from coopsim.engine import Access, Strategy
from coopsim.phy import Scheme


@pytest.fixture(autouse=True)
def isolated_env(monkeypatch, tmp_path):
    """Keep a stray .env or COOPSIM_CONFIG out of the tests"""
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv("COOPSIM_CONFIG", raising=False)


def test_default_is_baseline_preset():
    config = load_config()
    assert (config.network.rows, config.network.cols) == (2, 2)
    assert config.network.source_cells == [0, 1, 2]
    assert len(config.network.relay_cells) == 7
    assert (config.link.rate, config.link.bandwidth) == (0.8, 0.54)
    assert config.control.v == 50.0
    assert config.simulation.access is Access.ORTHOGONAL


def test_env_selects_preset(monkeypatch):
    monkeypatch.setenv("COOPSIM_CONFIG", "dp-small")
    assert load_config().dp.relays == 2


def test_presets_listed():
    assert preset_names() == ["baseline", "baseline-feasibility", "dp-small"]


def test_feasibility_preset():
    config = load_config("baseline-feasibility")
    assert config.control.alpha == 0.0 and config.control.beta == 0.0
    assert len(config.feasibility.pairs) == 7
    assert config.feasibility.strategies == [Strategy.DIRECT, Strategy.COOPERATIVE, Strategy.OPTIMAL]
    assert config.feasibility.tol == pytest.approx(0.005)


def test_load_from_file(tmp_path):
    path = tmp_path / "exp.toml"
    path.write_text('[link]\nscheme = "af-dstc"\n\n[network]\nsource_cells = [4]\n')
    config = load_config(str(path))
    assert config.link.scheme is Scheme.AF_DSTC
    assert config.network.source_cells == [4]
    assert config.control.v == 1.0


def test_overrides_are_typed():
    config = load_config("baseline", ["control.v=7", "simulation.access=random", "sweep.v_values=[1, 2]"])
    assert config.control.v == 7.0
    assert config.simulation.access is Access.RANDOM
    assert config.sweep.v_values == [1.0, 2.0]


@pytest.mark.parametrize("override", ["control.vv=1", "nosuch.v=1"])
def test_unknown_override_key(override):
    with pytest.raises(ConfigError, match="unknown config key"):
        load_config("baseline", [override])


def test_unknown_key_in_file(tmp_path):
    path = tmp_path / "bad.toml"
    path.write_text("[control]\nbogus = 1\n")
    with pytest.raises(ConfigError, match="unknown config key 'control.bogus'"):
        load_config(str(path))


@pytest.mark.parametrize(
    "override",
    ["control.p_avg=20", "control.rho=1.5", "dp.mc_samples=10", "simulation.slots=0", "link.scheme=bogus"],
)
def test_invalid_values(override):
    with pytest.raises(ConfigError):
        load_config("baseline", [override])


def test_cell_outside_grid():
    with pytest.raises(ConfigError, match="outside"):
        load_config("baseline", ["network.relay_cells=[9]"])


def test_base_station_outside_grid():
    with pytest.raises(ConfigError, match="network"):
        load_config("baseline", ["network.base_station_cell=7"])


def test_missing_config():
    with pytest.raises(ConfigError):
        load_config("no-such-preset")


def test_broken_toml(tmp_path):
    path = tmp_path / "broken.toml"
    path.write_text("[control\n")
    with pytest.raises(ConfigError):
        load_config(str(path))


@pytest.mark.parametrize("item", ["control.v", "v=1", "a.b.c=1", ".v=1"])
def test_parse_override_rejects_malformed(item):
    with pytest.raises(ConfigError):
        parse_override(item)


def test_parse_override_keeps_bare_strings():
    assert parse_override("link.scheme=af-ortho") == (["link", "scheme"], "af-ortho")
    assert parse_override("control.af_refine=true") == (["control", "af_refine"], True)


def test_apply_overrides_creates_sections():
    tree = apply_overrides({}, ["dp.z=3.5"])
    assert tree == {"dp": {"z": 3.5}}


def test_config_hash_is_stable_and_sensitive():
    a = load_config("baseline")
    b = load_config("baseline")
    c = load_config("baseline", ["control.v=51"])
    assert a.config_hash() == b.config_hash()
    assert a.config_hash() != c.config_hash()
    assert len(a.config_hash()) == 12


def test_echo_reloads_to_same_config():
    config = load_config("baseline-feasibility", ["dp.p_s=2.0"])
    echoed = ExperimentConfig.model_validate(tomllib.loads(config.to_toml()))
    assert echoed.config_hash() == config.config_hash()


def test_sim_config_mapping():
    config = load_config("baseline", ["network.relay_eligibility=\"adjacent\"", "simulation.slots=10"])
    sim = config.sim_config(trace=True)
    assert len(sim.sources) == 3
    assert sim.relay_ids == [3, 4, 5, 6, 7, 8, 9]
    assert sim.include_adjacent
    assert sim.trace
    assert sim.slots == 10
    assert sim.v == 50.0
    assert sim.params().p_max[9] == 10.0
