import os

import pytest

from config import SimConfig, emitConfig, parseConfig, parseConfigText, writeConfig
from energy import CompoundPoissonHarvest, CorrelatedBernoulliHarvest
from exceptions import ConfigError


def test_empty_file_gives_defaults():
    config = parseConfigText("")
    assert config == SimConfig()
    assert (config.maxRetransmissions, config.beta, config.numChannelStates, config.noisePowerMw) == (4, 4, 3, 5.0)
    assert (config.horizonSlots, config.frames) == (150, 100000)


def test_beta_must_be_power_of_two():
    with pytest.raises(ConfigError) as error:
        parseConfigText("# header\nbeta = 3\n", "c.cfg")
    assert error.value.lineNumber == 2
    assert "c.cfg:2" in str(error.value)


def test_rho_range_is_checked():
    with pytest.raises(ConfigError, match="rho"):
        parseConfigText("rho = 1.2")


def test_unknown_key_and_malformed_line():
    with pytest.raises(ConfigError, match="unknown key"):
        parseConfigText("spreading_factor = 7")
    with pytest.raises(ConfigError):
        parseConfigText("beta 4")
    with pytest.raises(ConfigError):
        parseConfigText("frames = many")


def test_missing_file_is_a_config_error(tmp_path):
    with pytest.raises(ConfigError):
        parseConfig(str(tmp_path / "absent.cfg"))


def test_rho_sets_both_nodes():
    config = parseConfigText("rho = 0.3\nharvest_model = bernoulli")
    assert config.rhoTx == 0.3 and config.rhoRx == 0.3


def test_emit_then_parse_round_trip(tmp_path):
    config = SimConfig(beta=8, policy="equal:15", rhoGrid=(0.2, 0.4), channelPerFrame=True, pOutMw=7.5,
                       transitionMatrix=((0.9, 0.1, 0.0), (0.05, 0.9, 0.05), (0.0, 0.1, 0.9)))
    assert parseConfigText(emitConfig(config)) == config
    path = tmp_path / "out.cfg"
    writeConfig(config, str(path))
    assert parseConfig(str(path)) == config


def test_cross_field_checks():
    with pytest.raises(ConfigError):
        SimConfig(harvestModel="correlated", p00=0.5, p01=0.5, p10=0.5, p11=0.0)
    with pytest.raises(ConfigError):
        SimConfig(numChannelStates=2, transitionMatrix=((1.0,),))


def test_derived_models(tinyConfig):
    units = tinyConfig.units()
    assert (units.txCapacity, units.txHarvest, units.rxCapacity, units.rxHarvest) == (4, 3, 4, 2)
    assert (units.samplingUnits, units.decodeUnits) == (1, 2)
    assert tinyConfig.channelModel().numStates == 2
    assert tinyConfig.pepTable().matrix.shape == (2, 5)
    assert tinyConfig.effectiveMaxSlots == 20 * 2 * 2000


def test_harvest_models_and_rho_override():
    correlated = SimConfig(harvestModel="correlated").withRho(0.3)
    process = correlated.harvestProcess()
    assert isinstance(process, CorrelatedBernoulliHarvest)
    assert process.marginalRates(1.0) == pytest.approx((0.3, 0.3))
    poisson = SimConfig(harvestModel="poisson").withRho(0.6).harvestProcess()
    assert isinstance(poisson, CompoundPoissonHarvest)
    assert poisson.marginalRates(1.0)[0] == pytest.approx(0.6)


def test_packaged_parameter_files_parse():
    folder = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "customParameters")
    assert parseConfig(os.path.join(folder, "table3.cfg")) == SimConfig()
    reduced = parseConfig(os.path.join(folder, "fig6_reduced.cfg"))
    assert reduced.channelPerFrame and reduced.policy == "equal:5"
    assert reduced.frames == SimConfig().frames
