import math

import numpy as np
import pytest

from energy import (Battery, BernoulliHarvest, CompoundPoissonHarvest, CorrelatedBernoulliHarvest, LinkEnergyConfig,
                    alphaFromAmplifier, amplifierXi, batteryStep, linkUnits, nextLevel, nodePowers, sampleArrivals,
                    transmitPowerForAction)
from exceptions import EnergyCausalityError, InvalidArgumentError


@pytest.fixture
def defaultEnergy():
    return LinkEnergyConfig(pOut=0.005, batteryTxMax=0.66, batteryRxMax=2.4)


def test_node_powers_follow_the_default_parameters(defaultEnergy):
    pTx, pRx = nodePowers(defaultEnergy)
    assert pTx == pytest.approx(0.11)
    assert pRx == pytest.approx(0.8)
    assert defaultEnergy.eMinTx == pytest.approx(0.0275)


def test_default_link_units(defaultEnergy):
    units = linkUnits(defaultEnergy, 3 * 0.11, 1.5 * 0.8)
    assert (units.txCapacity, units.txHarvest) == (24, 12)
    assert (units.rxCapacity, units.rxHarvest) == (96, 48)
    assert (units.samplingUnits, units.decodeUnits, units.feedbackUnits) == (1, 28, 0)
    assert units.fullReceptionUnits == 32


def test_packet_receiver_unit_rounds_costs_up():
    config = LinkEnergyConfig(pOut=0.005, batteryTxMax=0.66, batteryRxMax=2.4, rxEnergyUnit="packet")
    units = linkUnits(config, 0.33, 1.2)
    assert config.eMinRx == pytest.approx(0.2)
    assert units.rxCapacity == 12 and units.rxHarvest == 6
    assert units.samplingUnits == 1 and units.decodeUnits == 4


def test_full_packet_action_reproduces_configured_power(defaultEnergy):
    assert transmitPowerForAction(defaultEnergy.beta, defaultEnergy) == pytest.approx(0.005)
    assert transmitPowerForAction(1, defaultEnergy) == 0.0
    assert transmitPowerForAction(8, defaultEnergy) > 0.005


def test_beta_must_be_power_of_two():
    with pytest.raises(InvalidArgumentError):
        LinkEnergyConfig(pOut=0.005, batteryTxMax=1.0, batteryRxMax=1.0, beta=3)


def test_amplifier_overhead():
    assert amplifierXi(4) == pytest.approx(1.0)
    assert alphaFromAmplifier(4, 0.5) == pytest.approx(1.0)
    assert alphaFromAmplifier(2, 0.35) == pytest.approx(3 * (math.sqrt(2) - 1) / (math.sqrt(2) + 1) / 0.35 - 1)


def test_battery_update_caps_and_enforces_causality():
    assert nextLevel(3, 2, 4, 4) == 4
    assert nextLevel(3, 3, 0, 4) == 0
    with pytest.raises(EnergyCausalityError):
        nextLevel(2, 3, 4, 4)


def test_battery_step_accepts_flag_or_units():
    battery = Battery(2, 6, 3)
    assert batteryStep(battery, 1, True).level == 4
    assert batteryStep(battery, 1, False).level == 1
    assert batteryStep(battery, 0, 10).level == 6
    with pytest.raises(InvalidArgumentError):
        Battery(7, 6, 3)


def test_bernoulli_weights_and_frequencies():
    process = BernoulliHarvest(0.3, 0.7, 1.0, 2.0)
    weights = process.outcomeWeights(1.0)
    assert sum(weights) == pytest.approx(1.0)
    assert weights[3] == pytest.approx(0.21)
    rng = np.random.default_rng(5)
    draws = np.array([process.sample(rng, 1.0) for _ in range(100000)])
    assert np.mean(draws[:, 0] > 0) == pytest.approx(0.3, abs=0.006)
    assert np.mean(draws[:, 1] > 0) == pytest.approx(0.7, abs=0.006)


@pytest.mark.parametrize("process", [BernoulliHarvest(0.3, 0.7, 1.0, 2.0),
                                     CorrelatedBernoulliHarvest(0.4, 0.1, 0.2, 0.3, 1.0, 1.0)])
def test_joint_outcome_frequencies_match_weights(process):
    rng = np.random.default_rng(17)
    draws = np.array([process.sample(rng, 1.0) for _ in range(100000)])
    outcomes = 2 * (draws[:, 0] > 0) + (draws[:, 1] > 0)
    frequencies = np.bincount(outcomes, minlength=4) / len(outcomes)
    np.testing.assert_allclose(frequencies, process.outcomeWeights(1.0), atol=0.006)


def test_correlated_marginals_and_validation():
    process = CorrelatedBernoulliHarvest(0.4, 0.1, 0.2, 0.3, 1.0, 1.0)
    assert process.marginalRates(1.0) == pytest.approx((0.5, 0.4))
    with pytest.raises(InvalidArgumentError):
        CorrelatedBernoulliHarvest(0.4, 0.1, 0.2, 0.4, 1.0, 1.0)


def test_compound_poisson_arrival_probability_matches_rho():
    process = CompoundPoissonHarvest.fromRho(0.4, 1.0, 0.3, 0.6)
    assert process.marginalRates(1.0)[0] == pytest.approx(0.4)
    rng = np.random.default_rng(9)
    draws = np.array([process.sample(rng, 1.0) for _ in range(100000)])
    assert np.mean(draws[:, 0] > 0) == pytest.approx(0.4, abs=0.006)
    meanCount = process.intensity
    assert np.mean(draws[:, 1]) == pytest.approx(meanCount * 0.6, rel=0.02)


def test_compound_poisson_without_arrivals():
    process = CompoundPoissonHarvest.fromRho(0.0, 1.0, 0.3, 0.6)
    rng = np.random.default_rng(1)
    assert all(process.sample(rng, 1.0) == (0.0, 0.0) for _ in range(100))


def test_sampled_arrival_rates_match_probabilities():
    rng = np.random.default_rng(11)
    process = BernoulliHarvest(0.3, 0.7, 1.0, 2.0)
    draws = np.array([sampleArrivals(process, rng, 1.0) for _ in range(100000)])
    assert set(draws[:, 0]) <= {0.0, 1.0} and set(draws[:, 1]) <= {0.0, 2.0}
    assert np.mean(draws[:, 0] > 0) == pytest.approx(0.3, abs=0.006)
    assert np.mean(draws[:, 1] > 0) == pytest.approx(0.7, abs=0.006)
