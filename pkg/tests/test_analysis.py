import numpy as np
import pytest

from analysis import (AnalysisModel, FullChainState, analyzeLink, averagePdp, boundAveragePdp, boundDrops, buildXi,
                      batteryMarginal, chainAveragePdp, feedbackIndex, frameOutcomes, pSucK, slotOutcomes, stationaryPsi,
                      successProbabilities)
from config import SimConfig
from exceptions import InvalidArgumentError
from experiments import experimentSpec
from protocol import Feedback
from simulation import LinkSimulator, resolveConfig


def perpetualConfig(tinyConfig, maxAttempts):
    # transmitter and receiver batteries refill to full after every attempt
    return tinyConfig.withOverrides(maxRetransmissions=maxAttempts, harvestTxRatio=2.0, harvestRxRatio=1.5).withRho(1.0)


@pytest.mark.parametrize("maxAttempts", [1, 2, 3, 4])
@pytest.mark.parametrize("pep", [0.1, 0.5, 0.9])
def test_perpetual_harvesting_drops_with_p_to_the_k(tinyConfig, tinyPep, maxAttempts, pep):
    model = AnalysisModel.fromConfig(perpetualConfig(tinyConfig, maxAttempts), tinyPep(pep))
    assert averagePdp(model, "chain") == pytest.approx(pep ** maxAttempts, abs=1e-12)
    assert averagePdp(model, "bound") == pytest.approx(pep ** maxAttempts, abs=1e-12)


def test_rows_are_stochastic_across_feedback_states(tinyConfig, tinyPep):
    for rho in (0.0, 0.3, 1.0):
        model = AnalysisModel.fromConfig(tinyConfig.withRho(rho), tinyPep(0.2))
        for g in range(2):
            xi = buildXi(model, g)
            np.testing.assert_allclose(np.asarray(xi.matrix.sum(axis=1)).ravel(), 1.0, atol=1e-9)
            assert xi.matrix.shape == (model.numStates, model.numStates)


def test_idle_transmitter_keeps_batteries_and_feedback(tinyConfig, tinyPep):
    model = AnalysisModel.fromConfig(tinyConfig.withRho(0.0), tinyPep(0.2))
    outcomes = slotOutcomes(model, 0, 3, feedbackIndex(Feedback.nakx(1)), 1, 0)
    assert len(outcomes) == 1
    probability, q, r, w, y, outcome = outcomes[0]
    assert (probability, q, r, w, y, outcome) == (1.0, 0, 3, feedbackIndex(Feedback.nakx(1)), 2, "continue")


def test_literal_case_three_keeps_transmitter_harvest(tinyConfig, tinyPep):
    config = tinyConfig.withOverrides(harvestModel="correlated", p00=0.0, p01=1.0, p10=0.0, p11=0.0, caseIiiLiteral=True)
    model = AnalysisModel.fromConfig(config, tinyPep(0.0))
    outcomes = slotOutcomes(model, 4, 4, 0, 1, 0)
    delivered = [o for o in outcomes if o[5] == "delivered"]
    assert delivered and delivered[0][1] == 4
    plain = AnalysisModel.fromConfig(config.withOverrides(caseIiiLiteral=False), tinyPep(0.0))
    assert [o for o in slotOutcomes(plain, 4, 4, 0, 1, 0) if o[5] == "delivered"][0][1] == 2


def test_certain_decoding_failure_drops_everything(tinyConfig, tinyPep):
    model = AnalysisModel.fromConfig(perpetualConfig(tinyConfig, 3), tinyPep(1.0))
    assert averagePdp(model, "chain") == pytest.approx(1.0)
    assert averagePdp(model, "bound") == pytest.approx(1.0)


def test_bound_without_energy_never_succeeds(tinyConfig, tinyPep):
    model = AnalysisModel.fromConfig(tinyConfig.withRho(0.0), tinyPep(0.2))
    np.testing.assert_allclose(successProbabilities(model, 0, 0, 0), 0.0)
    assert pSucK(1, FullChainState(0, 0, 0, Feedback.nakx(0), 1), model) == 0.0


def test_success_probabilities_follow_cumulative_recursion(tinyConfig, tinyPep):
    model = AnalysisModel.fromConfig(perpetualConfig(tinyConfig, 3), tinyPep(0.4))
    np.testing.assert_allclose(successProbabilities(model, 4, 4, 1), [0.6, 0.24, 0.096])


def test_report_and_modes(tinyConfig, tinyPep):
    model = AnalysisModel.fromConfig(tinyConfig, tinyPep(0.3))
    report = analyzeLink(model)
    assert 0.0 <= report.chainPdp <= 1.0 and 0.0 <= report.boundPdp <= 1.0
    assert report.psi.sum() == pytest.approx(1.0)
    assert report.frameStart.sum() == pytest.approx(1.0)
    assert report.chainPdp == pytest.approx(chainAveragePdp(model)[0])
    assert report.boundPdp == pytest.approx(boundAveragePdp(model)[0])
    assert len(report.pairTable(model)) == model.numPairs
    with pytest.raises(InvalidArgumentError):
        averagePdp(model, "exact")


def test_poisson_harvesting_is_rejected(tinyConfig):
    with pytest.raises(InvalidArgumentError):
        AnalysisModel.fromConfig(tinyConfig.withOverrides(harvestModel="poisson"))


def test_chain_matches_simulated_drop_probability(tinyConfig, tinyPep):
    config = tinyConfig.withOverrides(frames=20000)
    pep = tinyPep(0.3)
    analytical = averagePdp(AnalysisModel.fromConfig(config, pep), "chain")
    simulated = LinkSimulator(config, pep).runTrial(7).pdp
    assert simulated == pytest.approx(analytical, abs=0.015)


def test_psi_is_stationary_for_the_battery_kernel(tinyConfig, tinyPep):
    model = AnalysisModel.fromConfig(tinyConfig, tinyPep(0.3))
    marginal = batteryMarginal(model, [buildXi(model, g) for g in range(2)])
    psi = stationaryPsi(marginal)
    assert psi.sum() == pytest.approx(1.0)
    np.testing.assert_allclose(marginal.T @ psi, psi, atol=1e-9)


def reducedConfig(policyName, rho):
    return resolveConfig(experimentSpec("fig6").configFor(SimConfig()).withOverrides(policy=policyName)).withRho(rho)


def exactFrameDrops(model):
    return np.vstack([frameOutcomes(model, buildXi(model, g))[0] for g in range(model.channel.numStates)])


@pytest.mark.parametrize("rho", [0.1, 0.5, 0.9])
@pytest.mark.parametrize("pep", [0.05, 0.3])
def test_pessimistic_drop_dominates_every_frame_start(tinyConfig, tinyPep, rho, pep):
    model = AnalysisModel.fromConfig(tinyConfig.withRho(rho), tinyPep(pep))
    assert np.all(boundDrops(model) >= exactFrameDrops(model) - 1e-9)


@pytest.mark.parametrize("rho", [0.1, 0.5, 0.9])
def test_bound_sits_above_chain(tinyConfig, tinyPep, rho):
    model = AnalysisModel.fromConfig(tinyConfig.withRho(rho), tinyPep(0.3))
    assert averagePdp(model, "bound") >= averagePdp(model, "chain") - 1e-9


@pytest.mark.parametrize("policyName", ["equal:5", "equal:15"])
@pytest.mark.parametrize("rho", [0.1, 0.5, 0.9])
def test_bound_sits_above_chain_on_reduced_link(policyName, rho):
    model = AnalysisModel.fromConfig(reducedConfig(policyName, rho))
    report = analyzeLink(model)
    assert report.boundPdp >= report.chainPdp - 1e-9
    assert np.all(boundDrops(model) >= exactFrameDrops(model) - 1e-9)


def test_bound_never_rises_with_rho(tinyConfig, tinyPep):
    values = [averagePdp(AnalysisModel.fromConfig(tinyConfig.withRho(rho), tinyPep(0.3)), "bound") for rho in (0.1, 0.3, 0.5, 0.7, 0.9)]
    assert all(later <= earlier + 1e-9 for earlier, later in zip(values, values[1:]))
    drops = [boundDrops(AnalysisModel.fromConfig(tinyConfig.withRho(rho), tinyPep(0.3))) for rho in (0.1, 0.5, 0.9)]
    assert np.all(drops[1] <= drops[0] + 1e-12) and np.all(drops[2] <= drops[1] + 1e-12)


def test_chain_never_rises_with_rho_on_reduced_link():
    values = [averagePdp(AnalysisModel.fromConfig(reducedConfig("equal:5", rho)), "chain") for rho in (0.1, 0.3, 0.5, 0.7, 0.9)]
    assert all(later <= earlier + 1e-9 for earlier, later in zip(values, values[1:]))
    assert values[-1] < values[0]


def test_chain_never_rises_with_more_attempts(tinyConfig, tinyPep):
    values = [averagePdp(AnalysisModel.fromConfig(tinyConfig.withOverrides(maxRetransmissions=k), tinyPep(0.3)), "chain")
              for k in (1, 2, 3)]
    assert values[0] > values[1] >= values[2] - 1e-9


def test_chain_matches_simulation_on_reduced_link():
    config = reducedConfig("equal:5", 0.5).withOverrides(frames=30000)
    analytical = averagePdp(AnalysisModel.fromConfig(config), "chain")
    simulated = LinkSimulator(config).runTrial(11).pdp
    assert simulated == pytest.approx(analytical, abs=0.01)
