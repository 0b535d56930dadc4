# # -----------------------------------------------------------------------------
# # Monte Carlo simulation of the energy harvesting retransmission link
# # Author: ehlink developers
# # Date Created: 18-10-2026
# # -----------------------------------------------------------------------------

import functools
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
import pandas as pd

from evaluation import Evaluation
from exceptions import EhLinkError, InvalidArgumentError, TrialError
from energy import nextLevel, sampleArrivals
from packetError import PepTable
from policy import (BeliefTracker, EqualPowerPolicy, GreedyPolicy, MlphPolicy, buildMdp, quantizeAndTabulate,
                    relativeValueIteration)
from protocol import DELIVERED, DROPPED, WAITING, RxSampleStore, TxFrameState, receiverStep, transmitterStep

SCHEMES = ("ACK/NAK", "ACK/NAKx")


@dataclass(frozen=True)
class Metrics:
    avgPacketTime: float
    pdp: float
    spectralEfficiency: float
    avgCost: float
    slotCount: int
    frameCount: int
    delivered: int
    dropped: int
    # slots of completed frames from their first transmission on; each one uses a retransmission index
    frameSlotTotal: int
    waitingSlots: int = 0
    longestFrame: int = 0

    # result file metric name -> field
    FIELDS = {"avg_packet_time": "avgPacketTime", "pdp": "pdp", "spectral_efficiency": "spectralEfficiency", "avg_cost": "avgCost"}

    def value(self, name):
        return getattr(self, self.FIELDS.get(name, name))


def schemeLabel(beta):
    return SCHEMES[0] if beta == 1 else SCHEMES[1]


def resolveConfig(config):
    # the equal power policy fixes the transmit power it is named after
    kind, power = config.policyKind
    if kind == "equal" and power != config.pOutMw:
        return config.withOverrides(pOutMw=power)
    return config


#################################
### MLPH SOLUTION ###############
#################################

def solveMdpForConfig(config, channel=None, pepTable=None, units=None):
    channel = channel or config.channelModel()
    units = units or config.units()
    pepTable = pepTable or config.pepTable(channel)
    rhoTx, rhoRx = config.harvestProcess().marginalRates(config.slotS)
    mdp = buildMdp(units, channel, pepTable, config.maxRetransmissions, rhoTx, rhoRx, config.costMode, config.outageCost, config.stateCap)
    return relativeValueIteration(mdp, config.viTolerance, config.viMaxIterations, config.viAperiodicity)


@functools.lru_cache(maxsize=32)
def cachedSolution(config):
    return solveMdpForConfig(config)


def solvePolicyTable(config, rhoGrid=None):
    # MLPH decisions for every harvesting probability of the grid
    rhoGrid = tuple(rhoGrid or config.rhoGrid)
    results = []
    for rho in rhoGrid:
        logging.info(f"Solving the MDP for rho = {rho:g}.")
        results.append(cachedSolution(config.withRho(rho)))
    return quantizeAndTabulate(results, config.kappa, rhoGrid), results


#################################
### SIMULATOR ###################
#################################

class LinkSimulator:
    def __init__(self, config, pepTable=None, policy=None):
        # SETTINGS
        self.config = resolveConfig(config)
        self.channel = self.config.channelModel()
        self.harvest = self.config.harvestProcess()
        self.units = self.config.units()
        self.pepTable = pepTable or PepTable.build(self.config.codeSpec(), self.channel, self.config.energyConfig(), self.units.txCapacity)
        if self.pepTable.numStates != self.channel.numStates:
            raise InvalidArgumentError(f"PEP table covers {self.pepTable.numStates} channel states, channel has {self.channel.numStates}")
        self.rhoTx, self.rhoRx = self.harvest.marginalRates(self.config.slotS)
        self.policy = policy or self.buildPolicy()

    def buildPolicy(self):
        kind, power = self.config.policyKind
        if kind == "greedy":
            return GreedyPolicy(self.pepTable, self.config.outageCost)
        if kind == "equal":
            return EqualPowerPolicy(self.units.beta, power)
        solution = solveMdpForConfig(self.config, self.channel, self.pepTable, self.units)
        return MlphPolicy(solution)

    def slotCost(self, action, errorProbability):
        if action == 0:
            return self.config.outageCost
        if self.config.costMode == "nak_weighted":
            return self.rhoRx * errorProbability
        return errorProbability

    def runTrial(self, seed):
        return self.simulate(seed)[0]

    def runTrialWithTrace(self, seed):
        metrics, rows = self.simulate(seed, trace=True)
        return metrics, pd.DataFrame(rows)

    def simulate(self, seed, trace=False):
        """
        Runs one trial until the configured number of frames and the horizon are both
        reached, or the slot limit stops it.

        Returns (Metrics, trace rows); the rows list is empty unless trace is set.
        """
        config, units, channel = self.config, self.units, self.channel
        channelRng, harvestRng, decodeRng = [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(3)]

        txLevel = units.txCapacity if config.initialBattery == "full" else 0
        rxLevel = units.rxCapacity if config.initialBattery == "full" else 0
        channelState = channel.initialState(channelRng)
        frame = TxFrameState(config.maxRetransmissions, units.beta)
        store = RxSampleStore()
        tracker = BeliefTracker(channel, self.pepTable, self.rhoRx)

        delivered = dropped = frameLength = frameSlotTotal = waitingSlots = longestFrame = 0
        horizonDelivered = horizonCompleted = None
        costTotal = 0.0
        slot = 0
        rows = []
        maxSlots = config.effectiveMaxSlots
        while slot < maxSlots and (delivered + dropped < config.frames or slot < config.horizonSlots):
            slot += 1
            try:
                txEnergy, rxEnergy = sampleArrivals(self.harvest, harvestRng, config.slotS)
                txHarvest, rxHarvest = units.harvestUnits(txEnergy, rxEnergy)
                retransIndex, pending = frame.retransIndex, frame.pendingUnits
                action = self.policy.chooseAction(tracker.belief, txLevel, retransIndex, pending)
                transmission = transmitterStep(frame, txLevel, action)
                if not config.channelPerFrame:
                    channelState = channel.step(channelState, channelRng)
                errorProbability = self.pepTable.value(channelState, action)
                if transmission.transmitted:
                    feedback, rxSpent = receiverStep(store, transmission.sentUnits, rxLevel, units, errorProbability, decodeRng)
                else:
                    feedback, rxSpent = frame.lastFeedback, 0
                txLevel = nextLevel(txLevel, transmission.spent, txHarvest, units.txCapacity)
                rxLevel = nextLevel(rxLevel, rxSpent, rxHarvest, units.rxCapacity)
                tracker.observe(feedback, action if transmission.transmitted else 0, predict=not config.channelPerFrame)
                outcome = frame.applyFeedback(feedback, fresh=transmission.transmitted)
            except EhLinkError as e:
                snapshot = {"txLevel": txLevel, "rxLevel": rxLevel, "channelState": channelState, "k": frame.retransIndex,
                            "lastFeedback": frame.lastFeedback.label, "stored": store.storedUnits}
                raise TrialError(str(e), slot, snapshot) from e

            costTotal += self.slotCost(action, errorProbability)
            if outcome == WAITING:
                waitingSlots += 1
            else:
                frameLength += 1
            if outcome in (DELIVERED, DROPPED):
                if outcome == DELIVERED:
                    delivered += 1
                else:
                    dropped += 1
                    store.clear()
                frameSlotTotal += frameLength
                longestFrame = max(longestFrame, frameLength)
                frameLength = 0
                if config.channelPerFrame:
                    channelState = channel.step(channelState, channelRng)
                    predicted = tracker.belief @ channel.transitionMatrix
                    tracker.belief = predicted / predicted.sum()
            if slot == config.horizonSlots:
                horizonDelivered, horizonCompleted = delivered, delivered + dropped
            if trace:
                rows.append({"slot": slot, "channel_state": channelState, "k": retransIndex, "pending": pending, "action": action,
                             "transmitted": transmission.transmitted,
                             "tx_spent": transmission.spent, "rx_spent": rxSpent, "tx_harvest": txHarvest, "rx_harvest": rxHarvest,
                             "tx_level": txLevel, "rx_level": rxLevel, "feedback": feedback.label, "outcome": outcome})

        if horizonCompleted is None:
            horizonDelivered, horizonCompleted = delivered, delivered + dropped
        completed = delivered + dropped
        metrics = Metrics(
            avgPacketTime=frameSlotTotal / delivered if delivered else math.inf,
            pdp=dropped / completed if completed else 1.0,
            spectralEfficiency=horizonDelivered / horizonCompleted if horizonCompleted else 0.0,
            avgCost=costTotal / slot if slot else 0.0,
            slotCount=slot,
            frameCount=completed,
            delivered=delivered,
            dropped=dropped,
            frameSlotTotal=frameSlotTotal,
            waitingSlots=waitingSlots,
            longestFrame=longestFrame,
        )
        if completed < config.frames:
            logging.warning(f"Trial with seed {seed} stopped at slot {slot} after {completed} of {config.frames} frames.")
        logging.debug(f"Trial seed {seed}: {metrics}")
        return metrics, rows


def runTrial(config, seed, pepTable=None):
    return LinkSimulator(config, pepTable).runTrial(seed)


#################################
### REPLICATIONS ################
#################################

def runReplications(simulator, seeds, workers=1):
    if workers <= 1 or len(seeds) <= 1:
        return [simulator.runTrial(seed) for seed in seeds]
    with ProcessPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(simulator.runTrial, seeds))


def replicationSeeds(seed, replications):
    return [seed + replication for replication in range(replications)]


def sweep(config, rhoValues, replications=None, workers=None, pepTable=None):
    """
    Replicated trials over a grid of harvesting probabilities.

    Returns a long table with one row per (rho, metric): mean, standard error and count.
    """
    replications = replications or config.replications
    workers = workers or config.workers
    seeds = replicationSeeds(config.seed, replications)
    rows = []
    for rho in rhoValues:
        simulator = LinkSimulator(config.withRho(rho), pepTable)
        metrics = runReplications(simulator, seeds, workers)
        labels = {"rho": rho, "scheme": schemeLabel(simulator.units.beta), "policy": simulator.policy.name,
                  "beta": simulator.units.beta, "K": config.maxRetransmissions}
        rows.extend(Evaluation.summarize(metrics, labels))
        logging.info(f"rho = {rho:g}: pdp {np.mean([m.pdp for m in metrics]):.4f} over {len(metrics)} trials.")
    return pd.DataFrame(rows, columns=Evaluation.COLUMNS)


def schemeConfig(config, scheme, policyName):
    if scheme not in SCHEMES:
        raise InvalidArgumentError(f"scheme must be one of {SCHEMES}, got {scheme}")
    beta = 1 if scheme == SCHEMES[0] else config.beta
    return config.withOverrides(beta=beta, policy=policyName)


def compareSchemes(config, schemes, rhoValues, replications=None, workers=None, pepTable=None):
    """
    Runs every (scheme, policy) pair on the same seeds and adds paired differences
    against the first pair as delta_<metric> rows.
    """
    if not schemes:
        raise InvalidArgumentError("need at least one scheme to compare")
    replications = replications or config.replications
    workers = workers or config.workers
    seeds = replicationSeeds(config.seed, replications)
    rows = []
    for rho in rhoValues:
        baseline = None
        for scheme, policyName in schemes:
            schemeCfg = schemeConfig(config, scheme, policyName).withRho(rho)
            simulator = LinkSimulator(schemeCfg, pepTable)
            metrics = runReplications(simulator, seeds, workers)
            labels = {"rho": rho, "scheme": scheme, "policy": simulator.policy.name, "beta": schemeCfg.beta, "K": schemeCfg.maxRetransmissions}
            rows.extend(Evaluation.summarize(metrics, labels))
            if baseline is None:
                baseline = metrics
            else:
                rows.extend(Evaluation.pairedDifferences(baseline, metrics, labels))
    return pd.DataFrame(rows, columns=Evaluation.COLUMNS)
