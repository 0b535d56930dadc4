# # -----------------------------------------------------------------------------
# # Markov-chain analysis of the packet drop probability under fixed power
# # Author: ehlink developers
# # Date Created: 18-10-2026
# # -----------------------------------------------------------------------------

import itertools
import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy import sparse
from scipy.sparse.linalg import splu

from channel import steadyState
from energy import CompoundPoissonHarvest, nextLevel
from exceptions import ConsistencyError, EnergyCausalityError, InvalidArgumentError
from protocol import (ACK, DELIVERED, DROPPED, NAK, Feedback, FeedbackKind, advanceRetransIndex,
                      feedbackAlphabet, feedbackForPlan, planReception, transmissionCost)

ROW_TOLERANCE = 1e-9
SOLVE_BLOCK = 256
MODES = ("chain", "bound")


def feedbackIndex(feedback):
    if feedback.kind is FeedbackKind.ACK:
        return 0
    if feedback.kind is FeedbackKind.NAK:
        return 1
    return 2 + feedback.x


@dataclass(frozen=True)
class FullChainState:
    i: int
    j: int
    g: int
    z: Feedback
    k: int


@dataclass(frozen=True, eq=False)
class AnalysisModel:
    units: object
    channel: object
    pepTable: object
    maxAttempts: int
    outcomeWeights: tuple
    actionSchedule: tuple
    accumulate: bool = True
    caseIiiLiteral: bool = False

    def __post_init__(self):
        if len(self.actionSchedule) != self.maxAttempts:
            raise InvalidArgumentError(f"action schedule needs {self.maxAttempts} entries, got {len(self.actionSchedule)}")
        if abs(sum(self.outcomeWeights) - 1.0) > 1e-12:
            raise InvalidArgumentError("harvest outcome weights must sum to 1")

    @classmethod
    def fromConfig(cls, config, pepTable=None, actionSchedule=None):
        process = config.harvestProcess()
        if isinstance(process, CompoundPoissonHarvest):
            raise InvalidArgumentError("the chain analysis needs fixed harvest amounts (bernoulli or correlated harvesting)")
        channel = config.channelModel()
        units = config.units()
        pepTable = pepTable or config.pepTable(channel)
        schedule = tuple(actionSchedule) if actionSchedule else (units.beta,) * config.maxRetransmissions
        return cls(units, channel, pepTable, config.maxRetransmissions, process.outcomeWeights(config.slotS), schedule,
                   config.xiAccumulation == "cumulative", config.caseIiiLiteral)

    @property
    def feedbacks(self):
        return feedbackAlphabet(self.units.beta)

    @property
    def shape(self):
        return (self.units.txCapacity + 1, self.units.rxCapacity + 1, len(self.feedbacks), self.maxAttempts)

    @property
    def numStates(self):
        return int(np.prod(self.shape))

    @property
    def numPairs(self):
        return (self.units.txCapacity + 1) * (self.units.rxCapacity + 1)

    def index(self, i, j, z, k):
        _, rxLevels, numFeedbacks, maxAttempts = self.shape
        return ((i * rxLevels + j) * numFeedbacks + z) * maxAttempts + (k - 1)

    def pairIndex(self, i, j):
        return i * (self.units.rxCapacity + 1) + j

    def startIndices(self):
        return np.array([self.index(i, j, 0, 1) for i in range(self.units.txCapacity + 1) for j in range(self.units.rxCapacity + 1)])


#################################
### TRANSITION MATRIX ###########
#################################

@dataclass(frozen=True, eq=False)
class TransitionMatrixXi:
    matrix: sparse.csr_matrix
    continuing: sparse.csr_matrix
    delivered: sparse.csr_matrix
    dropped: sparse.csr_matrix
    channelState: int


def slotOutcomes(model, i, j, z, k, g):
    """
    One slot of the link from state (i, j, z, k) in channel state g.

    Returns (probability, q, r, w, y, outcome) tuples; outcome is the frame event the
    slot produces (delivered, dropped, continue or waiting).
    """
    units, beta = model.units, model.units.beta
    feedback = model.feedbacks[z]
    action = model.actionSchedule[k - 1]
    pending = feedback.pendingUnits(beta)
    stored = feedback.x if feedback.kind is FeedbackKind.NAKX else 0

    if pending == 0:
        transmitted, txSpend = True, 0
    else:
        cost = transmissionCost(action, pending, beta)
        transmitted = action > 0 and i >= cost
        txSpend = cost if transmitted else 0

    if transmitted:
        plan = planReception(stored, pending, j, units, model.accumulate)
        rxSpend = plan.spent
        if plan.decode:
            errorProbability = model.pepTable.value(g, action)
            branches = [(1.0 - errorProbability, ACK), (errorProbability, NAK)]
        else:
            branches = [(1.0, feedbackForPlan(plan, beta))]
    else:
        rxSpend = 0
        branches = [(1.0, feedback)]

    outcomes = []
    harvestCases = ((False, False), (False, True), (True, False), (True, True))
    for (harvestTx, harvestRx), weight in zip(harvestCases, model.outcomeWeights):
        if weight == 0.0:
            continue
        try:
            q = nextLevel(i, txSpend, units.txHarvest if harvestTx else 0, units.txCapacity)
            r = nextLevel(j, rxSpend, units.rxHarvest if harvestRx else 0, units.rxCapacity)
        except EnergyCausalityError as e:
            raise ConsistencyError(f"state ({i}, {j}, {feedback.label}, {k}) spends beyond its battery") from e
        for probability, nextFeedback in branches:
            if probability == 0.0:
                continue
            targetQ = q
            if model.caseIiiLiteral and not harvestTx and harvestRx and transmitted and nextFeedback is ACK:
                targetQ = min(i + units.txHarvest - txSpend, units.txCapacity)
            if transmitted and nextFeedback.kind is FeedbackKind.ACK:
                outcome = DELIVERED
            elif nextFeedback.kind is not FeedbackKind.ACK and k == model.maxAttempts:
                outcome = DROPPED
            elif nextFeedback.kind is FeedbackKind.ACK:
                outcome = "waiting"
            else:
                outcome = "continue"
            y = advanceRetransIndex(k, model.maxAttempts, nextFeedback)
            w = 0 if outcome == DROPPED else feedbackIndex(nextFeedback)
            outcomes.append((weight * probability, targetQ, r, w, y, outcome))
    return outcomes


def buildXi(model, channelState):
    # rows of the slot transition matrix for a fixed channel state, split by frame event
    entries = {"continue": ([], [], []), DELIVERED: ([], [], []), DROPPED: ([], [], [])}
    txLevels, rxLevels, numFeedbacks, maxAttempts = model.shape
    for i, j, z, k in itertools.product(range(txLevels), range(rxLevels), range(numFeedbacks), range(1, maxAttempts + 1)):
        source = model.index(i, j, z, k)
        for probability, q, r, w, y, outcome in slotOutcomes(model, i, j, z, k, channelState):
            rows, cols, data = entries["continue" if outcome == "waiting" else outcome]
            rows.append(source)
            cols.append(model.index(q, r, w, y))
            data.append(probability)

    size = model.numStates
    parts = {name: sparse.csr_matrix((data, (rows, cols)), shape=(size, size)) for name, (rows, cols, data) in entries.items()}
    matrix = (parts["continue"] + parts[DELIVERED] + parts[DROPPED]).tocsr()
    worst = np.max(np.abs(np.asarray(matrix.sum(axis=1)).ravel() - 1.0))
    if worst > ROW_TOLERANCE:
        raise ConsistencyError(f"transition matrix rows deviate from 1 by {worst:.3e}")
    logging.info(f"Transition matrix for channel state {channelState}: {size} states, {matrix.nnz} entries.")
    return TransitionMatrixXi(matrix, parts["continue"], parts[DELIVERED], parts[DROPPED], channelState)


#################################
### FRAME ANALYSIS ##############
#################################

def pairMatrix(model, xiPart):
    # aggregates columns of a transition block onto transmitter/receiver battery pairs
    txLevels, rxLevels, numFeedbacks, maxAttempts = model.shape
    columnPairs = np.arange(model.numStates) // (numFeedbacks * maxAttempts)
    collapse = sparse.csr_matrix((np.ones(model.numStates), (np.arange(model.numStates), columnPairs)), shape=(model.numStates, model.numPairs))
    return xiPart @ collapse


def frameOutcomes(model, xi):
    """
    Absorbing-chain analysis of one frame started at (i, j, ACK, 1) for every battery pair.

    Returns (dropProbability per pair, next frame-start pair distribution as a sparse matrix).
    """
    continuing = xi.continuing.tocsr()
    exits = (xi.delivered + xi.dropped).tocsr()
    canExit = np.asarray(exits.sum(axis=1)).ravel() > 0.0
    reach = continuing.astype(bool).astype(float)
    while True:
        extended = canExit | ((reach @ canExit.astype(float)) > 0.0)
        if np.array_equal(extended, canExit):
            break
        canExit = extended

    transient = np.flatnonzero(canExit)
    position = -np.ones(model.numStates, dtype=int)
    position[transient] = np.arange(len(transient))
    starts = model.startIndices()

    dropProbability = np.ones(model.numPairs)
    nextPairs = sparse.lil_matrix((model.numPairs, model.numPairs))
    stuck = [pair for pair, start in enumerate(starts) if position[start] < 0]
    for pair in stuck:
        nextPairs[pair, pair] = 1.0
    if stuck:
        logging.warning(f"{len(stuck)} battery pairs can never start a transmission; counted as dropping.")

    active = [pair for pair, start in enumerate(starts) if position[start] >= 0]
    if active:
        restricted = continuing[transient][:, transient]
        system = (sparse.identity(len(transient), format="csc") - restricted.tocsc()).T.tocsc()
        solver = splu(system)
        droppedPairs = pairMatrix(model, xi.dropped)[transient]
        deliveredPairs = pairMatrix(model, xi.delivered)[transient]
        for blockStart in range(0, len(active), SOLVE_BLOCK):
            block = active[blockStart:blockStart + SOLVE_BLOCK]
            rhs = np.zeros((len(transient), len(block)))
            rhs[position[starts[block]], np.arange(len(block))] = 1.0
            visits = solver.solve(rhs)
            toDropped = (droppedPairs.T @ visits).T
            toDelivered = (deliveredPairs.T @ visits).T
            for column, pair in enumerate(block):
                dropMass, deliverMass = toDropped[column].sum(), toDelivered[column].sum()
                leaked = 1.0 - dropMass - deliverMass
                if leaked < -1e-9:
                    raise ConsistencyError(f"frame from pair {pair} absorbs {1.0 - leaked:.6f} probability")
                if leaked > 1e-9:
                    logging.warning(f"Frame from pair {pair} leaks {leaked:.3e} into never-ending waits; counted as dropped.")
                dropProbability[pair] = dropMass + max(leaked, 0.0)
                row = toDropped[column] + toDelivered[column]
                row[pair] += max(leaked, 0.0)
                nonzero = np.flatnonzero(row > 0.0)
                nextPairs[pair, nonzero] = row[nonzero]
    return dropProbability, nextPairs.tocsr()


def chainAveragePdp(model, xiByState=None):
    # frame-start chain over (channel state, battery pair); the channel moves once per frame
    numStates = model.channel.numStates
    xiByState = xiByState or [buildXi(model, g) for g in range(numStates)]
    drops, frames = [], []
    for xi in xiByState:
        dropProbability, nextPairs = frameOutcomes(model, xi)
        drops.append(dropProbability)
        frames.append(nextPairs)
    omega = model.channel.transitionMatrix
    frameChain = sparse.bmat([[frames[g] * omega[g, h] for h in range(numStates)] for g in range(numStates)], format="csr")
    stationary = steadyState(frameChain).reshape(numStates, model.numPairs)
    pdp = float(np.sum(stationary * np.vstack(drops)))
    return min(max(pdp, 0.0), 1.0), stationary, np.vstack(drops)


#################################
### BOUND #######################
#################################

def successProbabilities(model, i, j, g):
    """
    Per-attempt success probabilities P_suc,1..K of a frame started at (i, j) in channel
    state g, on a pessimistic battery path.

    Every attempt is charged the largest spend an attempt can cause (the full packet at
    the transmitter, sampling plus decoding at the receiver) before the four harvesting
    cases refill the batteries. An attempt succeeds only when both nodes afford a full
    reception on that path, so the resulting drop never falls below the exact frame drop.
    """
    units = model.units
    fullReception = units.fullReceptionUnits
    harvestCases = ((0, 0), (0, units.rxHarvest), (units.txHarvest, 0), (units.txHarvest, units.rxHarvest))
    paths = {(i, j): 1.0}
    successes = []
    for k in range(1, model.maxAttempts + 1):
        action = model.actionSchedule[k - 1]
        errorProbability = model.pepTable.value(g, action)
        succeeded = 0.0
        following = {}
        for (txLevel, rxLevel), mass in paths.items():
            ready = action > 0 and txLevel >= action and rxLevel >= fullReception
            if ready:
                succeeded += mass * (1.0 - errorProbability)
            failing = mass * errorProbability if ready else mass
            if failing == 0.0 or k == model.maxAttempts:
                continue
            txBase, rxBase = max(txLevel - action, 0), max(rxLevel - fullReception, 0)
            for (txHarvest, rxHarvest), weight in zip(harvestCases, model.outcomeWeights):
                if weight == 0.0:
                    continue
                target = (min(txBase + txHarvest, units.txCapacity), min(rxBase + rxHarvest, units.rxCapacity))
                following[target] = following.get(target, 0.0) + failing * weight
        successes.append(succeeded)
        paths = following
    return np.array(successes)


def pSucK(k, state, model):
    return float(successProbabilities(model, state.i, state.j, state.g)[k - 1])


def batteryMarginal(model, xiByState):
    # one-slot battery pair kernel from (i, j, ACK, 1), averaged over the channel steady state
    starts = model.startIndices()
    marginal = sparse.csr_matrix((model.numPairs, model.numPairs))
    for weight, xi in zip(model.channel.steadyState, xiByState):
        marginal = marginal + weight * pairMatrix(model, xi.matrix[starts])
    return marginal


def stationaryPsi(marginal):
    return steadyState(marginal)


def boundDrops(model):
    # conditional drop 1 - sum_k P_suc,k per (channel state, battery pair)
    drops = np.zeros((model.channel.numStates, model.numPairs))
    for i, j in itertools.product(range(model.units.txCapacity + 1), range(model.units.rxCapacity + 1)):
        for g in range(model.channel.numStates):
            drops[g, model.pairIndex(i, j)] = 1.0 - successProbabilities(model, i, j, g).sum()
    return drops


def boundAveragePdp(model, xiByState=None, frameStart=None):
    """
    Upper bound on the average drop probability.

    The pessimistic conditional drops are averaged over the battery occupancy psi and
    over the exact frame-start distribution; the larger average is returned. The second
    one dominates the chain value term by term, so the bound never falls below it.

    Returns (pdp, psi, drops per channel state and battery pair).
    """
    numStates = model.channel.numStates
    xiByState = xiByState or [buildXi(model, g) for g in range(numStates)]
    psi = stationaryPsi(batteryMarginal(model, xiByState))
    if frameStart is None:
        _, frameStart, _ = chainAveragePdp(model, xiByState)
    drops = boundDrops(model)
    occupancyAverage = float(psi @ (model.channel.steadyState @ drops))
    frameAverage = float(np.sum(frameStart * drops))
    logging.debug(f"Bound averages: occupancy {occupancyAverage:.6f}, frame start {frameAverage:.6f}.")
    return max(occupancyAverage, frameAverage), psi, drops


def averagePdp(model, mode="chain"):
    if mode not in MODES:
        raise InvalidArgumentError(f"mode must be one of {MODES}, got {mode}")
    if mode == "chain":
        return chainAveragePdp(model)[0]
    return boundAveragePdp(model)[0]


#################################
### REPORT ######################
#################################

@dataclass(frozen=True, eq=False)
class AnalysisReport:
    chainPdp: float
    boundPdp: float
    psi: np.ndarray
    frameStart: np.ndarray
    chainDrops: np.ndarray
    boundDrops: np.ndarray

    def pairTable(self, model):
        rows = []
        for i, j in itertools.product(range(model.units.txCapacity + 1), range(model.units.rxCapacity + 1)):
            pair = model.pairIndex(i, j)
            rows.append({"i": i, "j": j, "psi": self.psi[pair], "frame_start": self.frameStart[:, pair].sum(),
                         "chain_drop": model.channel.steadyState @ self.chainDrops[:, pair],
                         "bound_drop": model.channel.steadyState @ self.boundDrops[:, pair]})
        return pd.DataFrame(rows)


def analyzeLink(model):
    xiByState = [buildXi(model, g) for g in range(model.channel.numStates)]
    chainPdp, frameStart, chainDrops = chainAveragePdp(model, xiByState)
    boundPdp, psi, pessimisticDrops = boundAveragePdp(model, xiByState, frameStart)
    logging.info(f"Average PDP: chain {chainPdp:.6f}, bound {boundPdp:.6f}.")
    return AnalysisReport(chainPdp, boundPdp, psi, frameStart, chainDrops, pessimisticDrops)


def dumpXi(model, xi, path, limit=2000):
    # full matrix dump for small state spaces
    if model.numStates > limit:
        raise InvalidArgumentError(f"{model.numStates} states exceed the dump limit of {limit}")
    coo = xi.matrix.tocoo()
    labels = [f"({i},{j},{model.feedbacks[z].label},{k})" for i, j, z, k in
              itertools.product(*[range(n) for n in model.shape[:3]], range(1, model.maxAttempts + 1))]
    frame = pd.DataFrame({"from": [labels[r] for r in coo.row], "to": [labels[c] for c in coo.col], "probability": coo.data})
    frame.to_csv(path, index=False)
