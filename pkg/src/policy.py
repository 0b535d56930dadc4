# # -----------------------------------------------------------------------------
# # Transmit power policies: belief tracking, average-cost MDP, MLPH and greedy
# # Author: ehlink developers
# # Date Created: 18-10-2026
# # -----------------------------------------------------------------------------

import itertools
import logging
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from energy import nextLevel
from exceptions import (CapacityError, ConvergenceError, DegenerateObservationError,
                        InvalidArgumentError)
from protocol import FeedbackKind, transmissionCost

COST_MODES = ("pep", "nak_weighted")
KERNEL_TOLERANCE = 1e-10
BELIEF_TOLERANCE = 1e-12
DENSE_KERNEL_LIMIT = 60_000_000


#################################
### BELIEF ######################
#################################

def checkBelief(belief):
    belief = np.asarray(belief, dtype=float)
    if belief.ndim != 1 or belief.size == 0:
        raise InvalidArgumentError(f"belief must be a non-empty vector, got shape {belief.shape}")
    if np.any(belief < -BELIEF_TOLERANCE) or np.any(belief > 1.0 + BELIEF_TOLERANCE):
        raise InvalidArgumentError(f"belief entries must lie in [0, 1]: {belief}")
    if abs(belief.sum() - 1.0) > BELIEF_TOLERANCE:
        raise InvalidArgumentError(f"belief must sum to 1, sums to {belief.sum()!r}")
    return belief


def observationLikelihood(feedback, action, state, pepTable, rhoRx, previousLikelihood=None):
    # probability of the feedback given the hidden channel state
    if action == 0:
        return 1.0 if previousLikelihood is None else previousLikelihood
    if feedback.kind is FeedbackKind.NAKX:
        return 1.0 - rhoRx
    errorProbability = pepTable.value(state, action)
    if feedback.kind is FeedbackKind.ACK:
        return rhoRx * (1.0 - errorProbability)
    return rhoRx * errorProbability


def beliefUpdate(belief, feedback, action, omega, likelihoodFn):
    """
    Bayes correction with the feedback likelihood followed by one Markov prediction step.

    likelihoodFn(feedback, action, state) returns the likelihood for a single channel state.
    """
    prior = checkBelief(belief)
    likelihoods = np.array([likelihoodFn(feedback, action, state) for state in range(prior.size)], dtype=float)
    posterior = likelihoods * prior
    mass = posterior.sum()
    if not mass > 0.0:
        raise DegenerateObservationError(f"feedback {feedback.label} after action {action} has zero likelihood under belief {prior}")
    posterior /= mass
    predicted = posterior @ np.asarray(omega, dtype=float)
    return checkBelief(predicted / predicted.sum())


class BeliefTracker:
    # belief over the channel state seen by the transmitter, one instance per trial

    def __init__(self, channel, pepTable, rhoRx):
        self.channel = channel
        self.pepTable = pepTable
        self.rhoRx = rhoRx
        self.belief = channel.steadyState.copy()
        self.previousLikelihood = np.ones(channel.numStates)
        self.slot = 1

    def likelihood(self, feedback, action, state):
        return observationLikelihood(feedback, action, state, self.pepTable, self.rhoRx, self.previousLikelihood[state])

    def observe(self, feedback, action, predict=True):
        omega = self.channel.transitionMatrix if predict else np.eye(self.channel.numStates)
        likelihoods = np.array([self.likelihood(feedback, action, state) for state in range(self.channel.numStates)])
        try:
            updated = beliefUpdate(self.belief, feedback, action, omega, self.likelihood)
        except DegenerateObservationError:
            logging.debug(f"Feedback {feedback.label} impossible under the model; keeping the predicted prior.")
            updated = checkBelief(self.belief @ omega)
        self.previousLikelihood = likelihoods
        # the second slot still has no usable posterior
        self.belief = self.channel.steadyState.copy() if self.slot == 1 else updated
        self.slot += 1
        return self.belief


#################################
### MDP #########################
#################################

@dataclass(frozen=True, eq=False)
class MdpModel:
    transitions: np.ndarray
    costs: np.ndarray
    stateShape: tuple = None
    startState: int = 0

    def __post_init__(self):
        numActions, numStates, numTargets = self.transitions.shape
        if numStates != numTargets or self.costs.shape != (numStates, numActions):
            raise InvalidArgumentError(f"kernel {self.transitions.shape} and costs {self.costs.shape} disagree")
        feasible = np.isfinite(self.costs)
        if not np.all(feasible.any(axis=1)):
            raise InvalidArgumentError("every state needs at least one feasible action")
        rowSums = self.transitions.sum(axis=2).T
        worst = np.max(np.abs(rowSums[feasible] - 1.0))
        if worst > KERNEL_TOLERANCE:
            raise InvalidArgumentError(f"kernel rows must sum to 1, worst deviation {worst:.3e}")
        if np.any(self.costs[feasible] < 0.0) or np.any(self.costs[feasible] > 1.0):
            raise InvalidArgumentError("costs must lie in [0, 1]")

    @property
    def numStates(self):
        return self.costs.shape[0]

    @property
    def numActions(self):
        return self.costs.shape[1]

    @property
    def feasible(self):
        return np.isfinite(self.costs)

    def stateIndex(self, battery, channelState, k):
        batteryLevels, numChannelStates, maxAttempts = self.stateShape
        return (battery * numChannelStates + channelState) * maxAttempts + (k - 1)


def buildMdp(units, channel, pepTable, maxAttempts, rhoTx, rhoRx, costMode="pep", outageCost=1.0, stateCap=20000):
    """
    Fully observed MDP over (transmitter battery, channel state, retransmission index).

    Action a spends a battery units on a full packet. A transmission is acknowledged with
    probability rhoRx * (1 - P_err); any other outcome moves k to its successor.
    """
    if costMode not in COST_MODES:
        raise InvalidArgumentError(f"cost mode must be one of {COST_MODES}, got {costMode}")
    capacity, harvest = units.txCapacity, units.txHarvest
    numChannelStates = channel.numStates
    numStates = (capacity + 1) * numChannelStates * maxAttempts
    numActions = capacity + 1
    if numStates > stateCap:
        raise CapacityError(f"MDP has {numStates} states, cap is {stateCap}")
    if numActions * numStates * numStates > DENSE_KERNEL_LIMIT:
        raise CapacityError(f"MDP kernel with {numActions} actions over {numStates} states is too large to hold")

    shape = (capacity + 1, numChannelStates, maxAttempts)
    index = lambda b, g, k: (b * numChannelStates + g) * maxAttempts + (k - 1)
    omega = channel.transitionMatrix
    transitions = np.zeros((numActions, numStates, numStates))
    costs = np.full((numStates, numActions), np.inf)

    for battery, state, k in itertools.product(range(capacity + 1), range(numChannelStates), range(1, maxAttempts + 1)):
        source = index(battery, state, k)
        nextK = k % maxAttempts + 1
        for action in range(battery + 1):
            if action == 0:
                ackProbability, cost = 0.0, outageCost
            else:
                errorProbability = pepTable.value(state, action)
                ackProbability = rhoRx * (1.0 - errorProbability)
                cost = errorProbability if costMode == "pep" else rhoRx * errorProbability
            costs[source, action] = cost
            for harvestUnits, harvestProbability in ((harvest, rhoTx), (0, 1.0 - rhoTx)):
                if harvestProbability == 0.0:
                    continue
                nextBattery = nextLevel(battery, action, harvestUnits, capacity)
                for nextState in range(numChannelStates):
                    weight = harvestProbability * omega[state, nextState]
                    if weight == 0.0:
                        continue
                    transitions[action, source, index(nextBattery, nextState, 1)] += weight * ackProbability
                    transitions[action, source, index(nextBattery, nextState, nextK)] += weight * (1.0 - ackProbability)

    startState = index(capacity, 0, 1)
    logging.info(f"MDP built: {numStates} states, {numActions} actions, cost mode {costMode}.")
    return MdpModel(transitions, costs, shape, startState)


@dataclass(frozen=True, eq=False)
class ValueIterationResult:
    averageCost: float
    relativeValues: np.ndarray
    policy: np.ndarray
    iterations: int
    span: float
    bellmanResidual: float
    stateShape: tuple = None

    def actionFor(self, battery, channelState, k):
        batteryLevels, numChannelStates, maxAttempts = self.stateShape
        return int(self.policy[(battery * numChannelStates + channelState) * maxAttempts + (k - 1)])


def logReachability(mdp):
    # unichain sanity check: states never reached from the start state under any action
    feasibleKernel = mdp.transitions.sum(axis=0) > 0.0
    order = csgraph.breadth_first_order(sparse.csr_matrix(feasibleKernel), mdp.startState, directed=True, return_predecessors=False)
    unreachable = mdp.numStates - len(order)
    if unreachable:
        logging.info(f"{unreachable} of {mdp.numStates} MDP states are unreachable from the start state.")
    return unreachable


def relativeValueIteration(mdp, tolerance=1e-8, maxIterations=100_000, aperiodicity=0.5, referenceState=None):
    """
    Average-cost relative value iteration with synchronous (Jacobi) sweeps.

    The kernel is mixed with the identity (weight 1 - aperiodicity) so periodic chains
    converge; gain and policy are unchanged by the mixing.
    """
    if not 0.0 < aperiodicity <= 1.0:
        raise InvalidArgumentError(f"aperiodicity must lie in (0, 1], got {aperiodicity}")
    logReachability(mdp)
    numActions, numStates = mdp.numActions, mdp.numStates
    reference = mdp.startState if referenceState is None else referenceState
    flatKernel = mdp.transitions.reshape(numActions * numStates, numStates)
    costs = mdp.costs
    values = np.zeros(numStates)

    span = np.inf
    for iteration in range(1, maxIterations + 1):
        expected = (flatKernel @ values).reshape(numActions, numStates).T
        qValues = costs + aperiodicity * expected + (1.0 - aperiodicity) * values[:, None]
        updated = qValues.min(axis=1)
        difference = updated - values
        span = float(difference.max() - difference.min())
        if span < tolerance:
            break
        values = updated - updated[reference]
    else:
        raise ConvergenceError(f"relative value iteration did not converge in {maxIterations} iterations, span {span:.3e}", maxIterations, span)

    gain = float((difference.max() + difference.min()) / 2.0)
    policy = np.argmin(qValues, axis=1)
    relativeValues = aperiodicity * (values - values[reference])

    expectedOriginal = (flatKernel @ relativeValues).reshape(numActions, numStates).T
    residual = gain + relativeValues - (costs + expectedOriginal).min(axis=1)
    bellmanResidual = float(np.max(np.abs(residual)))
    logging.info(f"Value iteration converged after {iteration} sweeps: average cost {gain:.6g}, span {span:.2e}.")
    return ValueIterationResult(gain, relativeValues, policy, iteration, span, bellmanResidual, mdp.stateShape)


#################################
### DECISIONS ###################
#################################

def greedyAction(belief, battery, pepTable, outageCost=1.0):
    # minimizes the belief-averaged PEP over the affordable actions, smallest action on ties
    belief = checkBelief(belief)
    highest = min(battery, pepTable.maxAction)
    expected = belief @ pepTable.matrix[:, :highest + 1]
    expected[0] = outageCost
    return int(np.argmin(expected))


def quantizeBelief(belief, kappa):
    counts = np.rint(np.asarray(belief) * kappa).astype(int)
    if counts.sum() == 0:
        counts[int(np.argmax(belief))] = 1
    return tuple(int(c) for c in counts)


@dataclass(frozen=True, eq=False)
class PolicyTable:
    kappa: int
    rhoGrid: tuple
    actions: np.ndarray
    numChannelStates: int
    memoryBits: int

    FORMAT_VERSION = 1

    @property
    def entries(self):
        return int(self.actions.size)

    def bucketIndex(self, counts):
        radix = self.kappa + 1
        return sum(count * radix ** position for position, count in enumerate(counts))

    def nearestRho(self, rho):
        if rho is None:
            return 0
        return int(np.argmin(np.abs(np.asarray(self.rhoGrid) - rho)))

    def lookup(self, belief, battery, k, rho=None):
        counts = quantizeBelief(belief, self.kappa)
        return int(self.actions[self.nearestRho(rho), self.bucketIndex(counts), battery, k - 1])

    def save(self, path):
        with open(path, "wb") as file:
            np.savez(file, version=np.array(self.FORMAT_VERSION), kappa=np.array(self.kappa), rhoGrid=np.array(self.rhoGrid),
                     actions=self.actions, numChannelStates=np.array(self.numChannelStates), memoryBits=np.array(self.memoryBits))
        logging.info(f"Policy table with {self.entries} entries written to {path}.")

    @classmethod
    def load(cls, path):
        with np.load(path) as archive:
            version = int(archive["version"])
            if version != cls.FORMAT_VERSION:
                raise InvalidArgumentError(f"{path} holds policy table version {version}, expected {cls.FORMAT_VERSION}")
            return cls(int(archive["kappa"]), tuple(archive["rhoGrid"].tolist()), archive["actions"].copy(),
                       int(archive["numChannelStates"]), int(archive["memoryBits"]))


def quantizeAndTabulate(viResults, kappa, rhoGrid):
    """
    Stores the MLPH decision for every quantized belief, battery level, retransmission
    index and harvesting probability of the grid.
    """
    if len(viResults) != len(rhoGrid):
        raise InvalidArgumentError(f"{len(viResults)} solutions for {len(rhoGrid)} grid points")
    if kappa < 1:
        raise InvalidArgumentError(f"kappa must be >= 1, got {kappa}")
    batteryLevels, numChannelStates, maxAttempts = viResults[0].stateShape
    radix = kappa + 1
    numBuckets = radix ** numChannelStates
    actions = np.zeros((len(rhoGrid), numBuckets, batteryLevels, maxAttempts), dtype=np.int16)

    for bucket in range(numBuckets):
        counts = [(bucket // radix ** position) % radix for position in range(numChannelStates)]
        likely = int(np.argmax(counts))
        for rhoIndex, result in enumerate(viResults):
            for battery, k in itertools.product(range(batteryLevels), range(1, maxAttempts + 1)):
                actions[rhoIndex, bucket, battery, k - 1] = result.actionFor(battery, likely, k)

    numStates = batteryLevels * numChannelStates * maxAttempts
    memoryBits = kappa * batteryLevels * numStates ** 2
    table = PolicyTable(kappa, tuple(float(r) for r in rhoGrid), actions, numChannelStates, memoryBits)
    logging.info(f"Policy table: {table.entries} entries; memory formula gives {memoryBits} bits.")
    return table


def mlphAction(belief, battery, k, source, rho=None):
    # acts as if the channel sat in its most likely state
    belief = checkBelief(belief)
    if isinstance(source, PolicyTable):
        action = source.lookup(belief, battery, k, rho)
    else:
        action = source.actionFor(battery, int(np.argmax(belief)), k)
    return min(action, battery)


#################################
### POLICIES ####################
#################################

class GreedyPolicy:
    name = "greedy"

    def __init__(self, pepTable, outageCost=1.0):
        self.pepTable = pepTable
        self.outageCost = outageCost

    def chooseAction(self, belief, battery, k, pendingUnits):
        return greedyAction(belief, battery, self.pepTable, self.outageCost)


class MlphPolicy:
    name = "mlph"

    def __init__(self, source, rho=None):
        self.source = source
        self.rho = rho

    def chooseAction(self, belief, battery, k, pendingUnits):
        return mlphAction(belief, battery, k, self.source, self.rho)


class EqualPowerPolicy:
    # fixed full-packet energy beta * E_Tx^min, partial packets scaled down

    def __init__(self, beta, pOutMw):
        self.beta = beta
        self.pOutMw = pOutMw
        self.name = f"equal:{pOutMw:g}"

    def chooseAction(self, belief, battery, k, pendingUnits):
        if battery >= transmissionCost(self.beta, pendingUnits, self.beta):
            return self.beta
        return 0


def parsePolicyName(text):
    # "greedy", "mlph" or "equal:<mW>"
    name = text.strip().lower()
    if name in ("greedy", "mlph"):
        return name, None
    if name.startswith("equal:"):
        try:
            power = float(name.split(":", 1)[1])
        except ValueError as e:
            raise InvalidArgumentError(f"equal power policy needs a number of mW, got '{text}'") from e
        if power <= 0:
            raise InvalidArgumentError(f"equal power must be positive, got {power}")
        return "equal", power
    raise InvalidArgumentError(f"unknown policy '{text}', expected greedy, mlph or equal:<mW>")
