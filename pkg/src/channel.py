# # -----------------------------------------------------------------------------
# # Finite-state Markov model of the Rayleigh fading link
# # Author: ehlink developers
# # Date Created: 18-10-2026
# # -----------------------------------------------------------------------------

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph
from scipy.sparse.linalg import spsolve

from exceptions import AmbiguityError, ConsistencyError, InvalidArgumentError

ROW_SUM_TOLERANCE = 1e-12
STATIONARY_TOLERANCE = 1e-10
DENSE_SOLVE_LIMIT = 3000


def partitionRayleigh(numStates, meanGain):
    # thresholds so that every interval holds exponential mass 1/numStates; last entry is inf
    if numStates < 1 or meanGain <= 0:
        raise InvalidArgumentError(f"partition needs numStates >= 1 and meanGain > 0, got {numStates}, {meanGain}")
    inner = [-meanGain * np.log1p(-k / numStates) for k in range(1, numStates)]
    return [0.0] + inner + [np.inf]


def meanPowerGain(boundaries, intervalIndex, meanGain):
    """
    Conditional mean of an exponential power gain with mean meanGain restricted to
    [boundaries[intervalIndex], boundaries[intervalIndex + 1]).
    """
    if intervalIndex < 0 or intervalIndex + 1 >= len(boundaries):
        raise InvalidArgumentError(f"interval index {intervalIndex} outside {len(boundaries) - 1} intervals")
    lower, upper = boundaries[intervalIndex], boundaries[intervalIndex + 1]
    if not upper > lower:
        raise InvalidArgumentError(f"empty interval [{lower}, {upper})")
    if np.isinf(upper):
        return lower + meanGain
    width = (upper - lower) / meanGain
    tail = np.exp(-width)
    return ((lower + meanGain) - (upper + meanGain) * tail) / (-np.expm1(-width))


def dopplerTransitionMatrix(boundaries, meanGain, dopplerNorm):
    # tridiagonal slow-fading matrix from level crossing rates, equal state probabilities
    numStates = len(boundaries) - 1
    stateProbability = 1.0 / numStates
    crossings = np.zeros(numStates + 1)
    for index in range(1, numStates):
        threshold = boundaries[index] / meanGain
        crossings[index] = np.sqrt(2.0 * np.pi * threshold) * dopplerNorm * np.exp(-threshold)

    matrix = np.zeros((numStates, numStates))
    for state in range(numStates):
        up = crossings[state + 1] / stateProbability if state + 1 < numStates else 0.0
        down = crossings[state] / stateProbability if state > 0 else 0.0
        if up + down > 1.0:
            logging.warning(f"Doppler value {dopplerNorm} too fast for {numStates} states; rescaling row {state}.")
            scale = 1.0 / (up + down)
            up, down = up * scale, down * scale
        if state + 1 < numStates:
            matrix[state, state + 1] = up
        if state > 0:
            matrix[state, state - 1] = down
        matrix[state, state] = 1.0 - up - down
    return matrix


def checkRowStochastic(matrix, tolerance=ROW_SUM_TOLERANCE, name="transition matrix"):
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise InvalidArgumentError(f"{name} must be square, got shape {matrix.shape}")
    if np.any(matrix < 0.0) or np.any(matrix > 1.0):
        raise InvalidArgumentError(f"{name} has entries outside [0, 1]")
    rowSums = matrix.sum(axis=1)
    worst = np.max(np.abs(rowSums - 1.0))
    if worst > tolerance:
        raise InvalidArgumentError(f"{name} rows must sum to 1, worst deviation {worst:.3e}")
    return matrix


def steadyState(transitionMatrix):
    """
    Stationary distribution of a row-stochastic matrix (dense or scipy.sparse).

    Transient states get probability 0. More than one closed communicating class means
    the distribution is not unique and raises AmbiguityError.
    """
    matrix = sparse.csr_matrix(transitionMatrix, dtype=float)
    matrix.eliminate_zeros()
    size = matrix.shape[0]
    if matrix.shape[0] != matrix.shape[1]:
        raise InvalidArgumentError(f"transition matrix must be square, got shape {matrix.shape}")

    numClasses, labels = csgraph.connected_components(matrix, directed=True, connection="strong")
    coo = matrix.tocoo()
    leaving = labels[coo.row] != labels[coo.col]
    openClasses = set(np.unique(labels[coo.row[leaving]]).tolist())
    closedClasses = [c for c in range(numClasses) if c not in openClasses]
    if len(closedClasses) != 1:
        groups = [np.flatnonzero(labels == c).tolist()[:10] for c in closedClasses]
        raise AmbiguityError(f"chain has {len(closedClasses)} closed classes (states {groups}); stationary distribution is not unique")

    members = np.flatnonzero(labels == closedClasses[0])
    sub = matrix[members][:, members]
    n = len(members)
    if n <= DENSE_SOLVE_LIMIT:
        system = sub.toarray().T - np.eye(n)
        system[-1, :] = 1.0
        rhs = np.zeros(n)
        rhs[-1] = 1.0
        solution = np.linalg.solve(system, rhs)
    else:
        system = (sub.T - sparse.identity(n, format="csr")).tolil()
        system[n - 1, :] = np.ones(n)
        rhs = np.zeros(n)
        rhs[-1] = 1.0
        solution = spsolve(system.tocsc(), rhs)

    stationary = np.zeros(size)
    stationary[members] = np.clip(solution, 0.0, None)
    stationary /= stationary.sum()

    residual = np.max(np.abs(matrix.T @ stationary - stationary))
    if residual > 1e-8:
        raise ConsistencyError(f"stationary solve residual {residual:.3e} too large")
    return stationary


@dataclass(frozen=True, eq=False)
class ChannelModel:
    numStates: int
    boundaries: tuple
    transitionMatrix: np.ndarray
    meanChannelGain: float = 1.0
    steadyState: np.ndarray = field(default=None)
    meanGains: np.ndarray = field(default=None)

    def __post_init__(self):
        matrix = checkRowStochastic(self.transitionMatrix)
        if matrix.shape[0] != self.numStates:
            raise InvalidArgumentError(f"transition matrix is {matrix.shape[0]}x{matrix.shape[0]} but numStates = {self.numStates}")
        if len(self.boundaries) != self.numStates + 1 or self.boundaries[0] != 0.0 or not np.isinf(self.boundaries[-1]):
            raise InvalidArgumentError(f"boundaries must run from 0 to inf over {self.numStates} intervals")
        if np.any(np.diff(self.boundaries) <= 0):
            raise InvalidArgumentError("boundaries must be strictly increasing")
        matrix.setflags(write=False)
        object.__setattr__(self, "transitionMatrix", matrix)

        if self.steadyState is None:
            object.__setattr__(self, "steadyState", steadyState(matrix))
        if self.meanGains is None:
            gains = [meanPowerGain(self.boundaries, i, self.meanChannelGain) for i in range(self.numStates)]
            object.__setattr__(self, "meanGains", np.array(gains))
        object.__setattr__(self, "cumulativeRows", np.cumsum(matrix, axis=1))

    @classmethod
    def build(cls, numStates, meanChannelGain=1.0, dopplerNorm=0.05, transitionMatrix=None):
        boundaries = tuple(partitionRayleigh(numStates, meanChannelGain))
        if transitionMatrix is None:
            transitionMatrix = dopplerTransitionMatrix(boundaries, meanChannelGain, dopplerNorm)
        model = cls(numStates, boundaries, np.array(transitionMatrix, dtype=float), meanChannelGain)
        logging.info(f"Channel model with {numStates} states, mean gains {np.round(model.meanGains, 4).tolist()}.")
        return model

    def step(self, stateIndex, rng):
        # samples the next state from row stateIndex of the transition matrix
        if not 0 <= stateIndex < self.numStates:
            raise InvalidArgumentError(f"channel state {stateIndex} outside 0..{self.numStates - 1}")
        draw = rng.random()
        nextIndex = int(np.searchsorted(self.cumulativeRows[stateIndex], draw, side="right"))
        return min(nextIndex, self.numStates - 1)

    def initialState(self, rng):
        draw = rng.random()
        return min(int(np.searchsorted(np.cumsum(self.steadyState), draw, side="right")), self.numStates - 1)
