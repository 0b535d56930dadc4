# # -----------------------------------------------------------------------------
# # Packet error probability of the coded BPSK link
# # Author: ehlink developers
# # Date Created: 18-10-2026
# # -----------------------------------------------------------------------------

import logging
import math
import os
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

from energy import transmitPowerForAction
from exceptions import InvalidArgumentError

DEFAULT_SPECTRUM_FILE = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "customParameters", "convolutional_k7_r12.txt")
MONOTONE_SLACK = 1e-15


def loadWeightSpectrum(spectrumPath):
    # reads "d A_d" lines; '#' starts a comment
    try:
        with open(spectrumPath, "r") as file:
            lines = file.readlines()
    except OSError as e:
        raise FileNotFoundError(f"Weight spectrum file {spectrumPath} could not be read.") from e

    spectrum = []
    for lineNumber, line in enumerate(lines, start=1):
        content = line.split("#", 1)[0].strip()
        if not content:
            continue
        parts = content.split()
        if len(parts) != 2:
            raise InvalidArgumentError(f"{spectrumPath}:{lineNumber}: expected 'd A_d', got '{content}'")
        try:
            spectrum.append((int(parts[0]), float(parts[1])))
        except ValueError as e:
            raise InvalidArgumentError(f"{spectrumPath}:{lineNumber}: non-numeric entry '{content}'") from e
    if not spectrum:
        raise InvalidArgumentError(f"{spectrumPath} holds no weight spectrum entries")
    return spectrum


@dataclass(frozen=True)
class CodeSpec:
    infoBits: int
    codeRate: float
    dFree: int
    weightSpectrum: tuple
    noisePower: float
    modulationOrder: int = 2

    def __post_init__(self):
        if self.infoBits <= 0 or not 0 < self.codeRate <= 1:
            raise InvalidArgumentError(f"invalid code dimensions c={self.infoBits}, R_c={self.codeRate}")
        coded = self.infoBits / self.codeRate
        if abs(coded - round(coded)) > 1e-9:
            raise InvalidArgumentError(f"c / R_c = {coded} is not an integer number of coded bits")
        if self.noisePower <= 0:
            raise InvalidArgumentError(f"noise power must be positive, got {self.noisePower}")
        if self.modulationOrder != 2:
            raise InvalidArgumentError(f"pairwise error model covers BPSK only, got M = {self.modulationOrder}")
        distances = [d for d, _ in self.weightSpectrum]
        if distances != sorted(distances) or len(set(distances)) != len(distances):
            raise InvalidArgumentError("weight spectrum must be sorted by distance without repeats")
        if distances and distances[0] < self.dFree:
            raise InvalidArgumentError(f"weight spectrum starts at d={distances[0]} below d_free={self.dFree}")
        if any(weight < 0 for _, weight in self.weightSpectrum):
            raise InvalidArgumentError("weight spectrum coefficients must be >= 0")
        object.__setattr__(self, "weightSpectrum", tuple((int(d), float(a)) for d, a in self.weightSpectrum))

    @classmethod
    def fromFile(cls, infoBits, codeRate, noisePower, spectrumPath=DEFAULT_SPECTRUM_FILE, modulationOrder=2):
        spectrum = loadWeightSpectrum(spectrumPath)
        return cls(infoBits, codeRate, spectrum[0][0], tuple(spectrum), noisePower, modulationOrder)

    @property
    def codedBits(self):
        return int(round(self.infoBits / self.codeRate))

    @property
    def truncation(self):
        # largest distance kept in the union bound
        return self.weightSpectrum[-1][0] if self.weightSpectrum else self.dFree


def bepBpsk(d, meanGain, pOut, noisePower):
    return 0.5 * erfc(np.sqrt(d * meanGain * pOut / noisePower))


def packetErrorProb(code, meanGain, pOut):
    """
    Union bound on the error probability of an m-bit coded packet.

    The inner sum over the weight spectrum is clamped to 1 before raising to the m-th power.
    """
    terms = [(d, weight) for d, weight in code.weightSpectrum if d <= code.codedBits]
    if not terms:
        return 0.0
    distances = np.array([d for d, _ in terms], dtype=float)
    weights = np.array([weight for _, weight in terms])
    inner = float(np.sum(weights * bepBpsk(distances, meanGain, pOut, code.noisePower)))
    inner = min(1.0, inner)
    if inner >= 1.0:
        return 1.0
    return float(-math.expm1(code.codedBits * math.log1p(-inner)))


def pepAdaptive(partPeps):
    # a packet assembled from parts is as good as its worst part
    if len(partPeps) == 0:
        raise InvalidArgumentError("need at least one transmitted part")
    return max(partPeps)


@dataclass(frozen=True, eq=False)
class PepTable:
    matrix: np.ndarray

    def __post_init__(self):
        matrix = np.array(self.matrix, dtype=float)
        if matrix.ndim != 2 or matrix.shape[1] < 1:
            raise InvalidArgumentError(f"PEP table must be states x actions, got shape {matrix.shape}")
        if np.any(matrix < 0.0) or np.any(matrix > 1.0):
            raise InvalidArgumentError("PEP entries must lie in [0, 1]")
        if np.any(matrix[:, 0] != 1.0):
            raise InvalidArgumentError("PEP at action 0 must be 1")
        if np.any(np.diff(matrix, axis=1) > MONOTONE_SLACK):
            raise InvalidArgumentError("PEP must be non-increasing in the action level")
        matrix.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)

    @classmethod
    def build(cls, code, channel, energyConfig, maxAction):
        matrix = np.ones((channel.numStates, maxAction + 1))
        for action in range(1, maxAction + 1):
            pOut = transmitPowerForAction(action, energyConfig)
            for state in range(channel.numStates):
                matrix[state, action] = packetErrorProb(code, channel.meanGains[state], pOut)
        # guard against rounding wiggles in the last digit
        matrix = np.minimum.accumulate(matrix, axis=1)
        logging.info(f"PEP table for {channel.numStates} states and actions 0..{maxAction} built.")
        return cls(matrix)

    @classmethod
    def constant(cls, pep, numStates, maxAction):
        matrix = np.full((numStates, maxAction + 1), float(pep))
        matrix[:, 0] = 1.0
        return cls(matrix)

    @property
    def numStates(self):
        return self.matrix.shape[0]

    @property
    def maxAction(self):
        return self.matrix.shape[1] - 1

    def value(self, state, action):
        return float(self.matrix[state, min(action, self.maxAction)])

    def isMonotoneInGain(self, meanGains):
        order = np.argsort(meanGains)
        return bool(np.all(np.diff(self.matrix[order], axis=0) <= MONOTONE_SLACK))
