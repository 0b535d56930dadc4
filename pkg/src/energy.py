# # -----------------------------------------------------------------------------
# # Node power consumption, energy arrivals and battery dynamics
# # Author: ehlink developers
# # Date Created: 18-10-2026
# # -----------------------------------------------------------------------------

import logging
import math
from dataclasses import dataclass

import numpy as np

from exceptions import EnergyCausalityError, InvalidArgumentError

RX_ENERGY_UNITS = ("sample", "packet")
UNIT_SLACK = 1e-9


def isPowerOfTwo(value):
    return isinstance(value, (int, np.integer)) and value >= 1 and (value & (value - 1)) == 0


def amplifierXi(modulationOrder):
    # peak to average power ratio of square M-QAM
    root = math.sqrt(modulationOrder)
    return 3.0 * (root - 1.0) / (root + 1.0)


def alphaFromAmplifier(modulationOrder, drainEfficiency):
    if drainEfficiency <= 0:
        raise InvalidArgumentError(f"drain efficiency must be positive, got {drainEfficiency}")
    return amplifierXi(modulationOrder) / drainEfficiency - 1.0


@dataclass(frozen=True)
class LinkEnergyConfig:
    # powers in W, energies in J
    pOut: float
    batteryTxMax: float
    batteryRxMax: float
    alpha: float = 1.0
    pCircuitTx: float = 0.1
    pCircuitRx: float = 0.1
    pDec: float = 0.7
    pFb: float = 0.0
    slotSeconds: float = 1.0
    beta: int = 4
    modulationOrder: int = 2
    codedBits: int = 256
    rxEnergyUnit: str = "sample"

    def __post_init__(self):
        powers = {"pOut": self.pOut, "pCircuitTx": self.pCircuitTx, "pCircuitRx": self.pCircuitRx, "pDec": self.pDec, "pFb": self.pFb, "alpha": self.alpha}
        for name, value in powers.items():
            if value < 0:
                raise InvalidArgumentError(f"{name} must be >= 0, got {value}")
        if self.slotSeconds <= 0:
            raise InvalidArgumentError(f"slot duration must be positive, got {self.slotSeconds}")
        if not isPowerOfTwo(self.beta):
            raise InvalidArgumentError(f"beta must be a power of two, got {self.beta}")
        symbols = math.ceil(self.codedBits / math.log2(self.modulationOrder))
        if self.beta > symbols:
            raise InvalidArgumentError(f"beta = {self.beta} exceeds the {symbols} symbols of a packet")
        if self.rxEnergyUnit not in RX_ENERGY_UNITS:
            raise InvalidArgumentError(f"rxEnergyUnit must be one of {RX_ENERGY_UNITS}, got {self.rxEnergyUnit}")
        if self.pCircuitRx <= 0 and self.rxEnergyUnit == "sample":
            raise InvalidArgumentError("sampling based receiver units need a positive receiver circuit power")

    @property
    def eMinTx(self):
        pTx, _ = nodePowers(self)
        return pTx * self.slotSeconds / self.beta

    @property
    def eMinRx(self):
        if self.rxEnergyUnit == "sample":
            return self.pCircuitRx * self.slotSeconds / self.beta
        _, pRx = nodePowers(self)
        return pRx * self.slotSeconds / self.beta


def nodePowers(config):
    # total transmitter and receiver power draw per slot
    pTx = (1.0 + config.alpha) * config.pOut + config.pCircuitTx
    pRx = config.pDec + config.pCircuitRx + config.pFb
    return pTx, pRx


def transmitPowerForAction(action, config):
    # radiated power when `action` units of E_Tx^min are spent on a full packet
    consumed = action * config.eMinTx / config.slotSeconds
    return max(0.0, consumed - config.pCircuitTx) / (1.0 + config.alpha)


def floorUnits(energy, unit):
    return int(math.floor(energy / unit + UNIT_SLACK))


def ceilUnits(energy, unit):
    return int(math.ceil(energy / unit - UNIT_SLACK))


#################################
### HARVESTING PROCESSES ########
#################################

def checkProbability(name, value):
    if not 0.0 <= value <= 1.0:
        raise InvalidArgumentError(f"{name} must lie in [0, 1], got {value}")


@dataclass(frozen=True)
class BernoulliHarvest:
    rhoTx: float
    rhoRx: float
    amountTx: float
    amountRx: float

    def __post_init__(self):
        checkProbability("rhoTx", self.rhoTx)
        checkProbability("rhoRx", self.rhoRx)
        if self.amountTx < 0 or self.amountRx < 0:
            raise InvalidArgumentError("harvest amounts must be >= 0")

    def sample(self, rng, slotSeconds):
        draws = rng.random(2)
        return (self.amountTx if draws[0] < self.rhoTx else 0.0,
                self.amountRx if draws[1] < self.rhoRx else 0.0)

    def outcomeWeights(self, slotSeconds):
        # (p00, p01, p10, p11), first index transmitter, second receiver
        tx, rx = self.rhoTx, self.rhoRx
        return ((1 - tx) * (1 - rx), (1 - tx) * rx, tx * (1 - rx), tx * rx)

    def marginalRates(self, slotSeconds):
        return self.rhoTx, self.rhoRx

    def nominalAmounts(self):
        return self.amountTx, self.amountRx


@dataclass(frozen=True)
class CorrelatedBernoulliHarvest:
    p00: float
    p01: float
    p10: float
    p11: float
    amountTx: float
    amountRx: float

    def __post_init__(self):
        for name in ("p00", "p01", "p10", "p11"):
            checkProbability(name, getattr(self, name))
        total = self.p00 + self.p01 + self.p10 + self.p11
        if abs(total - 1.0) > 1e-12:
            raise InvalidArgumentError(f"joint harvest probabilities must sum to 1, got {total}")
        if self.amountTx < 0 or self.amountRx < 0:
            raise InvalidArgumentError("harvest amounts must be >= 0")

    def sample(self, rng, slotSeconds):
        outcome = int(np.searchsorted(np.cumsum(self.outcomeWeights(slotSeconds)), rng.random(), side="right"))
        outcome = min(outcome, 3)
        harvestTx, harvestRx = outcome >= 2, outcome % 2 == 1
        return (self.amountTx if harvestTx else 0.0, self.amountRx if harvestRx else 0.0)

    def outcomeWeights(self, slotSeconds):
        return (self.p00, self.p01, self.p10, self.p11)

    def marginalRates(self, slotSeconds):
        return self.p10 + self.p11, self.p01 + self.p11

    def nominalAmounts(self):
        return self.amountTx, self.amountRx


@dataclass(frozen=True)
class CompoundPoissonHarvest:
    # arrivals per second and mean energy of a single arrival (J)
    intensity: float
    meanAmountTx: float
    meanAmountRx: float

    def __post_init__(self):
        if self.intensity < 0 or not math.isfinite(self.intensity):
            raise InvalidArgumentError(f"arrival intensity must be finite and >= 0, got {self.intensity}")
        if self.meanAmountTx < 0 or self.meanAmountRx < 0:
            raise InvalidArgumentError("mean harvest amounts must be >= 0")

    @classmethod
    def fromRho(cls, rho, slotSeconds, meanAmountTx, meanAmountRx):
        # rho is the probability of at least one arrival in a slot
        checkProbability("rho", rho)
        rho = min(rho, 1.0 - 1e-12)
        return cls(-math.log1p(-rho) / slotSeconds, meanAmountTx, meanAmountRx)

    def sample(self, rng, slotSeconds):
        counts = rng.poisson(self.intensity * slotSeconds, size=2)
        means = np.array([self.meanAmountTx, self.meanAmountRx])
        amounts = np.where(counts > 0, rng.gamma(np.maximum(counts, 1), np.maximum(means, 1e-300)), 0.0)
        amounts = np.where(means > 0, amounts, 0.0)
        return float(amounts[0]), float(amounts[1])

    def marginalRates(self, slotSeconds):
        rate = -math.expm1(-self.intensity * slotSeconds)
        return rate, rate

    def outcomeWeights(self, slotSeconds):
        tx, rx = self.marginalRates(slotSeconds)
        return ((1 - tx) * (1 - rx), (1 - tx) * rx, tx * (1 - rx), tx * rx)

    def nominalAmounts(self):
        return self.meanAmountTx, self.meanAmountRx


def sampleArrivals(process, rng, slotSeconds):
    return process.sample(rng, slotSeconds)


#################################
### BATTERY #####################
#################################

@dataclass(frozen=True)
class Battery:
    level: int
    capacity: int
    harvestQuantum: int

    def __post_init__(self):
        if self.harvestQuantum < 0:
            raise InvalidArgumentError(f"harvest quantum must be >= 0, got {self.harvestQuantum}")
        if not 0 <= self.level <= self.capacity:
            raise InvalidArgumentError(f"battery level {self.level} outside [0, {self.capacity}]")


def nextLevel(level, spent, harvestUnits, capacity):
    if spent < 0:
        raise InvalidArgumentError(f"spent energy must be >= 0, got {spent}")
    if spent > level:
        raise EnergyCausalityError(f"spending {spent} units with only {level} stored")
    return min(level + harvestUnits - spent, capacity)


def batteryStep(battery, spent, harvested):
    # harvested is either a flag (one quantum) or an explicit number of units
    if isinstance(harvested, (bool, np.bool_)):
        units = battery.harvestQuantum if harvested else 0
    else:
        units = int(harvested)
    return Battery(nextLevel(battery.level, spent, units, battery.capacity), battery.capacity, battery.harvestQuantum)


#################################
### INTEGER UNITS ###############
#################################

@dataclass(frozen=True)
class LinkUnits:
    # every energy quantity of the link expressed in integer battery units
    beta: int
    eMinTx: float
    eMinRx: float
    txCapacity: int
    txHarvest: int
    rxCapacity: int
    rxHarvest: int
    samplingUnits: int
    decodeUnits: int
    feedbackUnits: int

    @property
    def fullPacketTxUnits(self):
        return self.beta

    @property
    def fullReceptionUnits(self):
        return self.beta * self.samplingUnits + self.decodeUnits + self.feedbackUnits

    def harvestUnits(self, txEnergy, rxEnergy):
        return floorUnits(txEnergy, self.eMinTx), floorUnits(rxEnergy, self.eMinRx)


def linkUnits(config, harvestTx, harvestRx):
    eMinTx, eMinRx = config.eMinTx, config.eMinRx
    samplingEnergy = config.pCircuitRx * config.slotSeconds / config.beta
    units = LinkUnits(
        beta=config.beta,
        eMinTx=eMinTx,
        eMinRx=eMinRx,
        txCapacity=floorUnits(config.batteryTxMax, eMinTx),
        txHarvest=floorUnits(harvestTx, eMinTx),
        rxCapacity=floorUnits(config.batteryRxMax, eMinRx),
        rxHarvest=floorUnits(harvestRx, eMinRx),
        samplingUnits=ceilUnits(samplingEnergy, eMinRx),
        decodeUnits=ceilUnits(config.pDec * config.slotSeconds, eMinRx),
        feedbackUnits=ceilUnits(config.pFb * config.slotSeconds, eMinRx),
    )
    exact = {
        "receiver harvest": harvestRx / eMinRx,
        "receiver capacity": config.batteryRxMax / eMinRx,
        "transmitter harvest": harvestTx / eMinTx,
        "decode energy": config.pDec * config.slotSeconds / eMinRx,
        "sampling energy": samplingEnergy / eMinRx,
    }
    for name, value in exact.items():
        if abs(value - round(value)) > 1e-6:
            logging.warning(f"{name} is {value:.4f} battery units; rounded for the integer battery model.")
    logging.info(f"Battery units: Tx {units.txCapacity} (harvest {units.txHarvest}), Rx {units.rxCapacity} (harvest {units.rxHarvest}), decode {units.decodeUnits}.")
    return units
