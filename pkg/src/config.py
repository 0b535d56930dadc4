# # -----------------------------------------------------------------------------
# # Simulation configuration: defaults, config file parsing and emission
# # Author: ehlink developers
# # Date Created: 18-10-2026
# # -----------------------------------------------------------------------------

import dataclasses
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from channel import ChannelModel
from energy import (BernoulliHarvest, CompoundPoissonHarvest, CorrelatedBernoulliHarvest,
                    LinkEnergyConfig, isPowerOfTwo, linkUnits, nodePowers)
from exceptions import ConfigError, EhLinkError
from packetError import DEFAULT_SPECTRUM_FILE, CodeSpec, PepTable
from policy import parsePolicyName

HARVEST_MODELS = ("bernoulli", "correlated", "poisson")
DEFAULT_RHO_GRID = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)


def option(key, default, check=None):
    # a config entry: file key, default value, optional range check returning an error text
    if isinstance(default, (tuple, list)):
        return field(default=tuple(default), metadata={"key": key, "check": check})
    return field(default=default, metadata={"key": key, "check": check})


positive = lambda v: None if v > 0 else "must be positive"
nonNegative = lambda v: None if v >= 0 else "must be >= 0"
probability = lambda v: None if 0.0 <= v <= 1.0 else "must lie in [0, 1]"
atLeastOne = lambda v: None if v >= 1 else "must be >= 1"
oneOf = lambda *choices: (lambda v: None if v in choices else f"must be one of {choices}")


def checkPowerOfTwo(value):
    return None if isPowerOfTwo(value) else "must be a power of two"


def checkRhoGrid(values):
    if not values:
        return "needs at least one value"
    return None if all(0.0 <= v <= 1.0 for v in values) else "values must lie in [0, 1]"


def checkPolicy(value):
    try:
        parsePolicyName(value)
    except EhLinkError as e:
        return str(e)
    return None


@dataclass(frozen=True)
class SimConfig:
    # CHANNEL
    numChannelStates: int = option("num_channel_states", 3, atLeastOne)
    dopplerNorm: float = option("doppler_norm", 0.05, positive)
    meanChannelGain: float = option("mean_channel_gain", 1.0, positive)
    transitionMatrix: tuple = option("transition_matrix", ())
    # CODE
    infoBits: int = option("info_bits", 128, atLeastOne)
    codeRate: float = option("code_rate", 0.5, lambda v: None if 0 < v <= 1 else "must lie in (0, 1]")
    modulationOrder: int = option("modulation_order", 2, checkPowerOfTwo)
    weightSpectrumFile: str = option("weight_spectrum_file", "")
    noisePowerMw: float = option("noise_power_mw", 5.0, positive)
    # PROTOCOL
    maxRetransmissions: int = option("max_retransmissions", 4, atLeastOne)
    beta: int = option("beta", 4, checkPowerOfTwo)
    slotS: float = option("slot_s", 1.0, positive)
    horizonSlots: int = option("horizon_slots", 150, atLeastOne)
    frames: int = option("frames", 100000, atLeastOne)
    maxSlots: int = option("max_slots", 0, nonNegative)
    # ENERGY
    alpha: float = option("alpha", 1.0, nonNegative)
    pOutMw: float = option("p_out_mw", 5.0, nonNegative)
    pCircuitTxW: float = option("p_circuit_tx_w", 0.1, nonNegative)
    pCircuitRxW: float = option("p_circuit_rx_w", 0.1, positive)
    pDecRatio: float = option("p_dec_ratio", 7.0, nonNegative)
    pFbW: float = option("p_fb_w", 0.0, nonNegative)
    batteryTxMaxRatio: float = option("battery_tx_max_ratio", 6.0, nonNegative)
    batteryRxMaxRatio: float = option("battery_rx_max_ratio", 3.0, nonNegative)
    harvestTxRatio: float = option("harvest_tx_ratio", 3.0, nonNegative)
    harvestRxRatio: float = option("harvest_rx_ratio", 1.5, nonNegative)
    initialBattery: str = option("initial_battery", "full", oneOf("full", "empty"))
    rxEnergyUnit: str = option("rx_energy_unit", "sample", oneOf("sample", "packet"))
    # HARVESTING
    harvestModel: str = option("harvest_model", "bernoulli", oneOf(*HARVEST_MODELS))
    rhoTx: float = option("rho_tx", 0.5, probability)
    rhoRx: float = option("rho_rx", 0.5, probability)
    p00: float = option("p00", 0.25, probability)
    p01: float = option("p01", 0.25, probability)
    p10: float = option("p10", 0.25, probability)
    p11: float = option("p11", 0.25, probability)
    poissonMeanTxRatio: float = option("poisson_mean_tx_ratio", 1.5, nonNegative)
    poissonMeanRxRatio: float = option("poisson_mean_rx_ratio", 0.75, nonNegative)
    # POLICY
    policy: str = option("policy", "greedy", checkPolicy)
    kappa: int = option("kappa", 10, atLeastOne)
    rhoGrid: tuple = option("rho_grid", DEFAULT_RHO_GRID, checkRhoGrid)
    viTolerance: float = option("vi_tolerance", 1e-8, positive)
    viMaxIterations: int = option("vi_max_iterations", 100000, atLeastOne)
    viAperiodicity: float = option("vi_aperiodicity", 0.5, lambda v: None if 0 < v <= 1 else "must lie in (0, 1]")
    stateCap: int = option("state_cap", 20000, atLeastOne)
    costMode: str = option("cost_mode", "pep", oneOf("pep", "nak_weighted"))
    outageCost: float = option("outage_cost", 1.0, probability)
    # ANALYSIS
    xiAccumulation: str = option("xi_accumulation", "cumulative", oneOf("cumulative", "incremental"))
    caseIiiLiteral: bool = option("case_iii_literal", False)
    # RUN
    channelPerFrame: bool = option("channel_per_frame", False)
    seed: int = option("seed", 42, nonNegative)
    replications: int = option("replications", 4, atLeastOne)
    workers: int = option("workers", 1, atLeastOne)

    def __post_init__(self):
        for item in dataclasses.fields(self):
            message = checkValue(item, getattr(self, item.name))
            if message:
                raise ConfigError(f"{item.metadata['key']} {message}")
        if self.harvestModel == "correlated":
            total = self.p00 + self.p01 + self.p10 + self.p11
            if abs(total - 1.0) > 1e-12:
                raise ConfigError(f"p00 + p01 + p10 + p11 must equal 1, got {total}")
        symbols = math.ceil(self.codedBits / math.log2(self.modulationOrder))
        if self.beta > symbols:
            raise ConfigError(f"beta = {self.beta} exceeds the {symbols} symbols of a packet")
        if self.transitionMatrix and len(self.transitionMatrix) != self.numChannelStates:
            raise ConfigError(f"transition_matrix has {len(self.transitionMatrix)} rows for {self.numChannelStates} channel states")

    #################################
    ### DERIVED MODELS ##############
    #################################

    @property
    def codedBits(self):
        return int(round(self.infoBits / self.codeRate))

    @property
    def effectiveMaxSlots(self):
        return self.maxSlots if self.maxSlots > 0 else 20 * self.maxRetransmissions * self.frames

    @property
    def policyKind(self):
        return parsePolicyName(self.policy)

    def nodePowers(self):
        unbounded = LinkEnergyConfig(pOut=self.pOutMw / 1000.0, batteryTxMax=0.0, batteryRxMax=0.0, alpha=self.alpha,
                                     pCircuitTx=self.pCircuitTxW, pCircuitRx=self.pCircuitRxW, pDec=self.pDecRatio * self.pCircuitRxW,
                                     pFb=self.pFbW, slotSeconds=self.slotS, beta=self.beta, modulationOrder=self.modulationOrder,
                                     codedBits=self.codedBits, rxEnergyUnit=self.rxEnergyUnit)
        return unbounded, nodePowers(unbounded)

    def energyConfig(self):
        unbounded, (pTx, pRx) = self.nodePowers()
        return dataclasses.replace(unbounded, batteryTxMax=self.batteryTxMaxRatio * pTx * self.slotS,
                                   batteryRxMax=self.batteryRxMaxRatio * pRx * self.slotS)

    def harvestProcess(self):
        _, (pTx, pRx) = self.nodePowers()
        amountTx = self.harvestTxRatio * pTx * self.slotS
        amountRx = self.harvestRxRatio * pRx * self.slotS
        if self.harvestModel == "bernoulli":
            return BernoulliHarvest(self.rhoTx, self.rhoRx, amountTx, amountRx)
        if self.harvestModel == "correlated":
            return CorrelatedBernoulliHarvest(self.p00, self.p01, self.p10, self.p11, amountTx, amountRx)
        return CompoundPoissonHarvest.fromRho(self.rhoTx, self.slotS, self.poissonMeanTxRatio * pTx * self.slotS,
                                              self.poissonMeanRxRatio * pRx * self.slotS)

    def units(self):
        return linkUnits(self.energyConfig(), *self.harvestProcess().nominalAmounts())

    def channelModel(self):
        matrix = np.array(self.transitionMatrix, dtype=float) if self.transitionMatrix else None
        return ChannelModel.build(self.numChannelStates, self.meanChannelGain, self.dopplerNorm, matrix)

    def codeSpec(self):
        spectrumFile = self.weightSpectrumFile or DEFAULT_SPECTRUM_FILE
        return CodeSpec.fromFile(self.infoBits, self.codeRate, self.noisePowerMw / 1000.0, spectrumFile, self.modulationOrder)

    def pepTable(self, channel=None):
        channel = channel or self.channelModel()
        return PepTable.build(self.codeSpec(), channel, self.energyConfig(), self.units().txCapacity)

    def withRho(self, rho):
        # one harvesting probability for both nodes; correlated harvesting falls back to independent draws
        if self.harvestModel == "correlated":
            return dataclasses.replace(self, rhoTx=rho, rhoRx=rho, p00=(1 - rho) ** 2, p01=rho * (1 - rho),
                                       p10=rho * (1 - rho), p11=1.0 - (1 - rho) ** 2 - 2 * rho * (1 - rho))
        return dataclasses.replace(self, rhoTx=rho, rhoRx=rho)

    def withOverrides(self, **overrides):
        return dataclasses.replace(self, **overrides)


#################################
### PARSING #####################
#################################

FIELDS_BY_KEY = {item.metadata["key"]: item for item in dataclasses.fields(SimConfig)}


def checkValue(item, value):
    check = item.metadata.get("check")
    return check(value) if check else None


def parseValue(item, text):
    text = text.strip()
    if item.type is bool:
        if text.lower() in ("true", "yes", "1"):
            return True
        if text.lower() in ("false", "no", "0"):
            return False
        raise ValueError(f"expected true or false, got '{text}'")
    if item.type is int:
        number = float(text)
        if not number.is_integer():
            raise ValueError(f"expected an integer, got '{text}'")
        return int(number)
    if item.type is float:
        return float(text)
    if item.type is tuple:
        if not text:
            return ()
        if item.name == "transitionMatrix":
            return tuple(tuple(float(v) for v in row.split(",")) for row in text.split(";"))
        return tuple(float(v) for v in text.split(","))
    return text


def formatValue(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        if value and isinstance(value[0], tuple):
            return "; ".join(", ".join(repr(float(v)) for v in row) for row in value)
        return ", ".join(repr(float(v)) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def parseConfigText(text, path="<config>"):
    values = {}
    for lineNumber, rawLine in enumerate(text.splitlines(), start=1):
        content = rawLine.split("#", 1)[0].strip()
        if not content:
            continue
        if "=" not in content:
            raise ConfigError(f"expected 'key = value', got '{content}'", lineNumber, path)
        key, rawValue = (part.strip() for part in content.split("=", 1))
        keys = ["rho_tx", "rho_rx"] if key == "rho" else [key]
        for name in keys:
            if name not in FIELDS_BY_KEY:
                raise ConfigError(f"unknown key '{key}'", lineNumber, path)
            item = FIELDS_BY_KEY[name]
            try:
                value = parseValue(item, rawValue)
            except ValueError as e:
                raise ConfigError(f"{key}: {e}", lineNumber, path) from e
            message = checkValue(item, value)
            if message:
                raise ConfigError(f"{key} = {rawValue} {message}", lineNumber, path)
            values[item.name] = value
    try:
        config = SimConfig(**values)
    except ConfigError as e:
        raise ConfigError(str(e), None, path) from e
    logging.info(f"Configuration read from {path} ({len(values)} keys set).")
    return config


def parseConfig(path):
    try:
        with open(path, "r") as file:
            text = file.read()
    except OSError as e:
        raise ConfigError(f"config file could not be read: {e}", None, path) from e
    return parseConfigText(text, path)


def emitConfig(config):
    lines = ["# ehlink configuration"]
    for item in dataclasses.fields(config):
        lines.append(f"{item.metadata['key']} = {formatValue(getattr(config, item.name))}")
    return "\n".join(lines) + "\n"


def writeConfig(config, path):
    with open(path, "w") as file:
        file.write(emitConfig(config))
