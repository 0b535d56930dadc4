# # -----------------------------------------------------------------------------
# # Named experiments: scheme comparisons over the harvesting probability grid
# # Author: ehlink developers
# # Date Created: 18-10-2026
# # -----------------------------------------------------------------------------

import logging
import os
from dataclasses import dataclass

import pandas as pd

from analysis import AnalysisModel, boundAveragePdp, buildXi, chainAveragePdp
from evaluation import Evaluation
from exceptions import EhLinkError, InvalidArgumentError
from ploting import Ploting
from simulation import LinkSimulator, compareSchemes, resolveConfig, schemeLabel
from utils import Utils

SIM_METRICS = ("avg_packet_time", "pdp", "spectral_efficiency")
EQUAL_AND_GREEDY = (("ACK/NAK", "greedy"), ("ACK/NAK", "equal:5"), ("ACK/NAK", "equal:15"),
                    ("ACK/NAKx", "greedy"), ("ACK/NAKx", "equal:5"), ("ACK/NAKx", "equal:15"))
REDUCED_STATE_OVERRIDES = (("harvestTxRatio", 2.0), ("batteryTxMaxRatio", 3.0), ("harvestRxRatio", 1.2),
                           ("batteryRxMaxRatio", 2.0), ("pDecRatio", 5.0), ("channelPerFrame", True))


@dataclass(frozen=True)
class ExperimentSpec:
    name: str
    schemes: tuple = ()
    metrics: tuple = SIM_METRICS
    overrides: tuple = ()
    retransmissions: tuple = ()
    analytical: bool = False

    def configFor(self, config):
        return config.withOverrides(**dict(self.overrides)) if self.overrides else config

    def schemesFor(self, config):
        # custom runs the configured scheme and policy only
        return self.schemes or ((schemeLabel(config.beta), config.policy),)


EXPERIMENTS = {
    "fig2": ExperimentSpec("fig2", (("ACK/NAKx", "mlph"), ("ACK/NAKx", "greedy")), ("pdp",), (("harvestRxRatio", 1.2),), (2, 3)),
    "fig3": ExperimentSpec("fig3", EQUAL_AND_GREEDY, ("avg_packet_time",), (("maxRetransmissions", 4),)),
    "fig4": ExperimentSpec("fig4", EQUAL_AND_GREEDY, ("pdp",), (("maxRetransmissions", 4),)),
    "fig5": ExperimentSpec("fig5", EQUAL_AND_GREEDY, ("spectral_efficiency",), (("maxRetransmissions", 4),)),
    "fig6": ExperimentSpec("fig6", (("ACK/NAKx", "equal:5"), ("ACK/NAKx", "equal:15")), ("pdp",), REDUCED_STATE_OVERRIDES, analytical=True),
    "fig7": ExperimentSpec("fig7", (("ACK/NAK", "greedy"), ("ACK/NAK", "equal:5"), ("ACK/NAKx", "greedy"), ("ACK/NAKx", "equal:5")),
                           SIM_METRICS, (("harvestModel", "poisson"),)),
    "custom": ExperimentSpec("custom"),
}


def experimentSpec(name):
    if name not in EXPERIMENTS:
        raise InvalidArgumentError(f"unknown experiment '{name}', expected one of {sorted(EXPERIMENTS)}")
    return EXPERIMENTS[name]


def analyticalTable(config, policies, rhoValues):
    # chain and bound PDP for every fixed power policy on the grid
    rows = []
    for policyName in policies:
        for rho in rhoValues:
            schemeCfg = resolveConfig(config.withOverrides(policy=policyName)).withRho(rho)
            model = AnalysisModel.fromConfig(schemeCfg)
            xiByState = [buildXi(model, g) for g in range(model.channel.numStates)]
            chainPdp = chainAveragePdp(model, xiByState)[0]
            boundPdp = boundAveragePdp(model, xiByState)[0]
            rows.append({"rho": rho, "policy": policyName, "beta": schemeCfg.beta, "K": schemeCfg.maxRetransmissions,
                         "chain": chainPdp, "bound": boundPdp})
            logging.info(f"Analysis {policyName} at rho = {rho:g}: chain {chainPdp:.5f}, bound {boundPdp:.5f}.")
    return pd.DataFrame(rows)


def runExperiment(spec, config, outputDirectory, rhoValues=None, replications=None, workers=None, png=False, tracePath=None):
    """
    Runs a named experiment and writes <name>.csv and <name>.gp (one extra script per
    further metric) into outputDirectory.

    Returns the paths written.
    """
    Utils.ensureFolderExists(outputDirectory)
    base = spec.configFor(config)
    rhoValues = list(rhoValues or base.rhoGrid)
    schemes = spec.schemesFor(base)
    written = []
    try:
        tables = []
        for maxAttempts in spec.retransmissions or (base.maxRetransmissions,):
            logging.info(f"Experiment {spec.name}: K = {maxAttempts}, {len(schemes)} schemes, {len(rhoValues)} grid points.")
            tables.append(compareSchemes(base.withOverrides(maxRetransmissions=maxAttempts), schemes, rhoValues, replications, workers))
        results = pd.concat(tables, ignore_index=True)

        analytical = None
        if spec.analytical:
            analytical = analyticalTable(base, [policy for _, policy in schemes], rhoValues)
            analyticalPath = os.path.join(outputDirectory, "analytical.csv")
            analytical.to_csv(analyticalPath, index=False, float_format="%.10g")
            written.append(analyticalPath)

        if tracePath:
            _, trace = LinkSimulator(base).runTrialWithTrace(base.seed)
            trace.to_csv(tracePath, index=False)
            written.append(tracePath)
    except EhLinkError as e:
        logging.error(f"Experiment {spec.name} failed: {e}")
        raise

    csvPath = os.path.join(outputDirectory, f"{spec.name}.csv")
    Evaluation.writeResults(results, csvPath)
    written.append(csvPath)
    for position, metric in enumerate(spec.metrics):
        suffix = "" if position == 0 else f"_{metric}"
        scriptPath = os.path.join(outputDirectory, f"{spec.name}{suffix}.gp")
        Ploting.gnuplotScript(results, metric, scriptPath)
        written.append(scriptPath)
        if png:
            pngPath = os.path.join(outputDirectory, f"{spec.name}_{metric}.png")
            Ploting.metricCurves(results, metric, pngPath, analytical if metric == "pdp" else None)
            written.append(pngPath)
    return written
