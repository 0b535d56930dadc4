# # -----------------------------------------------------------------------------
# # Command line entry point of the energy harvesting link toolkit (ehlink)
# # Author: ehlink developers
# # Date Created: 18-10-2026
# # -----------------------------------------------------------------------------

import argparse
import logging
import os
import sys

import numpy as np
import pandas as pd

from analysis import AnalysisModel, analyzeLink, buildXi, dumpXi
from config import SimConfig, parseConfig
from evaluation import Evaluation
from exceptions import ConfigError, EhLinkError
from experiments import EXPERIMENTS, experimentSpec, runExperiment
from simulation import compareSchemes, resolveConfig, solvePolicyTable, sweep
from utils import Utils

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


class EhLink:
    def __init__(self, arguments):
        # SETTINGS
        self.arguments = arguments
        self.outputDirectory = arguments.out

        # FUNCTION CALLS
        Utils.initLogging(arguments.log or arguments.verbose, arguments.verbose)
        self.config = self.loadConfig()

    def loadConfig(self):
        # file values first, command line flags on top
        config = parseConfig(self.arguments.config) if self.arguments.config else SimConfig()
        flags = {
            "seed": self.arguments.seed,
            "replications": self.arguments.replications,
            "policy": self.arguments.policy,
            "beta": self.arguments.beta,
            "horizonSlots": self.arguments.horizon,
            "frames": self.arguments.frames,
            "workers": self.arguments.workers,
        }
        overrides = {name: value for name, value in flags.items() if value is not None}
        try:
            return config.withOverrides(**overrides) if overrides else config
        except ConfigError as e:
            raise ConfigError(f"command line: {e}") from e

    def rhoValues(self):
        if self.arguments.rho:
            try:
                return Utils.parseFloatList(self.arguments.rho)
            except ValueError as e:
                raise ConfigError(f"--rho: {e}") from e
        return list(self.config.rhoGrid)

    def outputPath(self, fileName):
        Utils.ensureFolderExists(self.outputDirectory)
        return os.path.join(self.outputDirectory, fileName)

    #################################
    ### COMMANDS ####################
    #################################

    def run(self):
        spec = experimentSpec(self.arguments.experiment)
        tracePath = self.outputPath(self.arguments.trace) if self.arguments.trace else None
        written = runExperiment(spec, self.config, self.outputDirectory, self.rhoValues() if self.arguments.rho else None,
                                png=self.arguments.png, tracePath=tracePath)
        for path in written:
            print(path)

    def sweep(self):
        results = sweep(self.config, self.rhoValues())
        Evaluation.writeResults(results, self.outputPath("sweep.csv"))
        print(results.to_string(index=False))

    def compare(self):
        schemes = parseSchemes(self.arguments.schemes)
        results = compareSchemes(self.config, schemes, self.rhoValues())
        Evaluation.writeResults(results, self.outputPath("compare.csv"))
        print(results.to_string(index=False))

    def solve(self):
        table, results = solvePolicyTable(self.config, self.rhoValues() if self.arguments.rho else None)
        # --out names the table file when it carries an extension, otherwise its folder
        outputPath = self.outputDirectory if os.path.splitext(self.outputDirectory)[1] else self.outputPath("policy.npz")
        Utils.ensureFolderExists(Utils.parentFolder(outputPath))
        table.save(outputPath)
        for rho, result in zip(table.rhoGrid, results):
            print(f"rho={rho:g} average_cost={result.averageCost:.6g} iterations={result.iterations} bellman_residual={result.bellmanResidual:.3e}")
        print(f"entries={table.entries} memory_bits={table.memoryBits}")
        print(outputPath)

    def analyze(self):
        rows = []
        rhoValues = self.rhoValues() if self.arguments.rho else [self.config.rhoTx]
        for rho in rhoValues:
            config = resolveConfig(self.config).withRho(rho) if self.arguments.rho else resolveConfig(self.config)
            model = AnalysisModel.fromConfig(config)
            report = analyzeLink(model)
            rows.append({"rho": rho, "chain": report.chainPdp, "bound": report.boundPdp})
            print(f"rho={rho:g} pdp_chain={report.chainPdp:.10g} pdp_bound={report.boundPdp:.10g}")
            if self.arguments.pairs:
                report.pairTable(model).to_csv(self.outputPath(f"analysis_pairs_rho{rho:g}.csv"), index=False)
            if self.arguments.dump_xi:
                self.dumpTransitions(model, rho)
        pd.DataFrame(rows).to_csv(self.outputPath("analysis.csv"), index=False, float_format="%.10g")

    def dumpTransitions(self, model, rho):
        # one CSV per channel state next to the --dump-xi path
        basePath = self.outputPath(self.arguments.dump_xi)
        for g in range(model.channel.numStates):
            path = Utils.siblingPath(basePath, f"_rho{rho:g}_g{g}.csv")
            dumpXi(model, buildXi(model, g), path)
            print(path)


def parseSchemes(text):
    # "ACK/NAK:equal:15,ACK/NAKx:greedy"
    schemes = []
    for item in text.split(","):
        if ":" not in item:
            raise ConfigError(f"scheme '{item}' needs the form <scheme>:<policy>")
        scheme, policy = item.strip().split(":", 1)
        schemes.append((scheme, policy))
    return schemes


def buildParser():
    parser = argparse.ArgumentParser(prog="ehlink", description="Energy harvesting ACK/NAKx link: simulation, policies and drop analysis.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value configuration file")
    common.add_argument("--out", default="results", help="output folder")
    common.add_argument("--seed", type=int, help="base seed of the replications (config default 42)")
    common.add_argument("--replications", type=int)
    common.add_argument("--policy", help="greedy, mlph or equal:<mW>")
    common.add_argument("--beta", type=int)
    common.add_argument("--rho", help="comma separated harvesting probabilities")
    common.add_argument("--horizon", type=int, help="horizon in slots for the spectral efficiency")
    common.add_argument("--frames", type=int)
    common.add_argument("--workers", type=int)
    common.add_argument("--log", action="store_true", help="log progress to the console")
    common.add_argument("--verbose", action="store_true", help="debug logging")

    commands = parser.add_subparsers(dest="command", required=True)
    run = commands.add_parser("run", parents=[common], help="run a named experiment")
    run.add_argument("experiment", choices=sorted(EXPERIMENTS))
    run.add_argument("--png", action="store_true", help="render the figures with matplotlib")
    run.add_argument("--trace", help="per-slot trace CSV of one trial")
    commands.add_parser("sweep", parents=[common], help="sweep the harvesting probability with the configured policy")
    compare = commands.add_parser("compare", parents=[common], help="compare scheme/policy pairs on paired seeds")
    compare.add_argument("--schemes", default="ACK/NAK:equal:15,ACK/NAKx:equal:15,ACK/NAKx:greedy")
    commands.add_parser("solve", parents=[common], help="solve the MDP and store the MLPH policy table")
    analyze = commands.add_parser("analyze", parents=[common], help="Markov-chain drop probability under fixed power")
    analyze.add_argument("--pairs", action="store_true", help="also write per battery pair tables")
    analyze.add_argument("--dump-xi", dest="dump_xi", metavar="PATH", help="write the slot transition matrix of every channel state (small models only)")
    return parser


def main(argv=None):
    arguments = buildParser().parse_args(argv)
    try:
        cli = EhLink(arguments)
        getattr(cli, arguments.command)()
    except (ConfigError, FileNotFoundError) as e:
        logging.critical(f"Configuration error: {e}")
        print(f"ehlink: configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (EhLinkError, RuntimeError, ValueError, np.linalg.LinAlgError) as e:
        logging.critical(f"{arguments.command} failed: {e}")
        print(f"ehlink: {arguments.command} failed: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
