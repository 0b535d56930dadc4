# # -----------------------------------------------------------------------------
# # Aggregation of trial metrics into result tables
# # Author: ehlink developers
# # Date Created: 18-10-2026
# # -----------------------------------------------------------------------------

import logging
import math

import numpy as np
import pandas as pd

from utils import Utils


class Evaluation:
    COLUMNS = ["rho", "scheme", "policy", "beta", "K", "metric", "mean", "stderr", "n"]
    METRICS = ("avg_packet_time", "pdp", "spectral_efficiency", "avg_cost")

    def __init__(self):
        pass

    @staticmethod
    def meanAndStderr(values):
        # standard error of the mean; undefined for a single replication
        values = np.asarray(values, dtype=float)
        if values.size == 0:
            return math.nan, math.nan
        mean = float(np.mean(values))
        if values.size < 2 or not np.all(np.isfinite(values)):
            return mean, math.nan
        return mean, float(np.std(values, ddof=1) / math.sqrt(values.size))

    @staticmethod
    def summarize(metricsList, labels):
        rows = []
        for metric in Evaluation.METRICS:
            mean, stderr = Evaluation.meanAndStderr([m.value(metric) for m in metricsList])
            rows.append({**labels, "metric": metric, "mean": mean, "stderr": stderr, "n": len(metricsList)})
        return rows

    @staticmethod
    def pairedDifferences(baseline, other, labels):
        # same seeds on both sides, so the per-seed difference carries the comparison
        if len(baseline) != len(other):
            raise ValueError(f"paired comparison needs equal replication counts, got {len(baseline)} and {len(other)}")
        rows = []
        for metric in Evaluation.METRICS:
            differences = [o.value(metric) - b.value(metric) for b, o in zip(baseline, other)]
            mean, stderr = Evaluation.meanAndStderr(differences)
            rows.append({**labels, "metric": f"delta_{metric}", "mean": mean, "stderr": stderr, "n": len(differences)})
        return rows

    @staticmethod
    def metricTable(results, metric):
        # wide view: one row per rho, one column per scheme/policy pair
        subset = results[results["metric"] == metric]
        if subset.empty:
            raise ValueError(f"no rows for metric {metric}")
        subset = subset.assign(series=subset["scheme"] + " " + subset["policy"] + " K=" + subset["K"].astype(str))
        return subset.pivot_table(index="rho", columns="series", values="mean", sort=False)

    @staticmethod
    def writeResults(results, outputPath):
        Utils.ensureFolderExists(Utils.parentFolder(outputPath))
        results.to_csv(outputPath, index=False, float_format="%.10g")
        logging.info(f"{len(results)} result rows written to {outputPath}.")

    @staticmethod
    def readResults(inputPath):
        results = pd.read_csv(inputPath)
        missing = [column for column in Evaluation.COLUMNS if column not in results.columns]
        if missing:
            raise ValueError(f"{inputPath} lacks result columns {missing}")
        return results


if __name__ == "__main__":
    # SETTINGS
    resultsPath = "results/fig3.csv"

    # FUNCTION CALLS
    Utils.initLogging(True)
    table = Evaluation.metricTable(Evaluation.readResults(resultsPath), "avg_packet_time")
    print(table)
