# # -----------------------------------------------------------------------------
# # Figure output: gnuplot scripts and matplotlib renders of result tables
# # Author: ehlink developers
# # Date Created: 18-10-2026
# # -----------------------------------------------------------------------------

import logging
import os

import matplotlib
matplotlib.use("Agg")
from matplotlib import pyplot as plt

from evaluation import Evaluation
from utils import Utils

AXIS_LABELS = {
    "avg_packet_time": "Average packet time [slots]",
    "pdp": "Packet drop probability",
    "spectral_efficiency": "Spectral efficiency",
    "avg_cost": "Average cost per slot",
}


class Ploting:
    @staticmethod
    def seriesData(results, metric):
        # one (x, mean, stderr) block per scheme/policy/K series
        table = results[results["metric"] == metric]
        series = {}
        for (scheme, policy, maxAttempts), group in table.groupby(["scheme", "policy", "K"], sort=False):
            group = group.sort_values("rho")
            series[f"{scheme} {policy} K={maxAttempts}"] = group[["rho", "mean", "stderr"]]
        return series

    @staticmethod
    def gnuplotScript(results, metric, scriptPath):
        """
        Writes a .dat file per series next to scriptPath and a gnuplot script plotting
        them with error bars.
        """
        Utils.ensureFolderExists(Utils.parentFolder(scriptPath))
        name, _ = Utils.splitNameFromExtension(scriptPath)
        folder = os.path.dirname(scriptPath)
        plotLines = []
        for index, (label, data) in enumerate(Ploting.seriesData(results, metric).items()):
            dataName = f"{name}_{metric}_{index}.dat"
            data.fillna(0.0).to_csv(os.path.join(folder, dataName), sep=" ", header=False, index=False)
            plotLines.append(f"'{dataName}' using 1:2:3 with yerrorlines title '{label}'")
        if not plotLines:
            raise ValueError(f"no series for metric {metric}")

        script = [
            "set terminal pngcairo size 900,600",
            f"set output '{name}_{metric}.png'",
            "set xlabel 'Harvesting probability rho'",
            f"set ylabel '{AXIS_LABELS.get(metric, metric)}'",
            "set grid",
            "set key outside right",
        ]
        if metric == "pdp":
            script.append("set logscale y")
        script.append("plot " + ", \\\n     ".join(plotLines))
        with open(scriptPath, "w") as file:
            file.write("\n".join(script) + "\n")
        logging.info(f"Gnuplot script written to {scriptPath}.")

    @staticmethod
    def metricCurves(results, metric, filename, analytical=None):
        fig, ax = plt.subplots(figsize=(8, 5))
        for label, data in Ploting.seriesData(results, metric).items():
            ax.errorbar(data["rho"], data["mean"], yerr=data["stderr"].fillna(0.0), marker="o", linewidth=2, capsize=3, label=label)
        if analytical is not None:
            for policy, group in analytical.groupby("policy", sort=False):
                for column, style in (("chain", "--"), ("bound", ":")):
                    ax.plot(group["rho"], group[column], linestyle=style, label=f"{policy} {column}")
        ax.set_xlabel("Harvesting probability rho")
        ax.set_ylabel(AXIS_LABELS.get(metric, metric))
        if metric == "pdp":
            ax.set_yscale("log")
        ax.grid(True, alpha=0.3)
        ax.legend()
        plt.tight_layout()
        plt.savefig(filename)
        plt.close(fig)
        logging.info(f"Figure written to {filename}.")


if __name__ == "__main__":
    # SETTINGS
    resultsPath = "results/fig3.csv"
    metric = "avg_packet_time"

    # FUNCTION CALLS
    Utils.initLogging(True)
    Ploting.metricCurves(Evaluation.readResults(resultsPath), metric, "results/fig3_avg_packet_time.png")
