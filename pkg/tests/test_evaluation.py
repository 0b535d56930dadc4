import math

import pandas as pd
import pytest

from evaluation import Evaluation
from ploting import Ploting
from simulation import Metrics


def metrics(pdp, packetTime=2.0):
    return Metrics(avgPacketTime=packetTime, pdp=pdp, spectralEfficiency=1.0 - pdp, avgCost=0.1,
                   slotCount=10, frameCount=5, delivered=4, dropped=1, frameSlotTotal=10)


def test_mean_and_stderr():
    mean, stderr = Evaluation.meanAndStderr([1.0, 2.0, 3.0, 4.0])
    assert mean == 2.5
    assert stderr == pytest.approx(math.sqrt(5.0 / 3.0) / 2.0)
    assert math.isnan(Evaluation.meanAndStderr([1.0])[1])


def test_stderr_shrinks_with_replications():
    values = [0.1, 0.3] * 32
    wide = Evaluation.meanAndStderr(values[:4])[1]
    narrow = Evaluation.meanAndStderr(values)[1]
    assert narrow < wide / 3.0


def test_paired_differences():
    baseline = [metrics(0.2), metrics(0.4)]
    other = [metrics(0.1), metrics(0.2)]
    rows = Evaluation.pairedDifferences(baseline, other, {"rho": 0.5})
    pdpRow = next(r for r in rows if r["metric"] == "delta_pdp")
    assert pdpRow["mean"] == pytest.approx(-0.15)
    with pytest.raises(ValueError):
        Evaluation.pairedDifferences(baseline, other[:1], {})


def test_results_round_trip_and_plot_script(tmp_path):
    labels = {"rho": 0.5, "scheme": "ACK/NAKx", "policy": "greedy", "beta": 4, "K": 4}
    results = pd.DataFrame(Evaluation.summarize([metrics(0.2), metrics(0.3)], labels), columns=Evaluation.COLUMNS)
    path = tmp_path / "results" / "fig4.csv"
    Evaluation.writeResults(results, str(path))
    loaded = Evaluation.readResults(str(path))
    assert list(loaded.columns) == Evaluation.COLUMNS
    assert Evaluation.metricTable(loaded, "pdp").iloc[0, 0] == pytest.approx(0.25)

    script = tmp_path / "results" / "fig4.gp"
    Ploting.gnuplotScript(loaded, "pdp", str(script))
    text = script.read_text()
    assert "fig4_pdp_0.dat" in text and "set logscale y" in text
    assert (tmp_path / "results" / "fig4_pdp_0.dat").exists()
