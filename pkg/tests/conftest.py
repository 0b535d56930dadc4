import os
import sys

import pytest

sys.path.insert(0, os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "src"))

from config import SimConfig  # noqa: E402
from energy import LinkUnits  # noqa: E402
from packetError import PepTable  # noqa: E402

TINY_OVERRIDES = {
    "numChannelStates": 2,
    "beta": 2,
    "maxRetransmissions": 2,
    "pDecRatio": 1.0,
    "batteryTxMaxRatio": 2.0,
    "harvestTxRatio": 1.5,
    "batteryRxMaxRatio": 1.0,
    "harvestRxRatio": 0.5,
    "policy": "equal:5",
    "channelPerFrame": True,
    "frames": 2000,
    "replications": 1,
    "rhoTx": 0.6,
    "rhoRx": 0.6,
}

TINY_CONFIG_TEXT = """# small link used by the command line tests
num_channel_states = 2
beta = 2
max_retransmissions = 2
p_dec_ratio = 1
battery_tx_max_ratio = 2
harvest_tx_ratio = 1.5
battery_rx_max_ratio = 1
harvest_rx_ratio = 0.5
policy = equal:5
channel_per_frame = true
frames = 200
replications = 2
rho = 0.6
"""


@pytest.fixture
def tinyConfig():
    # Tx: 4 units capacity, 3 harvested; Rx: 4 units capacity, 2 harvested, decode 2, one unit per half packet
    return SimConfig(**TINY_OVERRIDES)


@pytest.fixture
def tinyPep():
    def build(pep, numStates=2, maxAction=4):
        return PepTable.constant(pep, numStates, maxAction)
    return build


@pytest.fixture
def defaultUnits():
    return LinkUnits(beta=4, eMinTx=0.0275, eMinRx=0.025, txCapacity=24, txHarvest=12, rxCapacity=96, rxHarvest=48,
                     samplingUnits=1, decodeUnits=28, feedbackUnits=0)


@pytest.fixture
def tinyConfigFile(tmp_path):
    path = tmp_path / "tiny.cfg"
    path.write_text(TINY_CONFIG_TEXT)
    return path
