import numpy as np
import pytest

from channel import ChannelModel
from energy import LinkEnergyConfig
from exceptions import InvalidArgumentError
from packetError import (DEFAULT_SPECTRUM_FILE, CodeSpec, PepTable, bepBpsk, loadWeightSpectrum, packetErrorProb,
                         pepAdaptive)


@pytest.fixture
def code():
    return CodeSpec.fromFile(128, 0.5, 0.005)


def test_default_spectrum_file():
    spectrum = loadWeightSpectrum(DEFAULT_SPECTRUM_FILE)
    assert spectrum[0] == (10, 11.0)
    assert [d for d, _ in spectrum] == sorted(d for d, _ in spectrum)


def test_spectrum_file_errors_carry_line_numbers(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("# comment\n10 11\n12\n")
    with pytest.raises(InvalidArgumentError, match=":3:"):
        loadWeightSpectrum(str(path))
    with pytest.raises(FileNotFoundError):
        loadWeightSpectrum(str(tmp_path / "missing.txt"))


def test_code_dimensions(code):
    assert code.codedBits == 256
    assert code.dFree == 10
    with pytest.raises(InvalidArgumentError):
        CodeSpec(128, 0.3, 10, ((10, 11.0),), 0.005)
    with pytest.raises(InvalidArgumentError):
        CodeSpec(128, 0.5, 10, ((10, 11.0),), 0.005, modulationOrder=4)


def test_bit_error_probability_limits():
    assert bepBpsk(10, 1.0, 0.0, 0.005) == pytest.approx(0.5)
    assert bepBpsk(10, 1.0, 0.05, 0.005) < 1e-40


def test_packet_error_decreases_with_power_and_gain(code):
    powers = [0.001, 0.003, 0.005, 0.01, 0.02]
    values = [packetErrorProb(code, 1.0, p) for p in powers]
    assert all(0.0 <= v <= 1.0 for v in values)
    assert np.all(np.diff(values) <= 0.0)
    assert packetErrorProb(code, 2.0, 0.005) <= packetErrorProb(code, 0.5, 0.005)
    assert packetErrorProb(code, 1.0, 0.0) == 1.0


def test_adaptive_error_is_worst_part():
    assert pepAdaptive([0.1, 0.4, 0.2]) == 0.4
    assert pepAdaptive([0.3]) == 0.3
    with pytest.raises(InvalidArgumentError):
        pepAdaptive([])


def test_table_from_link_is_monotone(code):
    channel = ChannelModel.build(3)
    energy = LinkEnergyConfig(pOut=0.005, batteryTxMax=0.66, batteryRxMax=2.4)
    table = PepTable.build(code, channel, energy, 24)
    assert table.matrix.shape == (3, 25)
    assert np.all(table.matrix[:, 0] == 1.0)
    assert np.all(np.diff(table.matrix, axis=1) <= 0.0)
    assert table.isMonotoneInGain(channel.meanGains)
    assert table.value(2, 100) == table.value(2, 24)


def test_table_validation():
    with pytest.raises(InvalidArgumentError):
        PepTable(np.array([[0.5, 0.2]]))
    with pytest.raises(InvalidArgumentError):
        PepTable(np.array([[1.0, 0.2, 0.3]]))
    table = PepTable.constant(0.25, 2, 3)
    assert table.value(1, 0) == 1.0 and table.value(0, 3) == 0.25
