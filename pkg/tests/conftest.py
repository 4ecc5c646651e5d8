import numpy as np
import pytest

from kqipredict.dataset import Dataset, KqiVector, LowLayerFeatures, MeasurementSample
from kqipredict.simulator import GeneratorParams, default_grid, run_campaign

ACCEPTANCE_SEED = 2024


def make_sample(rsrp=-90.0, bw=10.0, load="none", size=1000, iftd=0.1, fthr=5.0, tftd=0.2):
    # rsrq/rssi follow the noiseless generator relation for load=none
    n_prb = {5.0: 25, 10.0: 50, 15.0: 75, 20.0: 100}.get(float(bw), 50)
    rssi = rsrp + 10 * np.log10(12 * n_prb)
    rsrq = 10 * np.log10(n_prb) + rsrp - rssi
    return MeasurementSample(
        LowLayerFeatures(rsrp, rsrq, rssi, bw, load, size), KqiVector(iftd, fthr, tftd)
    )


@pytest.fixture(scope="session")
def small_campaign():
    return run_campaign(default_grid(), GeneratorParams(), 1080, seed=11)


@pytest.fixture(scope="session")
def campaign():
    """The 9000-sample default campaign shared by the pipeline-level tests."""
    return run_campaign(default_grid(), GeneratorParams(), 9000, seed=ACCEPTANCE_SEED)


@pytest.fixture
def tiny_dataset():
    return Dataset(
        (
            make_sample(-80.0, 5.0, "none", 1000, 0.11, 1.0, 0.2),
            make_sample(-95.0, 10.0, "low", 10000, 0.12, 2.0, 0.3),
            make_sample(-105.0, 20.0, "medium", 100000, 0.13, 3.0, 0.5),
        ),
        "tiny",
    )


_VERDICTS = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_VERDICTS] = []


@pytest.fixture
def verdict(request):
    """Record and print one PASS/FAIL line for an acceptance criterion."""

    def record(number, passed, detail):
        line = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
        request.config.stash[_VERDICTS].append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_VERDICTS, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda l: int(l.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
