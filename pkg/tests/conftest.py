import pytest

from fedldpc.calibration import CalibrationJob, run_calibration
from fedldpc.data import synthetic_blobs
from fedldpc.ldpc import construct_code

# The benchmark every FL-level check runs on: two well-separated blobs whose
# centre sits far from the origin, so corrupted biases and weights visibly
# hurt accuracy.
BENCHMARK_BLOBS = dict(classes=2, dim=5, per_class=1000, spread=1.0, separation=5.0,
                       offset=10.0, seed=0)


@pytest.fixture(scope="session")
def code():
    return construct_code(1008, 7)


@pytest.fixture(scope="session")
def toy_code():
    return construct_code(12, 3)


@pytest.fixture(scope="session")
def benchmark_data():
    return synthetic_blobs(**BENCHMARK_BLOBS)


@pytest.fixture(scope="session")
def table_25db(code):
    """Default-grid calibration at 2.5 dB, shared by the slower tests."""
    h, enc = code
    return run_calibration(CalibrationJob(snr_points=(2.5,)), h, enc)
