import pytest

from fedldpc.validation import SUITES, empirical_model_mse, run_suite


@pytest.mark.parametrize("suite", SUITES)
def test_suite_passes(suite):
    checks = run_suite(suite)
    assert checks
    failed = [c.line() for c in checks if not c.passed]
    assert not failed, failed


def test_empirical_mse_is_deterministic():
    assert empirical_model_mse(1000, 8, 0.01, 5, seed=1) == empirical_model_mse(1000, 8, 0.01, 5, seed=1)


def test_unknown_suite():
    with pytest.raises(KeyError):
        run_suite("lemma7")
