import math

import pytest
from hypothesis import given, strategies as st

from fedldpc.scheduler import (
    BerSchedule, CalibrationEntry, CalibrationTable, schedule_sum_bound, q_for_target, target_ber,
)


def test_endpoints_exact():
    s = BerSchedule(1e-1, 1e-4, 50)
    assert target_ber(s, 0) == 1e-1
    assert target_ber(s, 49) == 1e-4


def test_inverse_square_shape():
    s = BerSchedule(1e-1, 1e-4, 50)
    consts = [(s.target(r) - s.offset) * (r + 1) ** 2 for r in range(1, 49)]
    assert max(consts) - min(consts) <= 1e-12 * abs(consts[0])
    assert consts[0] == pytest.approx(s.scale, rel=1e-12)


@given(st.floats(1e-4, 0.5), st.floats(0.01, 0.99), st.integers(2, 500))
def test_schedule_decreases_between_endpoints(b0, frac, rounds):
    s = BerSchedule(b0, b0 * frac, rounds)
    t = s.targets()
    assert all(a > b for a, b in zip(t, t[1:]))
    assert all(s.b_last <= x <= s.b0 for x in t)


def test_schedule_validation():
    with pytest.raises(ValueError):
        BerSchedule(1e-4, 1e-1, 10)
    with pytest.raises(ValueError):
        BerSchedule(1e-1, 1e-4, 1)
    with pytest.raises(IndexError):
        target_ber(BerSchedule(1e-1, 1e-4, 5), 5)


def test_sum_bound_direct():
    lhs, rhs = schedule_sum_bound(0.1, 4, 5, 8)
    b = [0.1 / (r + 1) ** 2 for r in range(4)]
    t = 20
    assert lhs == pytest.approx(sum(x * (1 - x) ** 7 for x in b) / math.sqrt(t), rel=1e-14)
    assert rhs == pytest.approx(0.1 / math.sqrt(t) * (2 - 5 / t), rel=1e-14)


def table(rows, n=1008, seed=7):
    return CalibrationTable(tuple(CalibrationEntry(*r) for r in rows), n, seed)


def sample_table():
    return table([
        (2.5, 6, 4e-3, 1e-4, 1000, 5.7, 2000, ""),
        (2.5, 12, 2e-4, 3e-5, 1400, 6.9, 120, ""),
        (2.5, 52, 1.1e-5, 3e-6, 50000, 7.05, 60, "under_resolved"),
        (1.5, 6, 3e-2, 1e-3, 1000, 5.9, 15000, ""),
    ])


def test_q_for_target_picks_smallest_sufficient_budget():
    t = sample_table()
    assert q_for_target(t, 2.5, 1e-2).q == 6
    assert q_for_target(t, 2.5, 1e-4).q == 52
    choice = q_for_target(t, 2.5, 1e-6)
    assert choice.q == 52 and choice.saturated
    with pytest.raises(KeyError):
        q_for_target(t, 3.0, 1e-3)


def test_csv_round_trip_is_exact():
    t = sample_table()
    text = t.to_csv()
    again = CalibrationTable.from_csv(text)
    assert again.to_csv() == text
    assert again.entry(2.5, 12) == t.entry(2.5, 12)
    assert text.splitlines()[0].startswith("snr_db,q,ber,ci_halfwidth,frames,n,code_seed")
    assert "\r" not in text


def test_csv_errors_carry_line_numbers():
    text = sample_table().to_csv().splitlines()
    assert text[3].startswith("2.5,12,")
    text[3] = text[3].replace("2.5,12", "2.5,twelve")
    with pytest.raises(ValueError, match="line 4"):
        CalibrationTable.from_csv("\n".join(text) + "\n")
    with pytest.raises(ValueError, match="lacks columns"):
        CalibrationTable.from_csv("snr_db,q\n1,2\n")


def test_mixed_code_identity_rejected():
    text = sample_table().to_csv() + "3.0,6,0.001,0.0001,1000,96,1,5.0,10,\n"
    with pytest.raises(ValueError, match="mixed"):
        CalibrationTable.from_csv(text)


def test_minimal_columns_accepted():
    t = CalibrationTable.from_csv("snr_db,q,ber,ci_halfwidth,frames,n,code_seed\n2.0,8,0.01,0.001,500,1008,7\n")
    assert math.isnan(t.mean_iterations(2.0, 8))
