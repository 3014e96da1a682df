import numpy as np
import pytest

from iiot_offload.exceptions import ContractViolation
from iiot_offload.metrics import channel_success_rate, collision_rate, goodput, mean_ci


@pytest.mark.parametrize("s, expected", [(10, 0.2), (0, 0.0), (50, 1.0)])
def test_channel_success_rate(s, expected):
    assert channel_success_rate(s, 2, 25) == pytest.approx(expected)


def test_success_rate_out_of_range():
    with pytest.raises(ContractViolation):
        channel_success_rate(51, 2, 25)
    with pytest.raises(ContractViolation):
        channel_success_rate(-1, 2, 25)
    with pytest.raises(ContractViolation):
        channel_success_rate(1, 0, 25)


def test_collision_rate_and_goodput():
    assert collision_rate(5, 2, 25) == pytest.approx(0.1)
    assert goodput(5, 25) == pytest.approx(0.2)
    with pytest.raises(ContractViolation):
        goodput(1, 0)


def test_mean_ci_constant_has_zero_width():
    mean, lo, hi = mean_ci(np.full((5, 3), 2.0))
    assert np.all(mean == 2.0) and np.all(lo == hi)


def test_mean_ci_single_seed():
    mean, lo, hi = mean_ci(np.array([[1.0, 4.0]]))
    assert np.array_equal(mean, lo) and np.array_equal(mean, hi)


def test_mean_ci_normal_half_width():
    x = np.array([1.0, 2.0, 3.0, 4.0])
    mean, lo, hi = mean_ci(x)
    half = 1.959963984540054 * np.std(x, ddof=1) / 2
    assert mean == 2.5
    assert hi - mean == pytest.approx(half)
    assert mean - lo == pytest.approx(half)


def test_all_collide_and_silent_extremes():
    assert collision_rate(50, 2, 25) == 1.0
    assert goodput(0, 25) == 0.0
