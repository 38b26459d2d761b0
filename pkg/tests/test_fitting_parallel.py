import math
from functools import partial

import numpy as np
import pytest

from loewner_lab.driving import sample_generator
from loewner_lab.errors import ParameterError
from loewner_lab.fitting import column_stats, loglog_slope, wls_line
from loewner_lab.parallel import chunk_ranges, map_ranges


def test_wls_exact_line():
    x = np.array([0.0, 1.0, 2.0, 5.0])
    slope, icept = wls_line(x, 3.0 - 0.5 * x, w=[1, 2, 3, 4])
    assert slope == pytest.approx(-0.5, abs=1e-15)
    assert icept == pytest.approx(3.0, abs=1e-15)
    with pytest.raises(ParameterError):
        wls_line([1.0, 1.0], [0.0, 1.0])
    with pytest.raises(ParameterError):
        wls_line([1.0], [0.0])


def test_loglog_slope_power_law():
    t = np.array([2.0, 4.0, 8.0, 16.0])
    rng = sample_generator(0)
    noise = 1 + 0.05 * rng.standard_normal((4000, 1))
    values = noise * t[None, :] ** -0.75
    fit, mean, stderr = loglog_slope(t, values)
    # a common multiplicative factor does not move the slope
    assert fit.slope == pytest.approx(-0.75, abs=1e-12)
    assert fit.slope_stderr < 1e-10
    assert np.all(stderr > 0)


def test_jackknife_matches_scatter():
    # independent noise per column: the jackknife error tracks the spread of refits
    t = np.array([2.0, 4.0, 8.0])
    slopes, errs = [], []
    for s in range(40):
        rng = sample_generator(s)
        vals = t ** 0.5 * np.exp(0.3 * rng.standard_normal((2000, 3)))
        fit, _, _ = loglog_slope(t, vals)
        slopes.append(fit.slope)
        errs.append(fit.slope_stderr)
    assert np.std(slopes) == pytest.approx(np.mean(errs), rel=0.35)


def test_column_stats():
    v = np.array([[1.0, 2.0], [3.0, 2.0]])
    mean, se = column_stats(v)
    assert mean.tolist() == [2.0, 2.0]
    assert se[0] == pytest.approx(1.0) and se[1] == 0.0


def test_chunk_ranges_partition():
    for n, k in [(10, 3), (5, 8), (1, 4), (100, 100)]:
        r = chunk_ranges(n, k)
        assert r[0][0] == 0 and r[-1][1] == n
        assert all(a[1] == b[0] for a, b in zip(r, r[1:]))


def _rows(lo, hi, seed):
    return np.array([[sample_generator(seed, i).standard_normal()] for i in range(lo, hi)])


def test_map_ranges_independent_of_workers():
    fn = partial(_rows, seed=11)
    one = map_ranges(fn, 37, workers=1)
    two = map_ranges(fn, 37, workers=2)
    assert one.shape == (37, 1)
    assert np.array_equal(one, two)
    assert math.fsum(one[:, 0]) == math.fsum(two[:, 0])
