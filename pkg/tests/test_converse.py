import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tandem_iv.converse import (binary_entropy, binary_entropy_inverse, fano_error_floor,
                                g_table, geometric_sum_cdf, scan_offset, sum_distribution,
                                velocity_threshold_scan)
from tandem_iv.model import ErasureProfile


def brute_force_cdf(eps, t, terms=60):
    """P(sum of geometrics < t) by explicit enumeration of the convolution."""
    pmf = np.zeros(t + 1)
    pmf[0] = 1.0
    for e in eps:
        g = np.array([0.0] + [(1 - e) * e ** (n - 1) for n in range(1, t + 1)])
        pmf = np.convolve(pmf, g)[: t + 1]
    return pmf[:t].sum()


def test_g_examples():
    t = g_table(ErasureProfile.homogeneous(0.0, 5), 5, 8)
    assert (t.values[1:, 1:] == 1).all() and (t.values[1:, 0] == 0).all()
    assert math.isnan(t.values[0, 0])
    with pytest.raises(ValueError):
        t(0, 0)
    assert g_table(ErasureProfile.homogeneous(0.5, 5), 2, 3)(2, 3) == pytest.approx(11 / 16, abs=1e-15)
    with pytest.raises(ValueError):
        g_table(ErasureProfile.homogeneous(0.5, 5), 6, 3)


def test_g_invariants():
    rng = np.random.default_rng(0)
    p = ErasureProfile.explicit(rng.uniform(0, 0.9, 20).tolist())
    g = g_table(p, 20, 80).values[1:, :]
    assert (g >= 0).all() and (g <= 1 + 1e-15).all()
    assert (np.diff(g, axis=1) >= -1e-15).all()
    full = g_table(p, 20, 80).values
    assert (np.diff(full[:, 1:], axis=0) <= 1e-15).all()


def test_cdf_against_brute_force():
    eps = [0.3, 0.5, 0.1, 0.8]
    p = ErasureProfile.explicit(eps)
    for t in range(0, 25):
        assert geometric_sum_cdf(p, 4, t) == pytest.approx(brute_force_cdf(eps, t), abs=1e-14)


def test_sum_distribution_mass():
    p = ErasureProfile.periodic([0.2, 0.9], 30)
    d = sum_distribution(p, 30, 200)
    assert d.pmf.sum() + d.tail == pytest.approx(1.0, abs=1e-12)
    assert d.pmf[:30].sum() == 0.0


@settings(max_examples=25, deadline=None)
@given(st.lists(st.sampled_from([0.0, 0.05, 0.3, 0.5, 0.7, 0.95]), min_size=1, max_size=12),
       st.integers(0, 40))
def test_dual_dp(eps, n):
    p = ErasureProfile.explicit(eps)
    table = g_table(p, len(eps), n)
    for i in range(1, len(eps) + 1):
        assert geometric_sum_cdf(p, i, i + n) == pytest.approx(table(i, n), abs=1e-12)


def test_entropy_inverse():
    assert binary_entropy_inverse(0.0) == 0.0
    assert binary_entropy_inverse(1.0) == 0.5
    for h in (0.01, 0.3, 0.9, 0.99):
        p = binary_entropy_inverse(h)
        assert 0 < p < 0.5
        assert binary_entropy(p) == pytest.approx(h, abs=1e-9)


def test_fano_floor():
    p = ErasureProfile.homogeneous(0.5, 100)
    assert scan_offset(0.625, 100) == 61
    floor = fano_error_floor(p, 100, 100 + 61 - 1)
    g = g_table(p, 100, 61)(100, 61)
    assert g < 0.01
    assert floor > binary_entropy_inverse(0.99) > 0.41
    assert binary_entropy(floor) >= 1 - g - 1e-9
    # nothing can reach node i before slot i
    assert fano_error_floor(p, 10, 9) == 0.5
    assert fano_error_floor(ErasureProfile.homogeneous(0.0, 5), 5, 5) == 0.0


def test_threshold_scan():
    p = ErasureProfile.homogeneous(0.5, 200)
    scan = velocity_threshold_scan(p, [0.625, 0.4], [25, 50, 100, 200])
    assert scan.inverse_zeta == 0.5
    assert scan.trend == {0.625: "decreasing", 0.4: "increasing"}
    vals = {(a, i): g for a, i, _, g in scan.rows}
    assert vals[(0.625, 100)] < 0.01 and vals[(0.4, 100)] > 0.99
    clean = velocity_threshold_scan(ErasureProfile.homogeneous(0.0, 50), [0.5, 1.0], [10, 50])
    assert all(g == 1.0 for *_, g in clean.rows)
    with pytest.raises(ValueError):
        velocity_threshold_scan(p, [0.0], [10])
