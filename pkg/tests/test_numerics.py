import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from robustgen.errors import BracketError, DomainError
from robustgen.numerics import (Bracket, RandomStream, derive_substream, erf, find_root,
                                scan_sign_changes, signed_log_sum, std_normal_cdf, std_normal_pdf)
from robustgen.verify import erf_quadrature

finite = st.floats(-30, 30, allow_nan=False)


def test_erf_zero():
    assert erf(0.0) == 0.0


@pytest.mark.parametrize("x", [0.3, 1.7, 4.0])
def test_erf_odd(x):
    assert erf(-x) == -erf(x)


def test_erf_at_one_matches_quadrature():
    assert abs(erf(1.0) - 0.842700792949715) <= 1e-13
    assert abs(erf(1.0) - erf_quadrature(1.0)) <= 1e-13


def test_erf_rejects_nan():
    with pytest.raises(DomainError):
        erf(math.nan)


@given(finite)
def test_erf_bounded_and_odd(x):
    assert -1.0 <= erf(x) <= 1.0
    assert erf(-x) == -erf(x)


@given(finite, finite)
def test_erf_monotone(a, b):
    lo, hi = min(a, b), max(a, b)
    assert erf(lo) <= erf(hi)


def test_cdf_values():
    assert std_normal_cdf(0.0) == 0.5
    assert abs(std_normal_cdf(1.0) - 0.841344746068543) <= 1e-12
    assert abs(std_normal_cdf(-3.0) - (1.0 - std_normal_cdf(3.0))) <= 1e-15


@given(finite)
def test_cdf_complement(x):
    assert abs(std_normal_cdf(x) + std_normal_cdf(-x) - 1.0) <= 1e-15


def test_cdf_tail_keeps_relative_precision():
    assert std_normal_cdf(-20.0) == pytest.approx(stats.norm.cdf(-20.0), rel=1e-12)


def test_pdf():
    assert std_normal_pdf(0.0) == pytest.approx(1 / math.sqrt(2 * math.pi))


def test_bracket_validation():
    with pytest.raises(BracketError):
        Bracket(1.0, 1.0)
    b = Bracket(0.0, 2.0)
    assert b.width == 2.0 and 1.0 in b and 3.0 not in b


def test_find_root_linear():
    assert abs(find_root(lambda x: x - 0.5, Bracket(0, 1), 1e-12) - 0.5) <= 1e-12


def test_find_root_quartic():
    r = find_root(lambda t: t - 2 * t ** 4, Bracket(0.5, 0.99), 1e-10)
    assert abs(r - 2 ** (-1 / 3)) <= 1e-10
    assert abs(r - 0.793700526) < 1e-9


def test_find_root_cube():
    assert abs(find_root(lambda x: x ** 3 - 2, Bracket(1, 2)) - 2 ** (1 / 3)) <= 1e-12


def test_find_root_same_sign_rejected():
    with pytest.raises(BracketError):
        find_root(lambda x: x * x + 1, Bracket(-1, 1))


@given(st.floats(-5, 5), st.floats(0.01, 3))
def test_find_root_lands_within_tol(root, half):
    r = find_root(lambda x: x - root, Bracket(root - half, root + 1.3 * half), 1e-10)
    assert abs(r - root) <= 1e-10


def test_scan_single_root():
    br = scan_sign_changes(lambda x: x - 0.5, 0.0, 1.0, 11)
    assert len(br) == 1 and br[0].lo <= 0.5 <= br[0].hi


def test_scan_two_roots():
    br = scan_sign_changes(lambda x: (x - 0.2) * (x - 0.7) * (x - 5), 0.0, 1.0, 101)
    assert len(br) == 2
    assert br[0].lo <= 0.2 <= br[0].hi and br[1].lo <= 0.7 <= br[1].hi


def test_scan_no_roots():
    assert scan_sign_changes(lambda x: 1.0, 0.0, 1.0, 101) == []


def test_scan_rejects_tiny_grid():
    with pytest.raises(DomainError):
        scan_sign_changes(lambda x: x, 0.0, 1.0, 1)


def test_substream_determinism():
    a = derive_substream(42, 0).generator().random(100)
    b = derive_substream(42, 0).generator().random(100)
    assert np.array_equal(a, b)


def test_substream_distinct():
    a = derive_substream(42, 0).generator().random(100)
    b = derive_substream(42, 1).generator().random(100)
    assert not np.array_equal(a, b)


def test_substream_pooled_uniformity():
    pooled = np.concatenate([derive_substream(42, k).generator().random(100) for k in range(1000)])
    counts = np.histogram(pooled, bins=20, range=(0, 1))[0]
    assert stats.chisquare(counts).pvalue > 1e-3


def test_substream_rejects_bad_seed():
    with pytest.raises(DomainError):
        derive_substream(-1, 0)
    with pytest.raises(DomainError):
        derive_substream(1 << 64, 0)


def test_stream_tuple_index():
    s = RandomStream(7, (1, 2, 3))
    assert np.array_equal(s.generator().random(5), RandomStream(7, (1, 2, 3)).generator().random(5))


@given(st.lists(st.tuples(st.sampled_from([-1.0, 1.0]), st.floats(-50, 50)), min_size=1, max_size=6))
def test_signed_log_sum_matches_direct(terms):
    scaled, log_scale = signed_log_sum(terms)
    direct = sum(s * math.exp(lg) for s, lg in terms)
    assert scaled * math.exp(log_scale) == pytest.approx(direct, rel=1e-9, abs=1e-9 * max(math.exp(lg) for _, lg in terms))


def test_signed_log_sum_survives_underflow():
    scaled, _ = signed_log_sum([(1.0, -2000.0), (-1.0, -2001.0)])
    assert scaled > 0
