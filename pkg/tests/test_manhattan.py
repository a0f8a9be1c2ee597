import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from robustgen import manhattan as mh
from robustgen.errors import DomainError
from robustgen.numerics import derive_substream

SPEC5 = mh.ManhattanSpec(5, 0.1)
M = mh.ManhattanSample


def pos(j, mu=0.1):
    return M(j, mu, 1)


def neg(j, mu=0.1):
    return M(j, -mu, -1)


def test_spec_validation():
    for bad in [(0, 0.1), (2, 0.0), (2, 0.25), (2.5, 0.1)]:
        with pytest.raises(DomainError):
            mh.ManhattanSpec(*bad)


def test_sample_empty():
    assert mh.sample_manhattan(SPEC5, 0, derive_substream(1, 0).generator()) == []


def test_sample_single_column_balanced():
    spec = mh.ManhattanSpec(1, 0.1)
    data = mh.sample_manhattan(spec, 100_000, derive_substream(1, 1).generator())
    assert all(d.s == 1 and d.t == d.y * 0.1 for d in data)
    frac = np.mean([d.y > 0 for d in data])
    assert abs(frac - 0.5) < 4 * 0.5 / np.sqrt(100_000)


def test_sample_uniform_over_support():
    spec = mh.ManhattanSpec(4, 0.1)
    data = mh.sample_manhattan(spec, 100_000, derive_substream(1, 2).generator())
    counts = np.bincount([2 * (d.s - 1) + (d.y < 0) for d in data], minlength=8)
    assert stats.chisquare(counts).pvalue > 1e-3


def test_fit_small_eps_all_zero():
    spec = mh.ManhattanSpec(3, 0.2)
    clf = mh.fit_manhattan_robust([pos(1, 0.2), neg(1, 0.2), neg(2, 0.2)], spec, 0.15)
    assert clf.alphas == (0.0, 0.0, 0.0)
    assert mh.adversarial_count(clf.alphas, [pos(1, 0.2), neg(1, 0.2), neg(2, 0.2)], 0.2, 0.15) == 0


def test_fit_examples():
    clf = mh.fit_manhattan_robust([pos(1), pos(1)], SPEC5, 0.4)
    assert clf.alphas[0] == pytest.approx(-0.3)
    clf = mh.fit_manhattan_robust([pos(2), pos(2), neg(2)], SPEC5, 0.4)
    assert clf.alphas[1] == pytest.approx(-0.3)
    clf = mh.fit_manhattan_robust([neg(3)], SPEC5, 0.4)
    assert clf.alphas[2] == pytest.approx(0.3)
    clf = mh.fit_manhattan_robust([pos(4), neg(4)], SPEC5, 0.4)
    assert clf.alphas[3] == pytest.approx(-0.3)
    assert clf.alphas[4] == 0.0


def test_fit_rejects_large_eps():
    with pytest.raises(DomainError):
        mh.fit_manhattan_robust([], SPEC5, 0.5)


def test_fit_matches_brute_force_column():
    train = [pos(1), pos(1), neg(1)]
    clf = mh.fit_manhattan_robust(train, mh.ManhattanSpec(1, 0.1), 0.4)
    best = mh.brute_force_fit(train, mh.ManhattanSpec(1, 0.1), 0.4)
    assert (mh.adversarial_count(clf.alphas, train, 0.1, 0.4), mh.l1_norm(clf)) == pytest.approx(best)


def test_classify_examples():
    zero = mh.StepClassifier((0.0, 0.0), 0.3)
    gen = derive_substream(2, 0).generator()
    assert mh.classify(zero, (1, 0.1), gen) == 1
    assert mh.classify(zero, (1, -0.1), gen) == -1
    bad = mh.StepClassifier((0.1 - 0.4,), 0.4)
    assert mh.classify(bad, (1, -0.1), gen) == 1


def test_classify_boundary_coin():
    clf = mh.StepClassifier((0.1,), 0.3)
    gen = derive_substream(2, 1).generator()
    labels = [mh.classify(clf, (1, 0.1), gen) for _ in range(4000)]
    assert abs(np.mean(np.array(labels) > 0) - 0.5) < 0.04


def test_step_function_outside_intervals():
    clf = mh.StepClassifier((0.5, -0.5), 0.2)
    assert clf(1.1) == 0.5 and clf(1.25) == 0.0 and clf(2.0) == -0.5 and clf(3.0) == 0.0
    assert clf.levels == [(1, 0.5), (2, -0.5)]


def test_l1_examples():
    assert mh.l1_norm(mh.StepClassifier((0.0, 0.0), 0.4)) == 0.0
    assert mh.l1_norm(mh.StepClassifier((0.1 - 0.4,), 0.4)) == pytest.approx(2 * 0.4 * 0.3)


def test_l1_bound_on_random_fits():
    gen = derive_substream(3, 0).generator()
    for _ in range(1000):
        n = int(gen.integers(0, 30))
        eps = float(gen.uniform(0.01, 0.49))
        clf = mh.fit_manhattan_robust(mh.sample_manhattan(SPEC5, n, gen), SPEC5, eps)
        assert mh.l1_norm(clf) <= 2 * 5 * eps * abs(0.1 - eps) + 1e-15
        assert all(abs(a) <= abs(0.1 - eps) + 1e-15 for a in clf.alphas)


@given(st.lists(st.tuples(st.integers(1, 3), st.sampled_from([-1, 1])), max_size=10),
       st.floats(0.01, 0.199))
def test_small_eps_zero_standard_loss(data, eps):
    spec = mh.ManhattanSpec(3, 0.1)
    clf = mh.fit_manhattan_robust([M(s, y * 0.1, y) for s, y in data], spec, eps)
    assert all(abs(a) < 0.1 for a in clf.alphas)
    assert mh.support_loss(np.array(clf.alphas), 0.1) == 0.0


def test_occupied_column_constant_is_half():
    assert mh.occupied_column_constant(0.1, 0.4) == 0.5
    assert mh.occupied_column_constant(0.05, 0.3) == 0.5


def test_tie_convention_does_not_change_loss():
    mu, eps = 0.1, 0.4
    for alpha in (mu - eps, -(mu - eps)):
        assert mh.support_loss(np.array([alpha]), mu) == 0.5


def test_exact_loss_small_eps():
    spec = mh.ManhattanSpec(5, 0.2)
    assert all(mh.exact_manhattan_loss(spec, 0.1, n) == 0.0 for n in range(0, 30))


def test_exact_loss_boundaries():
    with pytest.raises(DomainError):
        mh.exact_manhattan_loss(mh.ManhattanSpec(5, 0.2), 0.4, 3)
    with pytest.raises(DomainError):
        mh.exact_manhattan_loss(SPEC5, 0.6, 3)
    assert mh.exact_manhattan_loss(SPEC5, 0.5, 1) == pytest.approx(0.5 * 0.2)


def test_expected_empty_columns_enumeration():
    count = 0
    for a, b in itertools.product(range(6), repeat=2):
        count += 3 - len({a // 2, b // 2})
    assert mh.expected_empty_columns(3, 2) == pytest.approx(count / 36) == pytest.approx(4 / 3)


@pytest.mark.parametrize("columns", [2, 3, 5, 10])
@pytest.mark.parametrize("eps", [0.25, 0.4, 0.5])
def test_exact_loss_strictly_increasing(columns, eps):
    spec = mh.ManhattanSpec(columns, 0.1)
    vals = [mh.exact_manhattan_loss(spec, eps, n) for n in range(1, 101)]
    q = 1 - 1 / columns
    for n, (a, b) in enumerate(zip(vals, vals[1:]), start=1):
        # once q**n drops below the float resolution of c the curve saturates at c
        if q ** (n + 1) > 2 ** -52:
            assert b > a
        else:
            assert b >= a


@pytest.mark.parametrize("columns", [2, 3, 5, 10])
def test_closed_form_strictly_increasing_in_rationals(columns):
    q = Fraction(columns - 1, columns)
    vals = [Fraction(1, 2) * (1 - q ** n) for n in range(1, 101)]
    assert all(b > a for a, b in zip(vals, vals[1:]))


def test_mc_small_eps_all_zero():
    streams = [derive_substream(4, r) for r in range(500)]
    losses = mh.manhattan_mc_losses(mh.ManhattanSpec(5, 0.2), 0.1, 20, streams)
    assert np.all(losses == 0.0)


def test_mc_single_column_deterministic():
    mean, se = mh.mc_manhattan_loss(mh.ManhattanSpec(1, 0.1), 0.4, 7, 100, seed=5)
    assert mean == 0.5 and se == 0.0


@pytest.mark.parametrize("columns,n,eps", [(c, n, e) for c in (2, 5, 9) for n in (1, 4, 10) for e in (0.25, 0.35, 0.45)])
def test_mc_matches_exact(columns, n, eps):
    spec = mh.ManhattanSpec(columns, 0.1)
    mean, se = mh.mc_manhattan_loss(spec, eps, n, 3000, seed=columns * 100 + n)
    exact = mh.exact_manhattan_loss(spec, eps, n)
    assert abs(mean - exact) <= 4 * se + 1e-12
