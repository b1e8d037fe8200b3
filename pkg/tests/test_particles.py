"""Spread statistics, sync maps, and the interaction constant kappa."""

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from brownsync import (
    ConfigurationError,
    DegenerateConfigurationError,
    IndexTuple,
    InteractionSignature,
    ParticleConfiguration,
    TupleSampler,
    apply_sync,
    center_of_mass,
    contraction_factor,
    empirical_variance,
    kappa_analytic,
    kappa_enumerate,
    sample_tuple,
)


def conf(*values):
    return ParticleConfiguration(tuple(float(v) for v in values))


# ---------------------------------------------------------------------------
# types
# ---------------------------------------------------------------------------


def test_configuration_invariants():
    with pytest.raises(ConfigurationError):
        ParticleConfiguration((1.0,))
    with pytest.raises(ConfigurationError):
        ParticleConfiguration((1.0, math.inf))
    with pytest.raises(ConfigurationError):
        ParticleConfiguration((1.0, math.nan))
    assert conf(0, 1).n == 2


def test_signature_invariants():
    assert InteractionSignature((2,)).k == 2
    assert InteractionSignature((2, 3)).k == 5
    assert InteractionSignature((2, 3)).blocks() == ((0, 2), (2, 5))
    with pytest.raises(ConfigurationError):
        InteractionSignature(())
    with pytest.raises(ConfigurationError):
        InteractionSignature((2, 1))
    with pytest.raises(ConfigurationError):
        InteractionSignature((0,))


def test_index_tuple_invariants():
    assert len(IndexTuple((0, 2, 1))) == 3
    with pytest.raises(ConfigurationError):
        IndexTuple((1, 1))
    with pytest.raises(ConfigurationError):
        IndexTuple((-1, 0))


# ---------------------------------------------------------------------------
# center of mass and empirical variance
# ---------------------------------------------------------------------------


def test_center_of_mass():
    assert center_of_mass(conf(0, 0, 0)) == 0.0
    assert center_of_mass(conf(0, 1, 2)) == 1.0
    assert center_of_mass(conf(-3, 5)) == 1.0  # (-3 + 5) / 2


def test_empirical_variance_hand_values():
    for c in (0.0, -4.2, 1e5):
        assert empirical_variance(conf(c, c, c, c)) == 0.0
    assert empirical_variance(conf(0, 1, 2)) == 1.0  # ((-1)^2 + 0 + 1^2) / 2
    assert empirical_variance(conf(0, 2)) == 2.0  # ((-1)^2 + 1^2) / 1


def _perturbation_tolerance(n, v0, scale):
    # V computed from inputs carrying one rounding each (|delta_i| <= u*scale)
    # differs from V(x) by at most ~2*scale*u*sqrt(V*N/(N-1)) plus the
    # two-pass algorithmic term; 128x headroom keeps the bound sharp enough
    # to flag a cancellation-prone implementation yet never flake.  The
    # absolute floor covers the subnormal range, where rounding error is a
    # fixed 2.5e-324 per operation and every relative term underflows.
    u = 2.0**-53
    return (
        128.0 * u * scale * math.sqrt(v0 * n / (n - 1))
        + 32.0 * n * u * v0
        + 16.0 * n * (u * scale) ** 2
        + 1e-312
    )


@given(
    values=st.lists(
        st.floats(min_value=-100.0, max_value=100.0), min_size=2, max_size=16
    ),
    shift=st.floats(min_value=-1e3, max_value=1e3),
)
def test_translation_invariance(values, shift):
    # the shifted inputs fl(x + c) are rounded before V sees them, so the
    # attainable agreement is set by ulp(|c| + |x|), not by V's algorithm
    v0 = empirical_variance(conf(*values))
    v1 = empirical_variance(conf(*(x + shift for x in values)))
    scale = abs(shift) + max(abs(v) for v in values)
    assert abs(v1 - v0) <= _perturbation_tolerance(len(values), v0, scale)


def test_translation_invariance_large_shift():
    # additions are exact on an integer lattice, so V matches bit-for-bit
    # even at |c| = 1e6; for generic reals the inputs x + c are rounded
    # before V sees them, which floors the error near ulp(c) * spread
    rng = np.random.default_rng(5)
    for _ in range(20):
        x = [float(v) for v in rng.integers(-50, 50, size=8)]
        assert empirical_variance(conf(*x)) == empirical_variance(
            conf(*(v + 1e6 for v in x))
        )
    for _ in range(50):
        x = rng.uniform(-100, 100, size=8)
        v0 = empirical_variance(conf(*x))
        v1 = empirical_variance(conf(*(x + 1e6)))
        assert abs(v1 - v0) <= 1e-10 * max(v0, 1e-30)


@given(
    values=st.lists(
        st.floats(min_value=-50.0, max_value=50.0), min_size=2, max_size=12
    ),
    factor=st.floats(min_value=-30.0, max_value=30.0),
)
def test_scale_covariance(values, factor):
    v0 = empirical_variance(conf(*values))
    v1 = empirical_variance(conf(*(factor * x for x in values)))
    target = factor * factor * v0
    scale = abs(factor) * max(abs(v) for v in values)
    assert abs(v1 - target) <= _perturbation_tolerance(len(values), target, scale)


def test_translation_and_scale_at_spec_tolerance():
    # on well-separated data the agreement beats 1e-12 relative outright
    rng = np.random.default_rng(6)
    for _ in range(100):
        x = rng.uniform(-100, 100, size=int(rng.integers(2, 13)))
        v0 = empirical_variance(conf(*x))
        c = rng.uniform(-1e3, 1e3)
        assert abs(empirical_variance(conf(*(x + c))) - v0) <= 1e-12 * v0
        a = rng.uniform(-30, 30)
        v1 = empirical_variance(conf(*(a * x)))
        assert v1 == pytest.approx(a * a * v0, rel=1e-12)


# ---------------------------------------------------------------------------
# synchronizing maps
# ---------------------------------------------------------------------------


def test_apply_sync_pairwise():
    # (x_i, x_j) -> (x_i, x_i): the second particle jumps onto the first
    out = apply_sync(conf(1, 2, 3), InteractionSignature((2,)), IndexTuple((0, 1)))
    assert out.positions == (1.0, 1.0, 3.0)
    out = apply_sync(conf(1, 2, 3), InteractionSignature((2,)), IndexTuple((2, 0)))
    assert out.positions == (3.0, 2.0, 3.0)


def test_apply_sync_two_groups():
    # groups {1st, 2nd} and {3rd, 4th} of the tuple, leader first of each
    out = apply_sync(
        conf(10, 20, 30, 40), InteractionSignature((2, 2)), IndexTuple((0, 1, 2, 3))
    )
    assert out.positions == (10.0, 10.0, 30.0, 30.0)
    out = apply_sync(
        conf(10, 20, 30, 40), InteractionSignature((2, 2)), IndexTuple((3, 0, 1, 2))
    )
    assert out.positions == (40.0, 20.0, 20.0, 40.0)


def test_apply_sync_rejects_bad_tuples():
    with pytest.raises(ConfigurationError):
        IndexTuple((1, 1))  # indices not distinct
    with pytest.raises(ConfigurationError):
        apply_sync(conf(1, 2, 3), InteractionSignature((2,)), IndexTuple((0, 1, 2)))
    with pytest.raises(ConfigurationError):
        apply_sync(conf(1, 2), InteractionSignature((3,)), IndexTuple((0, 1, 2)))
    with pytest.raises(ConfigurationError):
        apply_sync(conf(1, 2, 3), InteractionSignature((2,)), IndexTuple((0, 5)))


@given(st.data())
@settings(max_examples=60)
def test_apply_sync_idempotent_and_local(data):
    n = data.draw(st.integers(min_value=3, max_value=9))
    parts = data.draw(
        st.lists(st.integers(min_value=2, max_value=4), min_size=1, max_size=3)
    )
    sig = InteractionSignature(tuple(parts))
    if sig.k > n:
        return
    values = data.draw(
        st.lists(
            st.floats(min_value=-1e6, max_value=1e6),
            min_size=n,
            max_size=n,
        )
    )
    idx = data.draw(st.permutations(range(n)))
    tup = IndexTuple(tuple(idx[: sig.k]))
    x = conf(*values)
    once = apply_sync(x, sig, tup)
    twice = apply_sync(once, sig, tup)
    assert once.positions == twice.positions  # idempotent, bit-exact
    untouched = set(range(n)) - set(tup.indices)
    for m in untouched:
        assert once.positions[m] == x.positions[m]  # locality, bit-exact


# ---------------------------------------------------------------------------
# tuple sampling
# ---------------------------------------------------------------------------


def test_sample_tuple_two_particles():
    rng = np.random.default_rng(11)
    seen = {sample_tuple(2, 2, rng).indices for _ in range(200)}
    assert seen == {(0, 1), (1, 0)}


def test_sample_tuple_uniform_pairs():
    rng = np.random.default_rng(12)
    sampler = TupleSampler(3, 2)
    draws = 100_000
    counts = {}
    for _ in range(draws):
        t = sampler.draw(rng)
        counts[t] = counts.get(t, 0) + 1
    assert len(counts) == 6
    p = 1.0 / 6.0
    band = 3.0 * math.sqrt(p * (1 - p) / draws)
    for c in counts.values():
        assert abs(c / draws - p) <= band


def test_sample_tuple_entropy():
    # all 120 ordered 4-tuples from 5 indices, near-maximal empirical entropy
    rng = np.random.default_rng(13)
    sampler = TupleSampler(5, 4)
    draws = 120_000
    counts = {}
    for _ in range(draws):
        t = sampler.draw(rng)
        counts[t] = counts.get(t, 0) + 1
    assert len(counts) == 120
    entropy = -sum(
        (c / draws) * math.log(c / draws) for c in counts.values()
    )
    assert entropy == pytest.approx(math.log(120), abs=0.01)


def test_sample_tuple_validation():
    rng = np.random.default_rng(0)
    with pytest.raises(ConfigurationError):
        sample_tuple(3, 4, rng)
    with pytest.raises(ConfigurationError):
        sample_tuple(5, 1, rng)
    for _ in range(100):
        t = sample_tuple(6, 4, rng)
        assert len(set(t.indices)) == 4


# ---------------------------------------------------------------------------
# kappa
# ---------------------------------------------------------------------------


def test_kappa_analytic_values():
    assert kappa_analytic(InteractionSignature((2,))) == 2.0
    assert kappa_analytic(InteractionSignature((3,))) == 6.0  # 9 - 3
    assert kappa_analytic(InteractionSignature((2, 2))) == 4.0  # 4 + 4 - 4


@given(
    parts=st.lists(st.integers(min_value=2, max_value=5), min_size=1, max_size=4)
)
def test_kappa_analytic_positive(parts):
    assert kappa_analytic(InteractionSignature(tuple(parts))) > 0


def test_kappa_enumerate_hand_case():
    # six ordered pairs on x=(0,1,2): post-sync V values average to 2/3
    x = conf(0, 1, 2)
    k = kappa_enumerate(InteractionSignature((2,)), 3, x)
    assert k == pytest.approx(2.0, abs=1e-9)


@pytest.mark.parametrize("parts", [(2,), (3,), (2, 2)])
def test_kappa_enumerate_matches_analytic(parts):
    # includes N = k, where every jump collapses the whole configuration
    rng = np.random.default_rng(21)
    sig = InteractionSignature(parts)
    expected = kappa_analytic(sig)
    for n in range(sig.k, 7):
        for _ in range(5):
            x = conf(*rng.normal(size=n))
            assert kappa_enumerate(sig, n, x) == pytest.approx(
                expected, abs=1e-9
            )


def test_kappa_enumerate_is_contraction_identity():
    # mean over all tuples of V(apply_sync(x, .)) == k_N * V(x)
    rng = np.random.default_rng(22)
    sig = InteractionSignature((2, 3))
    n = 6
    x = conf(*rng.normal(size=n))
    total = 0.0
    tuples = list(itertools.permutations(range(n), sig.k))
    for t in tuples:
        total += empirical_variance(apply_sync(x, sig, IndexTuple(t)))
    mean_v = total / len(tuples)
    k_n = contraction_factor(n, kappa_analytic(sig))
    assert mean_v == pytest.approx(k_n * empirical_variance(x), rel=1e-9)


def test_kappa_enumerate_leader_choice_does_not_matter():
    # exploratory: synchronizing onto the last member of each block instead
    # of the first leaves kappa unchanged (uniform tuples are exchangeable)
    rng = np.random.default_rng(23)
    sig = InteractionSignature((2, 2))
    n = 5
    x = conf(*rng.normal(size=n))
    total = 0.0
    tuples = list(itertools.permutations(range(n), sig.k))
    for t in tuples:
        out = list(x.positions)
        for start, stop in sig.blocks():
            leader_value = out[t[stop - 1]]
            for pos in range(start, stop):
                out[t[pos]] = leader_value
        total += empirical_variance(conf(*out))
    implied = (1.0 - (total / len(tuples)) / empirical_variance(x)) * n * (n - 1)
    assert implied == pytest.approx(kappa_analytic(sig), abs=1e-9)


def test_kappa_enumerate_errors():
    rng = np.random.default_rng(3)
    with pytest.raises(DegenerateConfigurationError):
        kappa_enumerate(InteractionSignature((2,)), 3, conf(1, 1, 1))
    with pytest.raises(ConfigurationError):
        kappa_enumerate(InteractionSignature((4,)), 3, conf(0, 1, 2))
    with pytest.raises(ConfigurationError):
        # 1001 * 1000 ordered pairs exceed the enumeration cap
        kappa_enumerate(
            InteractionSignature((2,)), 1001, conf(*rng.normal(size=1001))
        )


# ---------------------------------------------------------------------------
# contraction factor
# ---------------------------------------------------------------------------


def test_contraction_factor_values():
    assert contraction_factor(3, 2.0) == pytest.approx(2.0 / 3.0, rel=1e-15)
    assert contraction_factor(2, 2.0) == 0.0  # total collapse, degenerate
    assert contraction_factor(10, 2.0) == pytest.approx(1.0 - 2.0 / 90.0, rel=1e-15)


def test_contraction_factor_domain():
    with pytest.raises(ConfigurationError):
        contraction_factor(1, 2.0)
    with pytest.raises(ConfigurationError):
        contraction_factor(5, 0.0)
    with pytest.raises(ConfigurationError):
        contraction_factor(2, 2.5)  # kappa beyond N(N-1)
    assert 0.0 < contraction_factor(5, 19.99) < 1.0
