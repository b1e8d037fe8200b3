"""Epoch generation, counting process, and spent waiting time."""

import math

import numpy as np
import pytest

from brownsync import (
    ConfigurationError,
    EpochStream,
    RenewalSpec,
    count_at,
    spent_waiting_time,
)


def _intervals(spec, n, seed=100):
    rng = np.random.default_rng(seed)
    stream = EpochStream(spec)
    out = []
    prev = 0.0
    for _ in range(n):
        t = stream.next_epoch(rng)
        out.append(t - prev)
        prev = t
    return np.array(out)


# ---------------------------------------------------------------------------
# laws
# ---------------------------------------------------------------------------


def test_law_validation():
    with pytest.raises(ConfigurationError):
        RenewalSpec.exponential(0.0)
    with pytest.raises(ConfigurationError):
        RenewalSpec.gamma(-1.0, 1.0)
    with pytest.raises(ConfigurationError):
        RenewalSpec.uniform(2.0, 1.0)
    with pytest.raises(ConfigurationError):
        RenewalSpec.uniform(-0.5, 1.0)
    with pytest.raises(ConfigurationError):
        RenewalSpec.deterministic(0.0)
    with pytest.raises(ConfigurationError):
        RenewalSpec.lognormal(0.0, 0.0)
    with pytest.raises(ConfigurationError):
        RenewalSpec("weibull", (1.0,))


def test_closed_form_moments():
    assert RenewalSpec.exponential(2.0).mean == 0.5
    assert RenewalSpec.exponential(2.0).variance == 0.25
    assert RenewalSpec.gamma(2.0, 0.5).mean == 1.0
    assert RenewalSpec.gamma(2.0, 0.5).variance == 0.5
    assert RenewalSpec.uniform(0.5, 1.5).mean == 1.0
    assert RenewalSpec.uniform(0.5, 1.5).variance == pytest.approx(1.0 / 12.0)
    assert RenewalSpec.deterministic(3.0).mean == 3.0
    assert RenewalSpec.deterministic(3.0).variance == 0.0
    ln = RenewalSpec.lognormal(0.1, 0.4)
    assert ln.mean == pytest.approx(math.exp(0.1 + 0.08))
    assert ln.variance == pytest.approx(
        (math.exp(0.16) - 1.0) * math.exp(0.2 + 0.16)
    )


def test_continuity_flag():
    assert RenewalSpec.exponential(1.0).is_continuous
    assert RenewalSpec.gamma(2.0, 0.5).is_continuous
    assert not RenewalSpec.deterministic(1.0).is_continuous


def test_deterministic_epochs_exact():
    rng = np.random.default_rng(0)
    stream = EpochStream(RenewalSpec.deterministic(1.0))
    assert [stream.next_epoch(rng) for _ in range(3)] == [1.0, 2.0, 3.0]


@pytest.mark.parametrize(
    "spec",
    [
        RenewalSpec.exponential(2.0),
        RenewalSpec.gamma(2.0, 0.5),
        RenewalSpec.uniform(0.5, 1.5),
        RenewalSpec.lognormal(-0.2, 0.5),
    ],
)
def test_sample_moments_match_law(spec):
    n = 100_000
    xs = _intervals(spec, n)
    se_mean = math.sqrt(spec.variance / n)
    assert abs(xs.mean() - spec.mean) <= 3.0 * se_mean
    # SE of the sample variance from the empirical fourth central moment
    m4 = ((xs - xs.mean()) ** 4).mean()
    se_var = math.sqrt(max(m4 - spec.variance**2, 0.0) / n)
    assert abs(xs.var(ddof=1) - spec.variance) <= 3.0 * se_var
    assert (xs > 0).all()


def test_exponential_interval_mean():
    xs = _intervals(RenewalSpec.exponential(2.0), 100_000, seed=42)
    assert abs(xs.mean() - 0.5) <= 3.0 * 0.5 / math.sqrt(len(xs))


def test_epochs_strictly_increasing():
    rng = np.random.default_rng(9)
    stream = EpochStream(RenewalSpec.uniform(0.0, 0.1))
    prev = 0.0
    for _ in range(5_000):
        t = stream.next_epoch(rng)
        assert t > prev
        prev = t


def test_stream_counts():
    rng = np.random.default_rng(10)
    stream = EpochStream(RenewalSpec.exponential(1.0))
    for k in range(1, 6):
        stream.next_epoch(rng)
        assert stream.count == k


# ---------------------------------------------------------------------------
# counting process and spent waiting time
# ---------------------------------------------------------------------------


def test_count_at():
    epochs = (1.0, 2.0, 3.0)
    assert count_at(epochs, 0.5) == 0
    assert count_at(epochs, 2.0) == 2  # boundary inclusive
    assert count_at(epochs, 9.0) == 3
    assert count_at((), 4.0) == 0
    with pytest.raises(ConfigurationError):
        count_at(epochs, -1.0)


def test_spent_waiting_time():
    epochs = (1.0, 2.0, 3.0)
    assert spent_waiting_time(epochs, 2.5) == 0.5
    assert spent_waiting_time((), 7.0) == 7.0
    assert spent_waiting_time(epochs, 0.25) == 0.25
    with pytest.raises(ConfigurationError):
        spent_waiting_time(epochs, -0.5)


def _replica_counts(rate, horizon, replicas, seed):
    """(count, last epoch, first few intervals) per replica."""
    spec = RenewalSpec.exponential(rate)
    out = []
    rng = np.random.default_rng(seed)
    for _ in range(replicas):
        stream = EpochStream(spec)
        epochs = []
        t = stream.next_epoch(rng)
        while t <= horizon:
            epochs.append(t)
            t = stream.next_epoch(rng)
        out.append(epochs)
    return out


def test_poisson_counts():
    # exponential intervals make Pi_t Poisson: mean and variance both delta*t
    horizon, replicas = 20.0, 100_000
    counts = np.array(
        [len(e) for e in _replica_counts(1.0, horizon, replicas, seed=77)]
    )
    se_mean = math.sqrt(horizon / replicas)
    assert abs(counts.mean() - horizon) <= 3.0 * se_mean
    m4 = ((counts - counts.mean()) ** 4).mean()
    se_var = math.sqrt((m4 - horizon**2) / replicas)
    assert abs(counts.var(ddof=1) - horizon) <= 3.0 * se_var


def test_conditional_interval_and_spent_time_uniformity():
    # given Pi_t = n, every interval and the spent time average t/(n+1)
    horizon = 10.0
    replica_epochs = _replica_counts(1.0, horizon, 60_000, seed=78)
    by_n = {}
    for epochs in replica_epochs:
        by_n.setdefault(len(epochs), []).append(epochs)
    for n in (6, 10, 14):
        group = by_n[n]
        expected = horizon / (n + 1)
        for q in (1, n // 2, n):
            gaps = np.array(
                [e[q - 1] - (e[q - 2] if q >= 2 else 0.0) for e in group]
            )
            se = gaps.std(ddof=1) / math.sqrt(len(gaps))
            assert abs(gaps.mean() - expected) <= 3.0 * se
        spent = np.array([horizon - e[-1] for e in group])
        se = spent.std(ddof=1) / math.sqrt(len(spent))
        assert abs(spent.mean() - expected) <= 3.0 * se
