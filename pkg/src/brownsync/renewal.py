"""Synchronization epochs: Poisson flows and general renewal processes.

Epochs are the random instants {tau_n} at which a synchronizing jump fires.
Intervals between consecutive epochs are i.i.d. with one of a few supported
laws; the exponential law makes the epoch sequence a Poisson flow and the
particle system a Markov process, the others put it in renewal territory.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConfigurationError

LAWS = ("exponential", "gamma", "uniform", "deterministic", "lognormal")


@dataclass(frozen=True)
class RenewalSpec:
    """Law of the i.i.d. inter-epoch intervals, supported on (0, inf).

    ``mean`` and ``variance`` are closed-form moments of the interval law.
    The deterministic law has a non-continuous distribution function, so it
    falls outside the renewal assumptions of the analysis; it is kept as a
    testing convenience and flagged via ``is_continuous``.
    """

    law: str
    params: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        if self.law not in LAWS:
            raise ConfigurationError(f"unknown interval law {self.law!r}")
        p = self.params
        if self.law == "exponential":
            if len(p) != 1 or p[0] <= 0:
                raise ConfigurationError("exponential law needs rate > 0")
        elif self.law == "gamma":
            if len(p) != 2 or p[0] <= 0 or p[1] <= 0:
                raise ConfigurationError("gamma law needs shape > 0 and scale > 0")
        elif self.law == "uniform":
            if len(p) != 2 or p[0] < 0 or p[1] <= p[0]:
                raise ConfigurationError("uniform law needs 0 <= low < high")
        elif self.law == "deterministic":
            if len(p) != 1 or p[0] <= 0:
                raise ConfigurationError("deterministic law needs period > 0")
        elif self.law == "lognormal":
            if len(p) != 2 or p[1] <= 0:
                raise ConfigurationError("lognormal law needs log_sd > 0")

    # -- constructors ------------------------------------------------------

    @classmethod
    def exponential(cls, rate: float) -> "RenewalSpec":
        return cls("exponential", (rate,))

    @classmethod
    def gamma(cls, shape: float, scale: float) -> "RenewalSpec":
        return cls("gamma", (shape, scale))

    @classmethod
    def uniform(cls, low: float, high: float) -> "RenewalSpec":
        return cls("uniform", (low, high))

    @classmethod
    def deterministic(cls, period: float) -> "RenewalSpec":
        return cls("deterministic", (period,))

    @classmethod
    def lognormal(cls, log_mean: float, log_sd: float) -> "RenewalSpec":
        return cls("lognormal", (log_mean, log_sd))

    # -- moments and sampling ----------------------------------------------

    @property
    def mean(self) -> float:
        p = self.params
        if self.law == "exponential":
            return 1.0 / p[0]
        if self.law == "gamma":
            return p[0] * p[1]
        if self.law == "uniform":
            return 0.5 * (p[0] + p[1])
        if self.law == "deterministic":
            return p[0]
        return math.exp(p[0] + 0.5 * p[1] ** 2)

    @property
    def variance(self) -> float:
        p = self.params
        if self.law == "exponential":
            return 1.0 / p[0] ** 2
        if self.law == "gamma":
            return p[0] * p[1] ** 2
        if self.law == "uniform":
            return (p[1] - p[0]) ** 2 / 12.0
        if self.law == "deterministic":
            return 0.0
        s2 = p[1] ** 2
        return (math.exp(s2) - 1.0) * math.exp(2.0 * p[0] + s2)

    @property
    def is_continuous(self) -> bool:
        return self.law != "deterministic"

    def sample(self, rng: np.random.Generator) -> float:
        return float(self.sample_batch(rng, None))

    def sample_batch(self, rng: np.random.Generator, size):
        """One interval (size=None) or a numpy batch from the same stream.

        Batched draws consume the generator exactly like repeated scalar
        draws, so batching is purely a speed knob.
        """
        p = self.params
        if self.law == "exponential":
            return rng.exponential(1.0 / p[0], size)
        if self.law == "gamma":
            return rng.gamma(p[0], p[1], size)
        if self.law == "uniform":
            return rng.uniform(p[0], p[1], size)
        if self.law == "deterministic":
            return p[0] if size is None else np.full(size, p[0])
        return rng.lognormal(p[0], p[1], size)

    def to_dict(self) -> dict:
        names = {
            "exponential": ("rate",),
            "gamma": ("shape", "scale"),
            "uniform": ("low", "high"),
            "deterministic": ("period",),
            "lognormal": ("log_mean", "log_sd"),
        }[self.law]
        return {"law": self.law, **dict(zip(names, self.params))}


@dataclass
class EpochStream:
    """Single-owner cursor over the epoch sequence tau_0 = 0 < tau_1 < ...

    One stream per replica per worker; never shared.
    """

    spec: RenewalSpec
    time: float = 0.0
    count: int = 0
    _buffer: list = field(default_factory=list, repr=False)
    _buffer_size: int = field(default=32, repr=False)

    def next_epoch(self, rng: np.random.Generator) -> float:
        """Advance by one i.i.d. interval and return the new epoch time.

        Intervals are drawn in batches from the stream (same values as
        one-at-a-time draws); the full horizon is never materialized.
        """
        if not self._buffer:
            batch = self.spec.sample_batch(rng, self._buffer_size)
            self._buffer = batch.tolist()
            self._buffer.reverse()
            if self._buffer_size < 4096:
                self._buffer_size *= 2
        interval = self._buffer.pop()
        # a zero interval is a probability-0 event; treat it as a generator bug
        assert interval > 0.0, "non-positive inter-epoch interval"
        self.time += interval
        self.count += 1
        return self.time


def count_at(epochs: Sequence[float], t: float) -> int:
    """Counting process Pi_t = max{m : tau_m <= t} over a sorted epoch list."""
    if t < 0:
        raise ConfigurationError(f"need t >= 0, got {t}")
    return bisect_right(epochs, t)


def spent_waiting_time(epochs: Sequence[float], t: float) -> float:
    """Time elapsed since the last epoch at or before t (tau_0 = 0 if none)."""
    if t < 0:
        raise ConfigurationError(f"need t >= 0, got {t}")
    i = bisect_right(epochs, t)
    last = epochs[i - 1] if i > 0 else 0.0
    return t - last
