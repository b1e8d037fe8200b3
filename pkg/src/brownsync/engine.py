"""Exact event-driven simulation of Brownian particles with synchronizing jumps.

Between epochs every particle moves as an independent Brownian motion with
diffusion coefficient sigma; at each epoch a uniformly chosen ordered tuple
of particles is synchronized.  There is no time discretization anywhere: a
particle that has been idle for a while is caught up with exact Gaussian
increments when it is next touched (lazy update).

Randomness discipline.  Each replica derives three named substreams from
(base_seed, replica_index) by seed-sequence spawning: epoch intervals, tuple
choices, and diffusion.  The diffusion stream splits further into one
substream per particle, and a particle consumes exactly one normal variate
per event interval it crosses, in event order.  Because consumption is keyed
by (particle, event count), a lazy run and a run that eagerly refreshes all
particles at every event draw identical variates and produce bit-identical
trajectories; laziness only batches the python-level work.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from numpy.random import Generator, PCG64, SeedSequence

from .errors import ConfigurationError, EpochBudgetError
from .particles import (
    InteractionSignature,
    IndexTuple,
    ParticleConfiguration,
    TupleSampler,
    _two_pass_variance,
    apply_sync,
    kappa_analytic,
)
from .renewal import EpochStream, RenewalSpec

_EPOCHS, _TUPLES, _DIFFUSION = 0, 1, 2

# forcibly refresh everyone and drop old event times beyond this window so a
# long uninterrupted stretch of epochs cannot grow memory without bound
_COMPACTION_WINDOW = 1 << 20


def _substream(base_seed: int, replica: int, *key: int) -> Generator:
    return Generator(PCG64(SeedSequence(base_seed, spawn_key=(replica, *key))))


@dataclass(frozen=True)
class InitialCondition:
    """Law of x(0): all particles at zero, an explicit vector, or i.i.d. Gaussian."""

    kind: str
    values: tuple[float, ...] | None = None
    mean: float = 0.0
    sd: float = 1.0

    def __post_init__(self):
        if self.kind not in ("all-zero", "explicit", "iid-gaussian"):
            raise ConfigurationError(f"unknown initial condition {self.kind!r}")
        if self.kind == "explicit":
            if not self.values:
                raise ConfigurationError("explicit initial condition needs values")
            object.__setattr__(
                self, "values", tuple(float(v) for v in self.values)
            )
        if self.kind == "iid-gaussian" and self.sd <= 0:
            raise ConfigurationError("iid-gaussian initial condition needs sd > 0")

    @classmethod
    def all_zero(cls) -> "InitialCondition":
        return cls("all-zero")

    @classmethod
    def explicit(cls, values) -> "InitialCondition":
        return cls("explicit", values=tuple(values))

    @classmethod
    def iid_gaussian(cls, mean: float = 0.0, sd: float = 1.0) -> "InitialCondition":
        return cls("iid-gaussian", mean=float(mean), sd=float(sd))

    def expected_spread(self) -> float:
        """E V(x(0)), exact for every supported kind (the 1/(N-1) estimator
        of an i.i.d. sample is unbiased for the population variance)."""
        if self.kind == "all-zero":
            return 0.0
        if self.kind == "explicit":
            return _two_pass_variance(self.values)
        return self.sd * self.sd

    def to_dict(self) -> dict:
        if self.kind == "explicit":
            return {"kind": "explicit", "values": list(self.values)}
        if self.kind == "iid-gaussian":
            return {"kind": "iid-gaussian", "mean": self.mean, "sd": self.sd}
        return {"kind": "all-zero"}


@dataclass(frozen=True)
class SimulationConfig:
    """Complete description of one Monte Carlo experiment."""

    n: int
    sigma: float
    epochs: RenewalSpec | None
    signature: InteractionSignature
    initial: InitialCondition
    query_times: tuple[float, ...]
    replicas: int
    base_seed: int
    max_epochs: int = 100_000_000

    def __post_init__(self):
        object.__setattr__(
            self, "query_times", tuple(float(t) for t in self.query_times)
        )
        if self.n < 2:
            raise ConfigurationError(f"need N >= 2, got {self.n}")
        # sigma = 0 (frozen free dynamics) is allowed for diagnostics
        if not self.sigma >= 0:
            raise ConfigurationError(f"need sigma >= 0, got {self.sigma}")
        if self.signature.k > self.n:
            raise ConfigurationError(
                f"signature k={self.signature.k} exceeds N={self.n}"
            )
        q = self.query_times
        if not q:
            raise ConfigurationError("query_times must not be empty")
        if q[0] < 0 or any(b <= a for a, b in zip(q, q[1:])):
            raise ConfigurationError(
                "query_times must be nonnegative and strictly increasing"
            )
        if self.replicas < 1:
            raise ConfigurationError("need at least one replica")
        if self.base_seed < 0:
            raise ConfigurationError("base_seed must be a nonnegative integer")
        if self.max_epochs < 1:
            raise ConfigurationError("max_epochs must be positive")
        if self.initial.kind == "explicit" and len(self.initial.values) != self.n:
            raise ConfigurationError(
                f"explicit initial condition has {len(self.initial.values)} "
                f"values, expected N={self.n}"
            )

    @property
    def kappa(self) -> float:
        return kappa_analytic(self.signature)

    @property
    def is_markov(self) -> bool:
        """Exponential epochs make the particle system a Markov process."""
        return self.epochs is not None and self.epochs.law == "exponential"

    @property
    def is_degenerate(self) -> bool:
        """True when a single jump collapses the whole system (k_N = 0)."""
        sig = self.signature
        return len(sig.parts) == 1 and sig.k == self.n

    def initial_spread(self) -> float:
        return self.initial.expected_spread()


# ---------------------------------------------------------------------------
# op-level lazy state: drive one trajectory by hand with an explicit stream
# ---------------------------------------------------------------------------


class LazyParticleState:
    """Positions plus per-particle freshness times, refreshed on demand.

    This is the manual-driving surface: each ``advance`` catches a particle
    up with a single exact Gaussian increment drawn from the stream you pass
    in.  ``run_replica`` uses its own internally keyed streams instead so
    that its trajectories are reproducible and batching-independent.
    """

    def __init__(self, positions, sigma: float, now: float = 0.0):
        self.positions = [float(v) for v in positions]
        if not self.positions:
            raise ConfigurationError("state needs at least one particle")
        if sigma < 0:
            raise ConfigurationError("sigma must be nonnegative")
        self.sigma = float(sigma)
        self.now = float(now)
        self.last_update = [self.now] * len(self.positions)

    @property
    def n(self) -> int:
        return len(self.positions)

    def advance(self, which, t: float, rng: np.random.Generator) -> None:
        """Move the selected particles to time t by one Gaussian increment
        each (mean 0, variance sigma^2 * elapsed).  Exact, no discretization.
        """
        for i in which:
            if t < self.last_update[i]:
                raise ConfigurationError(
                    f"cannot advance particle {i} to t={t}, it is already at "
                    f"{self.last_update[i]}"
                )
        for i in which:
            dt = t - self.last_update[i]
            if dt > 0.0:
                self.positions[i] += self.sigma * math.sqrt(dt) * float(
                    rng.standard_normal()
                )
            self.last_update[i] = t
        if t > self.now:
            self.now = t

    def step_sync(
        self,
        sig: InteractionSignature,
        epoch: float,
        rng: np.random.Generator,
        tup: IndexTuple | None = None,
    ) -> IndexTuple:
        """One synchronization event: pick a uniform tuple (unless forced),
        advance only the involved particles to the epoch, and jump.
        """
        if epoch < self.now:
            raise ConfigurationError(f"epoch {epoch} is in the past of {self.now}")
        if tup is None:
            tup = IndexTuple(TupleSampler(self.n, sig.k).draw(rng))
        if len(tup) != sig.k:
            raise ConfigurationError(
                f"tuple length {len(tup)} does not match signature k={sig.k}"
            )
        self.advance(tup.indices, epoch, rng)
        synced = apply_sync(
            ParticleConfiguration(tuple(self.positions)), sig, tup
        )
        self.positions = list(synced.positions)
        self.now = epoch
        return tup

    def snapshot(self, t: float) -> ParticleConfiguration:
        """Configuration at time t; every particle must already be fresh."""
        if any(u != t for u in self.last_update):
            raise ConfigurationError(
                "snapshot requires all particles refreshed to the query time"
            )
        return ParticleConfiguration(tuple(self.positions))


def centered_snapshot(state: LazyParticleState, t: float) -> ParticleConfiguration:
    """The configuration seen from its center of mass: x - M(x) * 1."""
    snap = state.snapshot(t)
    m = sum(snap.positions) / len(snap.positions)
    return ParticleConfiguration(tuple(v - m for v in snap.positions))


# ---------------------------------------------------------------------------
# replica engine: production event loop with keyed substreams
# ---------------------------------------------------------------------------


class _Replica:
    """One trajectory driven by (base_seed, replica_index)-keyed substreams."""

    def __init__(self, config: SimulationConfig, replica_index: int, eager: bool):
        if replica_index < 0:
            raise ConfigurationError("replica_index must be nonnegative")
        self.config = config
        self.eager = eager
        n = config.n
        seed = config.base_seed
        self.rng_tuples = _substream(seed, replica_index, _TUPLES)
        self.diff = [
            _substream(seed, replica_index, _DIFFUSION, i) for i in range(n)
        ]
        self.stream = (
            EpochStream(config.epochs) if config.epochs is not None else None
        )
        self.rng_epochs = _substream(seed, replica_index, _EPOCHS)
        self.sampler = TupleSampler(n, config.signature.k)
        self.blocks = config.signature.blocks()
        self.replica_index = replica_index

        init = config.initial
        if init.kind == "all-zero":
            self.pos = [0.0] * n
        elif init.kind == "explicit":
            self.pos = list(init.values)
        else:
            self.pos = [
                init.mean + init.sd * float(g.standard_normal()) for g in self.diff
            ]
        self.times = [0.0]
        self.last = [0] * n
        self.epochs_done = 0

    def _refresh(self, i: int, upto: int) -> None:
        # one normal per event interval crossed, drawn in order; the batched
        # array call yields the same values as repeated scalar calls, so the
        # eager run (always one interval at a time) matches bit-exactly
        a = self.last[i]
        if a == upto:
            return
        z = self.diff[i].standard_normal(upto - a).tolist()
        times = self.times
        p = self.pos[i]
        s = self.sigma
        t0 = times[a]
        for m, zm in enumerate(z, start=a + 1):
            t1 = times[m]
            p += s * math.sqrt(t1 - t0) * zm
            t0 = t1
        self.pos[i] = p
        self.last[i] = upto

    @property
    def sigma(self) -> float:
        return self.config.sigma

    def _refresh_all(self, upto: int) -> None:
        for i in range(self.config.n):
            self._refresh(i, upto)

    def _compact(self) -> None:
        # everyone is fresh; restart event indexing at the current instant
        self.times = [self.times[-1]]
        n = self.config.n
        self.last = [0] * n

    def run(self):
        """Interleave epochs and query times; record (t, V, M) per query."""
        config = self.config
        queries = config.query_times
        results = []
        next_epoch = (
            self.stream.next_epoch(self.rng_epochs) if self.stream else math.inf
        )
        qi = 0
        while qi < len(queries):
            t_q = queries[qi]
            if next_epoch <= t_q:
                # ties go to the epoch: trajectories are right-continuous, a
                # query at an epoch instant sees the post-jump state
                self.epochs_done += 1
                if self.epochs_done > config.max_epochs:
                    raise EpochBudgetError(config.max_epochs, self.replica_index)
                self.times.append(next_epoch)
                upto = len(self.times) - 1
                tup = self.sampler.draw(self.rng_tuples)
                if self.eager:
                    self._refresh_all(upto)
                else:
                    for i in tup:
                        self._refresh(i, upto)
                pos = self.pos
                for start, stop in self.blocks:
                    leader_value = pos[tup[start]]
                    for j in range(start, stop):
                        pos[tup[j]] = leader_value
                if len(self.times) > _COMPACTION_WINDOW:
                    self._refresh_all(upto)
                    self._compact()
                next_epoch = self.stream.next_epoch(self.rng_epochs)
            else:
                self.times.append(t_q)
                self._refresh_all(len(self.times) - 1)
                pos = self.pos
                results.append(
                    (t_q, _two_pass_variance(pos), sum(pos) / config.n)
                )
                self._compact()
                qi += 1
        return results


def run_replica(
    config: SimulationConfig, replica_index: int, update: str = "lazy"
):
    """Simulate one trajectory; returns [(t, V(x(t)), M(x(t))), ...].

    Output depends only on (config, replica_index), never on scheduling.
    ``update="eager"`` refreshes every particle at every event instead of on
    demand; it consumes the identical variates and must give bit-identical
    results (that equality is asserted by the test suite).
    """
    if update not in ("lazy", "eager"):
        raise ConfigurationError(f"unknown update mode {update!r}")
    return _Replica(config, replica_index, eager=(update == "eager")).run()


# ---------------------------------------------------------------------------
# replica-parallel Monte Carlo estimation of R_N(t) = E V(x(t))
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class VarianceEstimate:
    """Monte Carlo estimate of R_N(t) at one query time."""

    t: float
    mean: float
    stderr: float
    replicas: int


@dataclass(frozen=True)
class EstimateResult:
    """Per-query-time estimates plus center-of-mass dispersion diagnostics."""

    estimates: tuple[VarianceEstimate, ...]
    m_mean: tuple[float, ...]
    m_variance: tuple[float, ...]
    replicas_completed: int
    budget_exceeded: bool

    def means(self) -> list[float]:
        return [e.mean for e in self.estimates]


def _run_chunk(config: SimulationConfig, start: int, stop: int):
    """Run replicas [start, stop); stop early at the first budget failure."""
    rows = []
    for r in range(start, stop):
        try:
            rows.append(run_replica(config, r))
        except EpochBudgetError:
            return rows, r
    return rows, None


def _reduce(ts, v_mat: np.ndarray, m_mat: np.ndarray, budget: bool) -> EstimateResult:
    reps = v_mat.shape[0]
    if reps < 2:
        raise ConfigurationError("need at least 2 completed replicas to estimate")
    means = v_mat.mean(axis=0)
    stderr = v_mat.std(axis=0, ddof=1) / math.sqrt(reps)
    estimates = tuple(
        VarianceEstimate(float(t), float(mu), float(se), reps)
        for t, mu, se in zip(ts, means, stderr)
    )
    return EstimateResult(
        estimates=estimates,
        m_mean=tuple(float(v) for v in m_mat.mean(axis=0)),
        m_variance=tuple(float(v) for v in m_mat.var(axis=0, ddof=1)),
        replicas_completed=reps,
        budget_exceeded=budget,
    )


def estimate_R(config: SimulationConfig, workers: int = 1) -> EstimateResult:
    """Monte Carlo estimate of R_N(t) at every query time.

    Replica r is always driven by the substreams keyed to (base_seed, r) and
    the reduction runs in replica order over a fixed-shape matrix, so the
    result is byte-identical for any ``workers`` count.  If some replica
    exhausts its epoch budget, the estimate covers the longest clean prefix
    of replica indices and is flagged ``budget_exceeded`` (the prefix rule
    keeps the completed set scheduling-independent).
    """
    if config.replicas < 2:
        raise ConfigurationError("estimate_R needs at least 2 replicas")
    if workers < 1:
        raise ConfigurationError("workers must be >= 1")
    reps = config.replicas
    if workers == 1:
        chunks = [(0, reps)]
    else:
        step = -(-reps // workers)
        chunks = [(s, min(s + step, reps)) for s in range(0, reps, step)]

    results: list[list] = [None] * reps
    first_fail = None
    if workers == 1:
        outs = [_run_chunk(config, s, e) for s, e in chunks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futs = [pool.submit(_run_chunk, config, s, e) for s, e in chunks]
            outs = [f.result() for f in futs]
    for (s, _), (rows, fail) in zip(chunks, outs):
        for off, row in enumerate(rows):
            results[s + off] = row
        if fail is not None and (first_fail is None or fail < first_fail):
            first_fail = fail

    budget = first_fail is not None
    usable = reps if first_fail is None else first_fail
    if usable < 2:
        raise EpochBudgetError(config.max_epochs, first_fail)
    ts = config.query_times
    v_mat = np.array(
        [[row[j][1] for j in range(len(ts))] for row in results[:usable]]
    )
    m_mat = np.array(
        [[row[j][2] for j in range(len(ts))] for row in results[:usable]]
    )
    return _reduce(ts, v_mat, m_mat, budget)
