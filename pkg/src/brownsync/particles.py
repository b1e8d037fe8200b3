"""Particle configurations, spread statistics and synchronizing jump maps.

A configuration is a point in R^N (one coordinate per particle).  A
synchronizing jump picks an ordered tuple of k distinct particles, splits it
into consecutive groups of sizes (k_1, ..., k_l), and teleports every member
of a group onto the first particle of that group (the group leader).  The
strength of one such jump, averaged over all equally likely tuples, is
measured by the constant kappa = sum(k_j^2) - k: the expected empirical
variance contracts by the factor 1 - kappa / (N(N-1)).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DegenerateConfigurationError

# kappa_enumerate visits every ordered tuple; above this it is no longer a
# desk-scale oracle and the caller should trust kappa_analytic instead.
ENUMERATION_CAP = 1_000_000


@dataclass(frozen=True)
class ParticleConfiguration:
    """Positions of N >= 2 particles on the real line at a common instant."""

    positions: tuple[float, ...]

    def __post_init__(self):
        pos = tuple(float(v) for v in self.positions)
        object.__setattr__(self, "positions", pos)
        if len(pos) < 2:
            raise ConfigurationError("a configuration needs at least 2 particles")
        if not all(math.isfinite(v) for v in pos):
            raise ConfigurationError("all particle coordinates must be finite")

    @property
    def n(self) -> int:
        return len(self.positions)


@dataclass(frozen=True)
class InteractionSignature:
    """Group sizes (k_1, ..., k_l) of a symmetric k-particle synchronization.

    Every group must have at least two members, so k = sum(parts) >= 2.
    """

    parts: tuple[int, ...]

    def __post_init__(self):
        parts = tuple(int(p) for p in self.parts)
        object.__setattr__(self, "parts", parts)
        if len(parts) < 1:
            raise ConfigurationError("signature needs at least one group")
        if any(p < 2 for p in parts):
            raise ConfigurationError(f"every group size must be >= 2, got {parts}")

    @property
    def k(self) -> int:
        return sum(self.parts)

    def blocks(self) -> tuple[tuple[int, int], ...]:
        """(start, stop) index ranges of each group within an ordered tuple."""
        out, pos = [], 0
        for kj in self.parts:
            out.append((pos, pos + kj))
            pos += kj
        return tuple(out)


@dataclass(frozen=True)
class IndexTuple:
    """An ordered tuple of pairwise distinct particle indices (0-based)."""

    indices: tuple[int, ...]

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        object.__setattr__(self, "indices", idx)
        if len(set(idx)) != len(idx):
            raise ConfigurationError(f"indices must be pairwise distinct, got {idx}")
        if any(i < 0 for i in idx):
            raise ConfigurationError("indices must be nonnegative")

    def __len__(self) -> int:
        return len(self.indices)


def center_of_mass(x: ParticleConfiguration) -> float:
    """M(x) = (1/N) sum of coordinates."""
    return sum(x.positions) / x.n


def empirical_variance(x: ParticleConfiguration) -> float:
    """V(x) = (1/(N-1)) sum (x_m - M(x))^2, the spread of a configuration.

    Two-pass (mean first, then squared deviations) so that configurations far
    from the origin do not suffer catastrophic cancellation.
    """
    return _two_pass_variance(x.positions)


def _two_pass_variance(pos) -> float:
    # exact zero for collapsed configurations: the computed mean of N equal
    # values can round away from them, which would leave a ~1e-26 residue
    if min(pos) == max(pos):
        return 0.0
    n = len(pos)
    m = sum(pos) / n
    ss = 0.0
    for v in pos:
        d = v - m
        ss += d * d
    return ss / (n - 1)


def apply_sync(
    x: ParticleConfiguration,
    sig: InteractionSignature,
    tup: IndexTuple,
) -> ParticleConfiguration:
    """Synchronize the particles selected by ``tup`` according to ``sig``.

    The tuple is split into consecutive blocks of sizes (k_1, ..., k_l); every
    member of block j takes the coordinate of the block's first particle.
    Particles outside the tuple keep their coordinates bit-identically.
    """
    if len(tup) != sig.k:
        raise ConfigurationError(
            f"tuple length {len(tup)} does not match signature k={sig.k}"
        )
    if sig.k > x.n:
        raise ConfigurationError(f"signature k={sig.k} exceeds N={x.n}")
    if any(i >= x.n for i in tup.indices):
        raise ConfigurationError("tuple index out of range")
    out = list(x.positions)
    for start, stop in sig.blocks():
        leader_value = out[tup.indices[start]]
        for pos in range(start, stop):
            out[tup.indices[pos]] = leader_value
    return ParticleConfiguration(tuple(out))


class TupleSampler:
    """Uniform ordered k-tuples of distinct indices via partial Fisher-Yates.

    Keeps one scratch index array alive so that each draw is O(k) after the
    O(N) setup; uniformity holds from any starting permutation, so the
    scratch array is never reset between draws.
    """

    def __init__(self, n: int, k: int):
        if k < 2 or k > n:
            raise ConfigurationError(f"need 2 <= k <= N, got k={k}, N={n}")
        self.n = n
        self.k = k
        self._scratch = list(range(n))

    def draw(self, rng: np.random.Generator) -> tuple[int, ...]:
        s, n = self._scratch, self.n
        for j in range(self.k):
            other = int(rng.integers(j, n))
            s[j], s[other] = s[other], s[j]
        return tuple(s[: self.k])


def sample_tuple(n: int, k: int, rng: np.random.Generator) -> IndexTuple:
    """Draw an IndexTuple uniformly over all N(N-1)...(N-k+1) ordered tuples."""
    return IndexTuple(TupleSampler(n, k).draw(rng))


def kappa_analytic(sig: InteractionSignature) -> float:
    """Interaction constant kappa = sum(k_j^2) - k; strictly positive."""
    return float(sum(p * p for p in sig.parts) - sig.k)


def kappa_enumerate(
    sig: InteractionSignature, n: int, x: ParticleConfiguration
) -> float:
    """Brute-force kappa: average V over all ordered tuples, solve for kappa.

    Applies ``apply_sync`` to every ordered k-tuple from an N-particle
    configuration and returns the kappa implied by
    mean(V') / V(x) = 1 - kappa / (N(N-1)).  Up to floating-point error the
    result is independent of ``x``; this is the enumeration oracle against
    ``kappa_analytic``.
    """
    if x.n != n:
        raise ConfigurationError(f"configuration has N={x.n}, expected {n}")
    if sig.k > n:
        raise ConfigurationError(f"signature k={sig.k} exceeds N={n}")
    count = math.perm(n, sig.k)
    if count > ENUMERATION_CAP:
        raise ConfigurationError(
            f"{count} ordered tuples exceed the enumeration cap {ENUMERATION_CAP}"
        )
    v0 = empirical_variance(x)
    if v0 == 0.0:
        raise DegenerateConfigurationError(
            "V(x)=0: implied-kappa ratio is undefined on a collapsed configuration"
        )
    total = 0.0
    for tup in itertools.permutations(range(n), sig.k):
        total += empirical_variance(apply_sync(x, sig, IndexTuple(tup)))
    mean_v = total / count
    return (1.0 - mean_v / v0) * n * (n - 1)


def contraction_factor(n: int, kappa: float) -> float:
    """One-jump contraction k_N = 1 - kappa/(N(N-1)) of the expected spread.

    k_N = 0 (every jump collapses the whole system in expectation) is allowed
    but callers should flag it as degenerate; kappa beyond that is an error.
    """
    if n < 2:
        raise ConfigurationError(f"need N >= 2, got {n}")
    if kappa <= 0:
        raise ConfigurationError(f"kappa must be positive, got {kappa}")
    pairs = n * (n - 1)
    if kappa > pairs:
        raise ConfigurationError(
            f"kappa={kappa} exceeds N(N-1)={pairs}; contraction would leave [0,1)"
        )
    return 1.0 - kappa / pairs
