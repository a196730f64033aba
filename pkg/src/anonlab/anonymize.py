"""Anonymization: a uniformly random permutation of user identities.

The true permutation is retained next to Y for evaluation, but the
adversary-facing view built in the attack module structurally excludes it.
"""

from dataclasses import dataclass

import numpy as np

from .population import UserParams
from .tracegen import TraceCollection


@dataclass(frozen=True)
class Permutation:
    """Bijection on {0,...,n-1}; forward[u] is the pseudonym of user u."""

    forward: np.ndarray

    def __post_init__(self):
        f = np.asarray(self.forward, dtype=np.int64)
        object.__setattr__(self, "forward", f)
        if f.ndim != 1 or not np.array_equal(np.sort(f), np.arange(len(f))):
            raise ValueError("forward must be a permutation of 0..n-1")

    @property
    def n(self) -> int:
        return len(self.forward)

    @property
    def inverse(self) -> np.ndarray:
        inv = np.empty(self.n, dtype=np.int64)
        inv[self.forward] = np.arange(self.n)
        return inv


@dataclass(frozen=True)
class AnonymizedCollection:
    """W plus the permuted traces Y; `hidden` is ground truth only."""

    W: np.ndarray
    Y: np.ndarray
    hidden: Permutation
    params: tuple[UserParams, ...]

    @property
    def n(self) -> int:
        return self.W.shape[0]

    @property
    def l(self) -> int:
        return self.W.shape[1]

    @property
    def m(self) -> int:
        return self.Y.shape[1]


def sample_permutation(n: int, rng: np.random.Generator) -> Permutation:
    """Uniform draw from the symmetric group on n elements."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return Permutation(rng.permutation(n))


def apply(collection: TraceCollection, pi: Permutation) -> AnonymizedCollection:
    """Relabel X by pi: Y[pi(u)] = X[u].  W passes through untouched."""
    if pi.n != collection.n:
        raise ValueError("permutation size does not match the collection")
    Y = np.empty_like(collection.X)
    Y[pi.forward] = collection.X
    return AnonymizedCollection(collection.W, Y, pi, collection.params)
