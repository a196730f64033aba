"""Empirical features, the matching radius, and concentration bounds.

Features are the sufficient empirical statistics driving every attack:
the sample mean (two-state), symbol frequencies of 1..r-1 (r-state), or
transition frequencies over the canonical free edge set (markov).  Vector
distances use the sup norm, under which the per-coordinate concentration
bounds combine by a plain union bound.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .population import MARKOV, R_STATE, TWO_STATE, ModelSpec

_MAX_LENGTH = 2**62


@dataclass(frozen=True)
class FeatureVector:
    """Empirical statistic of one trace.

    `degenerate` is set for markov features when some state was never
    visited (its transition frequencies default to 0).
    """

    values: np.ndarray
    degenerate: bool = False

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))

    @property
    def dim(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class ThresholdSpec:
    """Inputs to the matching radius: population size, margin exponent
    alpha, feature dimension d."""

    n: int
    alpha: float
    d: int

    def __post_init__(self):
        if self.n < 2 or self.alpha <= 0 or self.d < 1:
            raise ValueError("need n >= 2, alpha > 0, d >= 1")


def featurize(trace: np.ndarray, spec: ModelSpec) -> FeatureVector:
    """Feature vector of a single trace."""
    return featurize_rows(np.asarray(trace)[None, :], spec)[0]


def featurize_rows(traces: np.ndarray, spec: ModelSpec) -> list[FeatureVector]:
    """Feature vectors for a batch of equal-length traces (rows)."""
    traces = np.asarray(traces)
    if traces.ndim != 2 or traces.shape[1] == 0:
        raise ValueError("traces must be a nonempty 2-D array")
    vals = feature_matrix(traces, spec)
    if spec.kind != MARKOV:
        return [FeatureVector(v) for v in vals]
    a = traces[:, :-1]
    visited_all = np.ones(len(traces), dtype=bool)
    for i in range(spec.r):
        visited_all &= (a == i).any(axis=1)
    return [FeatureVector(v, degenerate=not ok)
            for v, ok in zip(vals, visited_all)]


def feature_matrix(traces: np.ndarray, spec: ModelSpec) -> np.ndarray:
    """Raw feature values, one row per trace."""
    traces = np.asarray(traces)
    n, length = traces.shape
    if spec.kind in (TWO_STATE, R_STATE):
        counts = np.empty((n, spec.r))
        for i in range(spec.r):
            counts[:, i] = (traces == i).sum(axis=1)
        return counts[:, 1:] / length
    if length < 2:
        raise ValueError("markov features need length >= 2")
    a, b = traces[:, :-1], traces[:, 1:]
    pairs = a.astype(np.int64) * spec.r + b
    cnt = np.empty((n, spec.r, spec.r))
    for i in range(spec.r):
        for j in range(spec.r):
            cnt[:, i, j] = (pairs == i * spec.r + j).sum(axis=1)
    visits = cnt.sum(axis=2)  # visits to each state in positions 0..length-2
    free = spec.free_edges()
    out = np.zeros((n, len(free)))
    for k, (i, j) in enumerate(free):
        vi = visits[:, i]
        out[:, k] = np.where(vi > 0, cnt[:, i, j] / np.maximum(vi, 1), 0.0)
    return out


def distance(a: FeatureVector, b: FeatureVector) -> float:
    """Sup-norm distance between two feature vectors."""
    if a.dim != b.dim:
        raise ValueError("feature dimensions differ")
    return float(np.max(np.abs(a.values - b.values)))


def threshold(tspec: ThresholdSpec) -> float:
    """Matching radius n^-(1/d + alpha/4)."""
    return float(tspec.n) ** -(1.0 / tspec.d + tspec.alpha / 4.0)


def required_length(n: int, alpha: float, c: float, d: int) -> int:
    """Trace length ceil(c * n^(2/d + alpha)) putting a population of n
    users in the no-privacy regime with margin alpha."""
    if c <= 0:
        raise ValueError("c must be positive")
    if d < 1:
        raise ValueError("d must be >= 1")
    val = c * float(n) ** (2.0 / d + alpha)
    if not np.isfinite(val) or val > _MAX_LENGTH:
        raise ConfigurationError("required length overflows the platform integer")
    return int(np.ceil(val))


def chernoff_bound(m: int, delta: float, p: float) -> float:
    """Tail bound min(1, 2 exp(-m delta^2 / (12 p))) on a length-m empirical
    mean deviating by delta/2 from its parameter p."""
    if m < 1 or delta <= 0 or not (0 < p <= 1):
        raise ValueError("need m >= 1, delta > 0, p in (0,1]")
    return min(1.0, 2.0 * np.exp(-m * delta * delta / (12.0 * p)))


def chernoff_bound_single(l: int, delta: float, p: float) -> float:
    """Tail bound min(1, 2 exp(-l delta^2 / (3 p))) on a length-l empirical
    mean deviating by delta from its parameter p."""
    if l < 1 or delta <= 0 or not (0 < p <= 1):
        raise ValueError("need l >= 1, delta > 0, p in (0,1]")
    return min(1.0, 2.0 * np.exp(-l * delta * delta / (3.0 * p)))
