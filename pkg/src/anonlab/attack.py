"""The adversary: statistical matching of training traces to anonymized ones.

All attacks operate on an AdversaryView, which carries only what the
adversary is allowed to see (W, Y, and the model structure) -- never the
hidden permutation or the users' true parameters.
"""

from collections import Counter
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .anonymize import AnonymizedCollection
from .errors import ResourceLimitError
from .population import ModelSpec
from .stats import ThresholdSpec, feature_matrix, threshold

MATCHED = "matched"
AMBIGUOUS = "ambiguous"
NO_MATCH = "no-match"

ASSIGNMENT_CAP = 2000


@dataclass(frozen=True)
class AdversaryView:
    """What the adversary sees: training traces, anonymized traces, model."""

    W: np.ndarray
    Y: np.ndarray
    spec: ModelSpec

    @property
    def n(self) -> int:
        return self.W.shape[0]

    @property
    def l(self) -> int:
        return self.W.shape[1]

    @property
    def m(self) -> int:
        return self.Y.shape[1]


def adversary_view(anon: AnonymizedCollection, spec: ModelSpec) -> AdversaryView:
    """Strip ground truth from an anonymized collection."""
    return AdversaryView(anon.W, anon.Y, spec)


@dataclass(frozen=True)
class MatchOutcome:
    """Verdict of one matching attempt for one target user."""

    target: int
    verdict: str
    matched: int | None = None
    candidates: tuple[int, ...] = field(default=())
    correct: bool | None = None

    def __post_init__(self):
        if self.verdict == MATCHED and self.matched is None:
            raise ValueError("matched verdict needs an index")
        if self.verdict == AMBIGUOUS and len(self.candidates) < 2:
            raise ValueError("ambiguous verdict needs >= 2 candidates")


def _feature_distances(view: AdversaryView, target: int) -> np.ndarray:
    fw = feature_matrix(view.W[target:target + 1], view.spec)[0]
    fy = feature_matrix(view.Y, view.spec)
    return np.abs(fy - fw).max(axis=1)


def threshold_match(view: AdversaryView, target: int, alpha: float) -> MatchOutcome:
    """Collect all pseudonyms within the matching radius of the target's
    training features; a unique hit is a match, several are ambiguous."""
    d = view.spec.feature_dim
    radius = threshold(ThresholdSpec(view.n, alpha, d))
    dist = _feature_distances(view, target)
    cand = np.flatnonzero(dist <= radius)
    if len(cand) == 1:
        return MatchOutcome(target, MATCHED, matched=int(cand[0]),
                            candidates=(int(cand[0]),))
    if len(cand) >= 2:
        return MatchOutcome(target, AMBIGUOUS, candidates=tuple(int(c) for c in cand))
    return MatchOutcome(target, NO_MATCH)


def nearest_neighbor_match(view: AdversaryView, target: int) -> MatchOutcome:
    """Threshold-free baseline: always match the closest pseudonym, ties
    broken by lowest index."""
    dist = _feature_distances(view, target)
    j = int(np.argmin(dist))
    return MatchOutcome(target, MATCHED, matched=j, candidates=(j,))


def full_assignment_match(view: AdversaryView, cap: int = ASSIGNMENT_CAP,
                          greedy: bool = False) -> list[MatchOutcome]:
    """Global bipartite assignment minimizing total feature distance.

    Exact Hungarian solve up to `cap` users; the greedy flag switches to an
    O(n^2 log n) approximation for larger populations.
    """
    n = view.n
    if n > cap and not greedy:
        raise ResourceLimitError(f"assignment capped at n={cap}; pass greedy=True")
    fw = feature_matrix(view.W, view.spec)
    fy = feature_matrix(view.Y, view.spec)
    cost = np.abs(fw[:, None, :] - fy[None, :, :]).max(axis=2)
    if greedy and n > cap:
        cols = _greedy_assignment(cost)
    else:
        _, cols = linear_sum_assignment(cost)
    return [MatchOutcome(u, MATCHED, matched=int(cols[u]),
                         candidates=(int(cols[u]),)) for u in range(n)]


def _greedy_assignment(cost: np.ndarray) -> np.ndarray:
    n = cost.shape[0]
    order = np.argsort(cost, axis=None, kind="stable")
    out = np.full(n, -1, dtype=np.int64)
    used = np.zeros(n, dtype=bool)
    assigned = 0
    for flat in order:
        u, v = divmod(int(flat), n)
        if out[u] == -1 and not used[v]:
            out[u] = v
            used[v] = True
            assigned += 1
            if assigned == n:
                break
    return out


@dataclass(frozen=True)
class Estimate:
    """Estimated data point; `fallback` marks the mode-of-W estimator used
    when matching failed."""

    value: int
    fallback: bool


def estimate_datapoint(view: AdversaryView, outcome: MatchOutcome,
                       target: int, k: int) -> Estimate:
    """Estimate the target's k-th actual data point from the match verdict."""
    if not 0 <= k < view.m:
        raise ValueError("time index out of range")
    if outcome.verdict == MATCHED:
        return Estimate(int(view.Y[outcome.matched, k]), fallback=False)
    counts = Counter(view.W[target].tolist())
    mode = min(counts, key=lambda s: (-counts[s], s))
    return Estimate(int(mode), fallback=True)
