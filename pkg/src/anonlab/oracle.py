"""Exact Bayesian reference for small populations.

Under the uniform prior the pair marginal likelihood (the probability of a
training trace and an anonymized trace sharing one latent user, with that
user's parameters integrated out) has a closed Beta / Dirichlet-multinomial
form.  The posterior over the hidden permutation is then enumerated outright
(n <= 8) or reduced to matrix permanents computed with Ryser's formula
(n <= 20).  The marginal of the target's pseudonym and its entropy are the
reported summary.
"""

from dataclasses import dataclass
from itertools import permutations

import numpy as np
from scipy.special import gammaln, logsumexp

from .attack import AdversaryView
from .errors import ResourceLimitError, UnsupportedPriorError
from .population import MARKOV, R_STATE, TWO_STATE, ModelSpec, PriorSpec, UserParams

ENUMERATION_CAP = 8
PERMANENT_CAP = 20


@dataclass(frozen=True)
class PosteriorSummary:
    """Marginal of the target's pseudonym and its Shannon entropy (nats)."""

    marginal: np.ndarray
    entropy_nats: float
    method: str

    def __post_init__(self):
        m = np.asarray(self.marginal, dtype=float)
        object.__setattr__(self, "marginal", m)
        if abs(m.sum() - 1.0) > 1e-9:
            raise ValueError("marginal must sum to 1")
        if not -1e-12 <= self.entropy_nats <= np.log(len(m)) + 1e-9:
            raise ValueError("entropy outside [0, ln n]")


def _counts(trace: np.ndarray, r: int) -> np.ndarray:
    return np.bincount(np.asarray(trace, dtype=np.int64), minlength=r)


def _transition_counts(trace: np.ndarray, r: int) -> np.ndarray:
    t = np.asarray(trace, dtype=np.int64)
    pairs = t[:-1] * r + t[1:]
    return np.bincount(pairs, minlength=r * r).reshape(r, r)


def pair_log_marginal(w: np.ndarray, y: np.ndarray, spec: ModelSpec,
                      prior: PriorSpec) -> float:
    """Log probability of the pooled pair (w, y) under one latent user drawn
    from the uniform prior.

    Markov traces use the per-row Dirichlet-multinomial over pooled
    transition counts; the two initial-state terms are omitted (documented
    approximation, the exact term is not conjugate).
    """
    if prior.density != "uniform":
        raise UnsupportedPriorError("exact marginals need the uniform prior")
    if spec.kind in (TWO_STATE, R_STATE):
        c = _counts(w, spec.r) + _counts(y, spec.r)
        return float(gammaln(spec.r) + gammaln(c + 1).sum()
                     - gammaln(c.sum() + spec.r))
    cnt = _transition_counts(w, spec.r) + _transition_counts(y, spec.r)
    total = 0.0
    for i in range(spec.r):
        dests = spec.out_edges(i)
        row = cnt[i, dests]
        total += (gammaln(len(dests)) + gammaln(row + 1).sum()
                  - gammaln(row.sum() + len(dests)))
    return float(total)


def exact_pair_loglik(w: np.ndarray, y: np.ndarray, params: UserParams) -> float:
    """Log likelihood of (w, y) under known parameters (no integration)."""
    if params.kind in (TWO_STATE, R_STATE):
        r = len(params.probs)
        c = _counts(w, r) + _counts(y, r)
        return float(np.sum(c * np.log(params.probs)))
    r = params.probs.shape[0]
    cnt = _transition_counts(w, r) + _transition_counts(y, r)
    mask = params.probs > 0
    return float(np.sum(cnt[mask] * np.log(params.probs[mask])))


def likelihood_matrix(view: AdversaryView, prior: PriorSpec) -> np.ndarray:
    """L[u][v] = pair_log_marginal(W_u, Y_v)."""
    n = view.n
    L = np.empty((n, n))
    for u in range(n):
        for v in range(n):
            L[u, v] = pair_log_marginal(view.W[u], view.Y[v], view.spec, prior)
    return L


def _summary_from_log_weights(log_marginal: np.ndarray, method: str) -> PosteriorSummary:
    log_marginal = log_marginal - logsumexp(log_marginal)
    marg = np.exp(log_marginal)
    marg /= marg.sum()
    nz = marg > 0
    entropy = float(-(marg[nz] * np.log(marg[nz])).sum())
    entropy = min(max(entropy, 0.0), np.log(len(marg)))
    return PosteriorSummary(marg, entropy, method)


def marginal_by_enumeration(L: np.ndarray, target: int) -> PosteriorSummary:
    """Posterior marginal of the target's pseudonym by enumerating all
    permutations; weight of pi is exp(sum_u L[u, pi(u)])."""
    n = L.shape[0]
    if n > ENUMERATION_CAP:
        raise ResourceLimitError(
            f"enumeration capped at n={ENUMERATION_CAP}; use the permanent method")
    perms = np.array(list(permutations(range(n))), dtype=np.int64)
    logw = L[np.arange(n), perms].sum(axis=1)
    log_marg = np.array([
        logsumexp(logw[perms[:, target] == v]) for v in range(n)])
    return _summary_from_log_weights(log_marg, "enumeration")


def _ryser_permanent(A: np.ndarray) -> float:
    """Permanent by Ryser's inclusion-exclusion with Gray-code updates."""
    k = A.shape[0]
    if k == 0:
        return 1.0
    total = 0.0
    rowsum = np.zeros(k)
    prev = 0
    for g in range(1, 1 << k):
        gray = g ^ (g >> 1)
        diff = gray ^ prev
        j = diff.bit_length() - 1
        if gray & diff:
            rowsum += A[:, j]
        else:
            rowsum -= A[:, j]
        prev = gray
        sign = -1.0 if (bin(gray).count("1") % 2) else 1.0
        total += sign * np.prod(rowsum)
    return total * (-1.0 if k % 2 else 1.0)


def _sinkhorn_balance(L: np.ndarray, sweeps: int = 100) -> np.ndarray:
    """Alternately normalize row and column log-sums of exp(L).

    Any row or column rescale of K cancels in the normalized marginal, so
    balancing is free to apply; it keeps Ryser's alternating sum well
    conditioned when one matching dominates the likelihood matrix.
    """
    A = L.copy()
    for _ in range(sweeps):
        A -= logsumexp(A, axis=1, keepdims=True)
        A -= logsumexp(A, axis=0, keepdims=True)
    return A


def marginal_by_permanent(L: np.ndarray, target: int) -> PosteriorSummary:
    """Posterior marginal via permanents of minors of K = exp(L'), where L'
    is the Sinkhorn-balanced log matrix (the rescale cancels after
    normalizing)."""
    n = L.shape[0]
    if n > PERMANENT_CAP:
        raise ResourceLimitError(f"permanent method capped at n={PERMANENT_CAP}")
    K = np.exp(_sinkhorn_balance(L))
    rows = [u for u in range(n) if u != target]
    weights = np.empty(n)
    for v in range(n):
        cols = [c for c in range(n) if c != v]
        minor = K[np.ix_(rows, cols)]
        weights[v] = K[target, v] * _ryser_permanent(minor)
    weights = np.maximum(weights, 0.0)
    if weights.sum() <= 0:
        weights = np.ones(n)
    with np.errstate(divide="ignore"):
        return _summary_from_log_weights(np.log(weights), "permanent")


def posterior_by_enumeration(view: AdversaryView, prior: PriorSpec,
                             target: int) -> PosteriorSummary:
    """Exact posterior summary for the target, n <= 8."""
    return marginal_by_enumeration(likelihood_matrix(view, prior), target)


def posterior_by_permanent(view: AdversaryView, prior: PriorSpec,
                           target: int) -> PosteriorSummary:
    """Permanent-based posterior summary for the target, n <= 20."""
    return marginal_by_permanent(likelihood_matrix(view, prior), target)


def posterior_entropy_known_params(view: AdversaryView,
                                   params: tuple[UserParams, ...],
                                   target: int) -> PosteriorSummary:
    """Posterior with the true parameters revealed (exact trace likelihoods
    instead of integrated marginals); reference for the data-processing
    comparison."""
    n = view.n
    L = np.empty((n, n))
    for u in range(n):
        for v in range(n):
            L[u, v] = exact_pair_loglik(view.W[u], view.Y[v], params[u])
    return marginal_by_enumeration(L, target)
