"""User populations: model structure, parameter priors, per-user parameters.

A model is either a two-state i.i.d. source, an r-state i.i.d. source, or an
r-state Markov chain on a fixed edge set shared by all users.  Each user's
latent parameters are drawn independently from a bounded prior density; the
default (and only built-in) prior is uniform on the natural parameter region.
"""

from dataclasses import dataclass, field
from math import factorial

import networkx as nx
import numpy as np

from .errors import ConfigurationError

TWO_STATE = "two-state"
R_STATE = "r-state"
MARKOV = "markov"

KINDS = (TWO_STATE, R_STATE, MARKOV)


@dataclass(frozen=True)
class ModelSpec:
    """Structure of the data source, common to all users.

    For the Markov kind, `edges` is the shared set of allowed transitions;
    the induced directed graph must be strongly connected and aperiodic.
    """

    kind: str
    r: int = 2
    edges: tuple[tuple[int, int], ...] | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigurationError(f"unknown model kind {self.kind!r}")
        if self.r < 2:
            raise ConfigurationError("need at least 2 states")
        if self.r > 256:
            raise ConfigurationError("state count capped at 256 (uint8 storage)")
        if self.kind == TWO_STATE and self.r != 2:
            raise ConfigurationError("two-state model must have r=2")
        if self.kind == MARKOV:
            if not self.edges:
                raise ConfigurationError("markov model requires an edge set")
            edges = tuple(sorted(set((int(i), int(j)) for i, j in self.edges)))
            object.__setattr__(self, "edges", edges)
            self._validate_chain()
        elif self.edges is not None:
            raise ConfigurationError("edges only apply to the markov kind")

    def _validate_chain(self):
        g = nx.DiGraph()
        g.add_nodes_from(range(self.r))
        for i, j in self.edges:
            if not (0 <= i < self.r and 0 <= j < self.r):
                raise ConfigurationError(f"edge ({i},{j}) outside state range")
            g.add_edge(i, j)
        if any(g.out_degree(i) == 0 for i in range(self.r)):
            raise ConfigurationError("every state needs an outgoing edge")
        if not nx.is_strongly_connected(g):
            raise ConfigurationError("edge set is not irreducible")
        if not nx.is_aperiodic(g):
            raise ConfigurationError("edge set is periodic")

    @property
    def feature_dim(self) -> int:
        """Dimension of the empirical feature vector for this model."""
        if self.kind == TWO_STATE:
            return 1
        if self.kind == R_STATE:
            return self.r - 1
        return len(self.edges) - self.r

    def out_edges(self, state: int) -> list[int]:
        """Destinations reachable from `state`, ascending."""
        return sorted(j for i, j in self.edges if i == state)

    def free_edges(self) -> list[tuple[int, int]]:
        """Canonical free transition set: per state, drop the outgoing edge
        with the highest destination index (its probability is implied)."""
        kept = []
        for i in range(self.r):
            dests = self.out_edges(i)
            kept.extend((i, j) for j in dests[:-1])
        return kept


def complete_markov_spec(r: int) -> ModelSpec:
    """Markov model on the complete graph with self-loops."""
    edges = tuple((i, j) for i in range(r) for j in range(r))
    return ModelSpec(MARKOV, r=r, edges=edges)


@dataclass(frozen=True)
class PriorSpec:
    """Bounded prior density over the per-user parameter region.

    delta1/delta2 are the recorded lower/upper bounds on the density; for
    the built-in uniform prior both equal the density's exact constant.
    `dim` is the dimension of the parameter region (1, r-1, or |E|-r).
    """

    density: str = "uniform"
    delta1: float = 1.0
    delta2: float = 1.0
    dim: int = 1

    def __post_init__(self):
        if not (0 < self.delta1 <= self.delta2 < np.inf):
            raise ConfigurationError("need 0 < delta1 <= delta2 < inf")

    @classmethod
    def uniform(cls, spec: ModelSpec) -> "PriorSpec":
        """Uniform prior on the model's parameter region, with the exact
        density constant recorded as both bounds."""
        if spec.kind == TWO_STATE:
            const = 1.0
        elif spec.kind == R_STATE:
            # Dirichlet(1,...,1) density on the (r-1)-simplex.
            const = float(factorial(spec.r - 1))
        else:
            const = 1.0
            for i in range(spec.r):
                const *= factorial(len(spec.out_edges(i)) - 1)
        return cls(density="uniform", delta1=const, delta2=const,
                   dim=spec.feature_dim)


@dataclass(frozen=True)
class UserParams:
    """One user's latent generating distribution.

    probs is a scalar-like length-2 vector (two-state), an r-vector
    (r-state), or an r x r transition matrix (markov).
    """

    kind: str
    probs: np.ndarray
    spec: ModelSpec = field(repr=False, compare=False, default=None)

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        object.__setattr__(self, "probs", p)
        if self.kind == MARKOV:
            if p.ndim != 2 or p.shape[0] != p.shape[1]:
                raise ConfigurationError("markov params must be a square matrix")
            rowsums = p.sum(axis=1)
            if np.max(np.abs(rowsums - 1.0)) > 1e-12:
                raise ConfigurationError("transition rows must sum to 1")
            mask = np.zeros_like(p, dtype=bool)
            for i, j in self.spec.edges:
                mask[i, j] = True
            if np.any(p[~mask] != 0.0) or np.any(p[mask] <= 0.0):
                raise ConfigurationError("matrix support must equal the edge set")
        else:
            if p.ndim != 1:
                raise ConfigurationError("iid params must be a probability vector")
            if abs(p.sum() - 1.0) > 1e-12 or np.any(p <= 0) or np.any(p >= 1):
                raise ConfigurationError("probabilities must be in (0,1) and sum to 1")

    @property
    def p(self) -> float:
        """Bernoulli success probability (two-state only)."""
        if self.kind != TWO_STATE:
            raise ValueError("scalar p only defined for the two-state model")
        return float(self.probs[1])

    def free_vector(self) -> np.ndarray:
        """Canonical free-parameter vector.

        two-state: (p,); r-state: probabilities of symbols 1..r-1 (matching
        the feature coordinates); markov: retained transition probabilities
        per free_edges().
        """
        if self.kind == TWO_STATE:
            return self.probs[1:2].copy()
        if self.kind == R_STATE:
            return self.probs[1:].copy()
        return np.array([self.probs[i, j] for i, j in self.spec.free_edges()])


def markov_from_free(spec: ModelSpec, free: np.ndarray) -> UserParams:
    """Rebuild the full transition matrix from the canonical free vector."""
    free = np.asarray(free, dtype=float)
    kept = spec.free_edges()
    if free.shape != (len(kept),):
        raise ConfigurationError("free vector has wrong length")
    P = np.zeros((spec.r, spec.r))
    for (i, j), v in zip(kept, free):
        P[i, j] = v
    for i in range(spec.r):
        dests = spec.out_edges(i)
        P[i, dests[-1]] = 1.0 - sum(P[i, j] for j in dests[:-1])
    return UserParams(MARKOV, P, spec)


def sample_user_params(spec: ModelSpec, prior: PriorSpec,
                       rng: np.random.Generator) -> UserParams:
    """Draw one user's parameters i.i.d. from the prior."""
    if prior.density != "uniform":
        raise ConfigurationError(f"unsupported prior density {prior.density!r}")
    if prior.dim != spec.feature_dim:
        raise ConfigurationError("prior dimension does not match the model")
    if spec.kind in (TWO_STATE, R_STATE):
        p = rng.dirichlet(np.ones(spec.r))
        while np.any(p <= 0.0) or np.any(p >= 1.0):  # boundary has measure 0
            p = rng.dirichlet(np.ones(spec.r))
        return UserParams(spec.kind, p, spec)
    P = np.zeros((spec.r, spec.r))
    for i in range(spec.r):
        dests = spec.out_edges(i)
        row = rng.dirichlet(np.ones(len(dests)))
        while np.any(row <= 0.0):
            row = rng.dirichlet(np.ones(len(dests)))
        P[i, dests] = row
    return UserParams(MARKOV, P, spec)


def separation_bound(prior: PriorSpec, delta: float, n: int) -> float:
    """Union bound on some other user's parameter landing within 4*delta
    of the target's, in the sup norm.

    Scalar case: min(1, 8 n delta delta2).  For dimension d the same
    interval argument is applied coordinatewise (a union over coordinates),
    giving min(1, 8 d n delta delta2).
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    return min(1.0, 8.0 * prior.dim * n * delta * prior.delta2)
