"""Trace generation: training traces W (length l) and fresh traces X (length m).

Traces are stored as uint8 state indices.  Markov traces start from the
chain's stationary distribution so that W and X statistics are identically
distributed.
"""

import struct
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, NumericError
from .population import (MARKOV, R_STATE, TWO_STATE, ModelSpec, PriorSpec,
                         UserParams, sample_user_params)

_MAGIC = b"ATRC"
_VERSION = 1
_KIND_CODE = {TWO_STATE: 0, R_STATE: 1, MARKOV: 2}
_KIND_FROM_CODE = {v: k for k, v in _KIND_CODE.items()}


@dataclass(frozen=True)
class TraceCollection:
    """The generated population: W (n x l), X (n x m), and the true params."""

    W: np.ndarray
    X: np.ndarray
    params: tuple[UserParams, ...]

    def __post_init__(self):
        if self.W.shape[0] != self.X.shape[0] or self.W.shape[0] != len(self.params):
            raise ValueError("W, X and params must describe the same n users")

    @property
    def n(self) -> int:
        return self.W.shape[0]

    @property
    def l(self) -> int:
        return self.W.shape[1]

    @property
    def m(self) -> int:
        return self.X.shape[1]


def gen_iid_trace(params: UserParams, length: int,
                  rng: np.random.Generator) -> np.ndarray:
    """I.i.d. categorical trace from the user's probability vector."""
    if length < 1:
        raise ValueError("length must be >= 1")
    if params.kind not in (TWO_STATE, R_STATE):
        raise ValueError("gen_iid_trace needs an i.i.d. model")
    if params.kind == TWO_STATE:
        return (rng.random(length) < params.p).astype(np.uint8)
    cum = np.cumsum(params.probs)
    out = np.searchsorted(cum, rng.random(length), side="right")
    return np.minimum(out, len(cum) - 1).astype(np.uint8)


def stationary_distribution(params: UserParams) -> np.ndarray:
    """Stationary distribution pi with pi P = pi, solved as a linear system."""
    if params.kind != MARKOV:
        raise ValueError("stationary_distribution needs markov params")
    P = params.probs
    r = P.shape[0]
    A = np.vstack([P.T - np.eye(r), np.ones(r)])
    b = np.zeros(r + 1)
    b[-1] = 1.0
    pi, *_ = np.linalg.lstsq(A, b, rcond=None)
    if np.max(np.abs(pi @ P - pi)) > 1e-10 or np.any(pi <= 0):
        raise NumericError("stationary distribution solve did not converge")
    return pi / pi.sum()


def gen_markov_trace(params: UserParams, length: int,
                     rng: np.random.Generator) -> np.ndarray:
    """Markov trace started from the stationary distribution.

    Next-state draws are pre-sampled per (state, step) so the sequential
    walk is a cheap table lookup; unused draws are discarded, which leaves
    the chain's law unchanged.
    """
    if length < 2:
        raise ValueError("markov traces need length >= 2")
    P = params.probs
    r = P.shape[0]
    pi = stationary_distribution(params)
    s = int(np.searchsorted(np.cumsum(pi), rng.random(), side="right"))
    s = min(s, r - 1)
    cum = np.cumsum(P, axis=1)
    U = rng.random((r, length - 1))
    nxt = np.empty((r, length - 1), dtype=np.int64)
    for i in range(r):
        nxt[i] = np.minimum(np.searchsorted(cum[i], U[i], side="right"), r - 1)
    table = nxt.tolist()
    out = [0] * length
    out[0] = s
    for t in range(length - 1):
        s = table[s][t]
        out[t + 1] = s
    return np.asarray(out, dtype=np.uint8)


def gen_trace(params: UserParams, length: int,
              rng: np.random.Generator) -> np.ndarray:
    """Dispatch on the model kind."""
    if params.kind == MARKOV:
        return gen_markov_trace(params, length, rng)
    return gen_iid_trace(params, length, rng)


def gen_collection(spec: ModelSpec, prior: PriorSpec, n: int, m: int, l: int,
                   rng: np.random.Generator) -> TraceCollection:
    """Sample n users from the prior and generate their W and X traces."""
    if n < 2:
        raise ValueError("need at least 2 users")
    if m < 1 or l < 1:
        raise ValueError("trace lengths must be >= 1")
    if spec.kind == MARKOV and (m < 2 or l < 2):
        raise ValueError("markov traces need length >= 2")
    params = tuple(sample_user_params(spec, prior, rng) for _ in range(n))
    W = np.empty((n, l), dtype=np.uint8)
    X = np.empty((n, m), dtype=np.uint8)
    for u in range(n):
        W[u] = gen_trace(params[u], l, rng)
    for u in range(n):
        X[u] = gen_trace(params[u], m, rng)
    return TraceCollection(W, X, params)


def write_traces(path, collection: TraceCollection, spec: ModelSpec) -> None:
    """Binary trace dump (see docs/format.md).  Parameters are not stored."""
    n, m, l = collection.n, collection.m, collection.l
    header = _MAGIC + struct.pack(
        "<BBBIQQ", _VERSION, _KIND_CODE[spec.kind], spec.r, n, m, l)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(collection.W).tobytes())
        fh.write(np.ascontiguousarray(collection.X).tobytes())


def read_traces(path) -> tuple[np.ndarray, np.ndarray, dict]:
    """Read a binary trace dump; returns (W, X, header-info)."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _MAGIC:
            raise ConfigurationError("not a trace dump (bad magic)")
        version, kind_code, r, n, m, l = struct.unpack("<BBBIQQ", fh.read(23))
        if version != _VERSION:
            raise ConfigurationError(f"unsupported dump version {version}")
        W = np.frombuffer(fh.read(n * l), dtype=np.uint8).reshape(n, l)
        X = np.frombuffer(fh.read(n * m), dtype=np.uint8).reshape(n, m)
    info = {"kind": _KIND_FROM_CODE[kind_code], "r": r, "n": n, "m": m, "l": l}
    return W, X, info
