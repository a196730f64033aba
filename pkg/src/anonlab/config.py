"""Flat key-value configuration files for sweeps.

Format: one `section.key = value` per line, `#` comments, blank lines
ignored.  Unknown keys are errors; everything is validated before any
computation starts.  Example: docs/accept_two_state.cfg.
"""

import os

from .errors import ConfigurationError
from .experiments import SweepConfig
from .population import (MARKOV, R_STATE, TWO_STATE, ModelSpec, PriorSpec)

KNOWN_KEYS = {
    "model.kind", "model.r", "model.edges_file",
    "prior.delta1", "prior.delta2",
    "sweep.n", "sweep.betas_m", "sweep.betas_l", "sweep.trials",
    "sweep.seed", "sweep.attacks", "sweep.alpha", "sweep.c",
    "sweep.oracle_entropy",
    "output.dir",
}


def parse_kv_file(path) -> dict[str, str]:
    """Parse a flat key-value file into a dict; rejects unknown keys."""
    values = {}
    unknown = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigurationError(
                    f"{path}:{lineno}: expected 'key = value'")
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in KNOWN_KEYS:
                unknown.append(f"{key} (line {lineno})")
                continue
            if key in values:
                raise ConfigurationError(f"{path}:{lineno}: duplicate key {key}")
            values[key] = value
    if unknown:
        raise ConfigurationError("unknown config keys: " + ", ".join(unknown))
    return values


def read_edge_file(path) -> tuple[tuple[int, int], ...]:
    """Edge list: one `i j` pair per line."""
    edges = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ConfigurationError(f"{path}:{lineno}: expected 'i j'")
            try:
                edges.append((int(parts[0]), int(parts[1])))
            except ValueError:
                raise ConfigurationError(
                    f"{path}:{lineno}: edge endpoints must be integers")
    if not edges:
        raise ConfigurationError(f"{path}: empty edge list")
    return tuple(edges)


def _get(values, key, default=None, required=False):
    if key in values:
        return values[key]
    if required:
        raise ConfigurationError(f"missing required config key {key}")
    return default


def _parse_list(text, cast, key):
    try:
        out = tuple(cast(tok) for tok in text.split())
    except ValueError:
        raise ConfigurationError(f"bad value list for {key}: {text!r}")
    if not out:
        raise ConfigurationError(f"empty value list for {key}")
    return out


def model_from_values(values: dict[str, str], base_dir=".") -> ModelSpec:
    kind = _get(values, "model.kind", required=True)
    if kind not in (TWO_STATE, R_STATE, MARKOV):
        raise ConfigurationError(f"unknown model.kind {kind!r}")
    r = int(_get(values, "model.r", default="2"))
    edges = None
    if kind == MARKOV:
        edge_path = _get(values, "model.edges_file")
        if edge_path is None:
            raise ConfigurationError("markov model requires model.edges_file")
        if not os.path.isabs(edge_path):
            edge_path = os.path.join(base_dir, edge_path)
        edges = read_edge_file(edge_path)
    elif "model.edges_file" in values:
        raise ConfigurationError("model.edges_file only applies to markov")
    return ModelSpec(kind, r=r, edges=edges)


def load_sweep_config(path) -> tuple[SweepConfig, str | None]:
    """Build a SweepConfig from a config file; returns (config, output dir)."""
    values = parse_kv_file(path)
    base_dir = os.path.dirname(os.path.abspath(path))
    spec = model_from_values(values, base_dir)
    prior = PriorSpec.uniform(spec)
    if "prior.delta1" in values or "prior.delta2" in values:
        prior = PriorSpec(
            density="uniform",
            delta1=float(_get(values, "prior.delta1", default=prior.delta1)),
            delta2=float(_get(values, "prior.delta2", default=prior.delta2)),
            dim=prior.dim)
    alpha = _get(values, "sweep.alpha")
    try:
        config = SweepConfig(
            spec=spec,
            prior=prior,
            n_values=_parse_list(_get(values, "sweep.n", required=True),
                                 int, "sweep.n"),
            betas_m=_parse_list(_get(values, "sweep.betas_m", required=True),
                                float, "sweep.betas_m"),
            betas_l=_parse_list(_get(values, "sweep.betas_l", required=True),
                                float, "sweep.betas_l"),
            trials=int(_get(values, "sweep.trials", required=True)),
            seed=int(_get(values, "sweep.seed", default="0")),
            attacks=_parse_list(_get(values, "sweep.attacks",
                                     default="threshold nearest"),
                                str, "sweep.attacks"),
            alpha=None if alpha is None else float(alpha),
            c=float(_get(values, "sweep.c", default="1")),
            oracle_entropy=_get(values, "sweep.oracle_entropy",
                                default="false").lower() in ("true", "1", "yes"),
        )
    except ValueError as exc:
        raise ConfigurationError(str(exc))
    return config, _get(values, "output.dir")
