"""Monte Carlo orchestration: single trials, cells, and (m, l)-plane sweeps.

A sweep walks a grid of exponent pairs (beta_m, beta_l); each cell runs
independent trials at m = ceil(c * n^beta_m), l = ceil(c * n^beta_l).  Every
trial draws its own random substream keyed by (cell index, trial index), so
any execution order -- serial, parallel, or resumed -- yields identical
aggregates.
"""

import csv
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from itertools import product
from math import ceil

import numpy as np

from . import __version__
from .anonymize import apply, sample_permutation
from .attack import (AMBIGUOUS, adversary_view, estimate_datapoint,
                     full_assignment_match, nearest_neighbor_match,
                     threshold_match)
from .errors import ConfigurationError
from .metrics import (AttackResult, TrialRecord, accuracy, ambiguity_rate,
                      bad_event_frequencies, empirical_pe, evaluate)
from .oracle import (ENUMERATION_CAP, PERMANENT_CAP, likelihood_matrix,
                     marginal_by_enumeration, marginal_by_permanent)
from .population import ModelSpec, PriorSpec, separation_bound
from .rng import substream
from .stats import (ThresholdSpec, chernoff_bound, chernoff_bound_single,
                    feature_matrix, threshold)
from .tracegen import gen_collection

ATTACKS = ("threshold", "nearest", "assignment")

CSV_COLUMNS = ["n", "beta_m", "beta_l", "m", "l", "model", "attack", "trials",
               "accuracy", "ambiguity", "pe", "ev1", "ev2", "ev3",
               "entropy_median", "entropy_n", "wall_s"]

TIMING_COLUMNS = {"wall_s"}


@dataclass(frozen=True)
class Cell:
    """One grid point of a sweep.

    The overrides let the simulate command run a cell at raw (m, l) values
    instead of exponents of n.
    """

    n: int
    beta_m: float
    beta_l: float
    m_override: int | None = None
    l_override: int | None = None

    def lengths(self, c: float) -> tuple[int, int]:
        m = (self.m_override if self.m_override is not None
             else ceil(c * float(self.n) ** self.beta_m))
        l = (self.l_override if self.l_override is not None
             else ceil(c * float(self.n) ** self.beta_l))
        return m, l


@dataclass(frozen=True)
class SweepConfig:
    """Full description of a sweep; see docs/accept_two_state.cfg."""

    spec: ModelSpec
    prior: PriorSpec
    n_values: tuple[int, ...]
    betas_m: tuple[float, ...]
    betas_l: tuple[float, ...]
    trials: int
    seed: int
    attacks: tuple[str, ...] = ("threshold", "nearest")
    alpha: float | None = None
    c: float = 1.0
    oracle_entropy: bool = False

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigurationError("trials must be >= 1")
        if not self.n_values or not self.betas_m or not self.betas_l:
            raise ConfigurationError("sweep grid must be nonempty")
        for a in self.attacks:
            if a not in ATTACKS:
                raise ConfigurationError(f"unknown attack {a!r}")
        if not self.attacks:
            raise ConfigurationError("need at least one attack")
        if self.oracle_entropy and max(self.n_values) > PERMANENT_CAP:
            raise ConfigurationError(
                f"oracle entropy requires n <= {PERMANENT_CAP}")
        if self.alpha is not None and self.alpha <= 0:
            raise ConfigurationError("alpha must be positive")

    def cells(self) -> list[Cell]:
        return [Cell(n, bm, bl) for n, bm, bl in
                product(self.n_values, self.betas_m, self.betas_l)]

    def cell_alpha(self, cell: Cell) -> float:
        """Matching-radius exponent for a cell: the configured alpha, or the
        cell's own margin above the phase boundary (floored at 0.1)."""
        if self.alpha is not None:
            return self.alpha
        d = self.spec.feature_dim
        return max(min(cell.beta_m, cell.beta_l) - 2.0 / d, 0.1)


def _linf_rows(a: np.ndarray, ref: np.ndarray) -> np.ndarray:
    return np.abs(a - ref).max(axis=1)


def run_trial(config: SweepConfig, cell_index: int, cell: Cell,
              trial: int) -> TrialRecord:
    """One full generate -> anonymize -> attack -> evaluate pipeline."""
    t0 = time.perf_counter()
    rng = substream(config.seed, cell_index, trial)
    m, l = cell.lengths(config.c)
    alpha = config.cell_alpha(cell)
    spec, prior = config.spec, config.prior
    coll = gen_collection(spec, prior, cell.n, m, l, rng)
    pi = sample_permutation(cell.n, rng)
    anon = apply(coll, pi)
    view = adversary_view(anon, spec)

    d = spec.feature_dim
    radius = threshold(ThresholdSpec(cell.n, alpha, d))
    fW = feature_matrix(view.W, spec)
    fX = feature_matrix(coll.X, spec)
    fv = np.stack([p.free_vector() for p in coll.params])

    ev_first = bool(_linf_rows(fX[:1], fW[0])[0] >= radius)
    ev_prior = bool(_linf_rows(fv[1:], fv[0]).min() <= 4 * radius)
    ev_wsep = bool(_linf_rows(fW[1:], fW[0]).min() <= 2 * radius)
    coords = fv[0]
    bound_first = min(1.0, float(sum(
        chernoff_bound(m, radius, p) + chernoff_bound(l, radius, p)
        for p in np.clip(coords, 1e-12, 1.0))))
    bound_prior = separation_bound(prior, radius, cell.n)
    bound_wsep = min(1.0, cell.n * d * chernoff_bound_single(l, radius, 1.0))

    k = int(rng.integers(m))
    results = {}
    for name in config.attacks:
        if name == "threshold":
            outcome = threshold_match(view, 0, alpha)
        elif name == "nearest":
            outcome = nearest_neighbor_match(view, 0)
        else:
            outcome = full_assignment_match(view)[0]
        est = estimate_datapoint(view, outcome, 0, k)
        results[name] = AttackResult(
            verdict=outcome.verdict,
            matched=outcome.matched,
            n_candidates=len(outcome.candidates),
            correct=evaluate(outcome, pi, 0),
            pe_error=bool(est.value != int(coll.X[0, k])),
            fallback=est.fallback)

    entropy = None
    if config.oracle_entropy:
        L = likelihood_matrix(view, prior)
        if cell.n <= ENUMERATION_CAP:
            entropy = marginal_by_enumeration(L, 0).entropy_nats
        else:
            entropy = marginal_by_permanent(L, 0).entropy_nats

    return TrialRecord(
        trial=trial, n=cell.n, m=m, l=l, alpha=alpha, model=spec.kind,
        results=results, k=k,
        ev_first_step=ev_first, ev_prior_prox=ev_prior, ev_w_sep=ev_wsep,
        bound_first_step=bound_first, bound_prior_prox=bound_prior,
        bound_w_sep=bound_wsep,
        entropy=entropy, wall_s=time.perf_counter() - t0)


def run_cell(config: SweepConfig, cell_index: int, cell: Cell,
             threads: int = 1) -> list[TrialRecord]:
    """All trials of one cell, optionally across worker processes."""
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(
                run_trial, [config] * config.trials,
                [cell_index] * config.trials, [cell] * config.trials,
                range(config.trials)))
    return [run_trial(config, cell_index, cell, t)
            for t in range(config.trials)]


def aggregate_cell(config: SweepConfig, cell: Cell,
                   records: list[TrialRecord]) -> list[dict]:
    """One result row per attack for a completed cell."""
    m, l = cell.lengths(config.c)
    bad = bad_event_frequencies(records)
    entropies = [r.entropy for r in records if r.entropy is not None]
    wall = sum(r.wall_s for r in records)
    rows = []
    for attack in config.attacks:
        pe, _ = empirical_pe(records, attack)
        rows.append({
            "n": cell.n, "beta_m": cell.beta_m, "beta_l": cell.beta_l,
            "m": m, "l": l, "model": config.spec.kind, "attack": attack,
            "trials": len(records),
            "accuracy": accuracy(records, attack),
            "ambiguity": ambiguity_rate(records, attack),
            "pe": pe,
            "ev1": bad["first_step"]["frequency"],
            "ev2": bad["prior_prox"]["frequency"],
            "ev3": bad["w_sep"]["frequency"],
            "entropy_median": (float(np.median(entropies))
                               if entropies else ""),
            "entropy_n": len(entropies),
            "wall_s": wall,
        })
    return rows


@dataclass
class SweepResult:
    """All aggregate rows of a sweep, in canonical cell order."""

    rows: list[dict] = field(default_factory=list)


def _fmt(value) -> str:
    if isinstance(value, float):
        return format(value, ".10g")
    return str(value)


def _row_key(row: dict) -> tuple:
    return (str(row["n"]), str(row["beta_m"]), str(row["beta_l"]),
            row["attack"])


def _cell_key(config: SweepConfig, cell: Cell) -> set[tuple]:
    return {(str(cell.n), _fmt(cell.beta_m), _fmt(cell.beta_l), a)
            for a in config.attacks}


def _read_existing(path) -> dict[tuple, dict]:
    if not os.path.exists(path):
        return {}
    out = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out[_row_key(row)] = row
    return out


def _write_rows(path, rows: list[dict]) -> None:
    tmp = str(path) + ".tmp"
    with open(tmp, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _fmt(row[k]) for k in CSV_COLUMNS})
    os.replace(tmp, path)


def run_sweep(config: SweepConfig, out_dir, threads: int = 1,
              progress=None) -> SweepResult:
    """Execute all cells, streaming sweep.csv after each completed cell.

    Cells already present in an existing sweep.csv are skipped, making an
    interrupted sweep resumable.  The final file is rewritten in canonical
    cell order so identical configs yield byte-identical output.
    """
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, "sweep.csv")
    existing = _read_existing(csv_path)

    meta = {"config": _config_dict(config), "version": __version__}
    with open(os.path.join(out_dir, "sweep.meta.json"), "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")

    cells = config.cells()
    cached = {}
    for idx, cell in enumerate(cells):
        keys = _cell_key(config, cell)
        if keys <= set(existing):
            by_attack = {k[3]: existing[k] for k in keys}
            cached[idx] = [by_attack[a] for a in config.attacks]

    all_rows = []
    for idx, cell in enumerate(cells):
        if idx in cached:
            all_rows.extend(cached[idx])
            if progress:
                progress(f"cell {idx + 1}/{len(cells)} {cell} cached")
            continue
        records = run_cell(config, idx, cell, threads=threads)
        rows = aggregate_cell(config, cell, records)
        all_rows.extend(rows)
        # keep rows of not-yet-traversed cached cells in the on-disk file
        pending = [r for j in sorted(cached) if j > idx for r in cached[j]]
        _write_rows(csv_path, all_rows + pending)
        if progress:
            acc = ", ".join(f"{r['attack']}={r['accuracy']:.3f}" for r in rows)
            progress(f"cell {idx + 1}/{len(cells)} {cell} {acc}")
    _write_rows(csv_path, all_rows)
    return SweepResult(rows=all_rows)


def _config_dict(config: SweepConfig) -> dict:
    d = asdict(config)
    if d["spec"]["edges"] is not None:
        d["spec"]["edges"] = [list(e) for e in d["spec"]["edges"]]
    return d
