"""Ground-truth evaluation: matching accuracy, estimation error, bad events.

A TrialRecord captures everything one simulated trial produced: the verdict
of each attack, whether the estimated data point was wrong, and the three
failure modes of the threshold matcher (feature deviation between a user's
own trace pair, another user's parameters landing too close to the target's,
and training features of different users failing to separate).
"""

from dataclasses import dataclass, field
from math import sqrt

from .anonymize import Permutation
from .attack import MATCHED, MatchOutcome


@dataclass
class AttackResult:
    """Per-attack slice of a trial: verdict, correctness, estimation error."""

    verdict: str
    matched: int | None
    n_candidates: int
    correct: bool
    pe_error: bool
    fallback: bool


@dataclass
class TrialRecord:
    """Outcome of one generate -> anonymize -> attack -> evaluate trial."""

    trial: int
    n: int
    m: int
    l: int
    alpha: float
    model: str
    results: dict[str, AttackResult]
    k: int
    ev_first_step: bool
    ev_prior_prox: bool
    ev_w_sep: bool
    bound_first_step: float
    bound_prior_prox: float
    bound_w_sep: float
    entropy: float | None = None
    wall_s: float = 0.0
    extra: dict = field(default_factory=dict)


def evaluate(outcome: MatchOutcome, hidden: Permutation, target: int) -> bool:
    """True iff the attack matched the target to its true pseudonym.

    Ambiguous and no-match verdicts count as failures.
    """
    if outcome.verdict != MATCHED:
        return False
    return outcome.matched == int(hidden.forward[target])


def wilson_halfwidth(successes: int, trials: int, z: float = 1.96) -> float:
    """Half-width of the Wilson 95% score interval."""
    if trials == 0:
        raise ValueError("need at least one trial")
    phat = successes / trials
    denom = 1.0 + z * z / trials
    half = (z / denom) * sqrt(phat * (1 - phat) / trials
                              + z * z / (4.0 * trials * trials))
    return half


def empirical_pe(records: list[TrialRecord], attack: str) -> tuple[float, float]:
    """Fraction of trials with a wrong data-point estimate, with Wilson 95%
    half-width."""
    if not records:
        raise ValueError("need at least one record")
    errs = sum(1 for rec in records if rec.results[attack].pe_error)
    return errs / len(records), wilson_halfwidth(errs, len(records))


def accuracy(records: list[TrialRecord], attack: str) -> float:
    """Fraction of trials with a correct (unambiguous) match."""
    if not records:
        raise ValueError("need at least one record")
    return sum(1 for rec in records if rec.results[attack].correct) / len(records)


def ambiguity_rate(records: list[TrialRecord], attack: str) -> float:
    """Fraction of trials where the attack returned an ambiguous verdict."""
    if not records:
        raise ValueError("need at least one record")
    return sum(1 for rec in records
               if rec.results[attack].verdict == "ambiguous") / len(records)


def bad_event_frequencies(records: list[TrialRecord]) -> dict[str, dict[str, float]]:
    """Empirical frequency of each threshold-matcher failure mode next to
    the mean of the per-trial theoretical bound."""
    if not records:
        raise ValueError("need at least one record")
    t = len(records)
    out = {}
    for name, flag_attr, bound_attr in (
            ("first_step", "ev_first_step", "bound_first_step"),
            ("prior_prox", "ev_prior_prox", "bound_prior_prox"),
            ("w_sep", "ev_w_sep", "bound_w_sep")):
        freq = sum(1 for rec in records if getattr(rec, flag_attr)) / t
        bound = sum(getattr(rec, bound_attr) for rec in records) / t
        out[name] = {"frequency": freq, "bound": bound,
                     "mc_sigma": sqrt(bound * (1 - bound) / t)}
    return out
