"""Simulation laboratory for statistical de-anonymization of user traces."""

__version__ = "0.1.0"

from .anonymize import Permutation, apply, sample_permutation
from .attack import (AdversaryView, MatchOutcome, adversary_view,
                     estimate_datapoint, full_assignment_match,
                     nearest_neighbor_match, threshold_match)
from .oracle import (PosteriorSummary, pair_log_marginal,
                     posterior_by_enumeration, posterior_by_permanent)
from .population import (ModelSpec, PriorSpec, UserParams,
                         complete_markov_spec, sample_user_params,
                         separation_bound)
from .stats import (FeatureVector, ThresholdSpec, chernoff_bound, distance,
                    featurize, required_length, threshold)
from .tracegen import (TraceCollection, gen_collection, gen_iid_trace,
                       gen_markov_trace, stationary_distribution)

__all__ = [
    "ModelSpec", "PriorSpec", "UserParams", "complete_markov_spec",
    "sample_user_params", "separation_bound",
    "TraceCollection", "gen_collection", "gen_iid_trace", "gen_markov_trace",
    "stationary_distribution",
    "Permutation", "apply", "sample_permutation",
    "FeatureVector", "ThresholdSpec", "featurize", "distance", "threshold",
    "required_length", "chernoff_bound",
    "AdversaryView", "MatchOutcome", "adversary_view", "threshold_match",
    "nearest_neighbor_match", "full_assignment_match", "estimate_datapoint",
    "PosteriorSummary", "pair_log_marginal", "posterior_by_enumeration",
    "posterior_by_permanent",
]
