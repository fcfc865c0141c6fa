"""Schmidt measure of multipartite quantum states.

Computes certified rank brackets for pure states, convex-roof bounds for
mixed states, best separable approximations, and randomised monotonicity
checks, over arbitrary groupings of parties into blocks.
"""

from .errors import InputError, InvariantBreach
from .states import (DensityOperator, Ensemble, PartyLayout, PureState,
                     load_state, save_state, state_from_dict, state_to_dict)
from .splits import Split, enumerate_splits, parse_split
from .linalg import (bipartition_schmidt_rank, group_density, group_tensor,
                     matricize, numerical_rank, partial_transpose,
                     ungroup_density)
from .pure import (FitOptions, FitResult, MeasureValue, ProductDecomposition,
                   ProductTerm, RankBracket, als_fit, basis_expansion_witness,
                   flattening_lower_bound, rank_bracket, schmidt_measure_pure,
                   schmidt_rank, term_count_cap)
from .mixed import (BsaResult, MixedMeasureValue, MixedOptions, bsa,
                    ensemble_search, flagged_mixture_bound, ppt_check,
                    roof_upper_bound, schmidt_measure_mixed,
                    two_qubit_measure, werner_measure)
from .monotone import (LocalChannel, MixingReport, MonotonicityReport,
                       apply_branch, basis_measurement, check_mixing,
                       check_monotonicity, mixing_suite,
                       monotonicity_suite, random_local_channel,
                       unitary_invariance_suite)
from . import zoo

__version__ = "0.1.0"

__all__ = [
    "InputError", "InvariantBreach",
    "PartyLayout", "PureState", "DensityOperator", "Ensemble",
    "load_state", "save_state", "state_from_dict", "state_to_dict",
    "Split", "enumerate_splits", "parse_split",
    "group_density", "group_tensor", "matricize", "numerical_rank",
    "bipartition_schmidt_rank", "partial_transpose", "ungroup_density",
    "FitOptions", "FitResult", "MeasureValue", "ProductDecomposition",
    "ProductTerm", "RankBracket", "als_fit", "basis_expansion_witness",
    "flattening_lower_bound", "rank_bracket", "schmidt_measure_pure",
    "schmidt_rank", "term_count_cap",
    "BsaResult", "MixedMeasureValue", "MixedOptions", "bsa",
    "ensemble_search", "flagged_mixture_bound", "ppt_check",
    "roof_upper_bound", "schmidt_measure_mixed", "two_qubit_measure",
    "werner_measure",
    "LocalChannel", "MixingReport", "MonotonicityReport", "apply_branch",
    "basis_measurement", "check_mixing", "check_monotonicity",
    "mixing_suite", "monotonicity_suite", "random_local_channel",
    "unitary_invariance_suite",
    "zoo",
    "__version__",
]
