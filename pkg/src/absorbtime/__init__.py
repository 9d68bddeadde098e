"""Elapsed time between two transient-state observations of an absorbing
Markov chain, with Monte Carlo and enumeration cross-checks and a
Wright-Fisher allele-age application."""

__version__ = "0.1.0"

from .chain import (
    AbsorptionProbabilities,
    ChainStructure,
    TransitionMatrix,
    absorption_probabilities,
    classify,
    load_matrix,
    parse_matrix,
)
from .elapsed import (
    ElapsedMoments,
    ElapsedQuery,
    distribution_moments,
    distribution_of_elapsed,
    expected_elapsed,
    variance_elapsed,
)
from .errors import (
    AbsorbTimeError,
    ChainValidationError,
    ImpossibleObservationError,
    NotAbsorbingError,
    SimulationError,
    TruncationError,
)
from .oracle import (
    Enumeration,
    SimConfig,
    SimEstimate,
    enumerate_elapsed,
    simulate_elapsed,
    simulate_passage,
    simulate_recurrence,
)
from .passage import (
    PassageSummary,
    Recurrence,
    conditional_passage_moments,
    hitting_probabilities,
    modify_chain,
    passage_summary,
    recurrence_moments,
)
from .wright_fisher import AlleleAgeResult, WrightFisherParams, allele_age, build_wf_matrix
