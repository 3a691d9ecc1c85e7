"""Purified extended computation, progress projectors, and their certification."""

from .extended import (
    DEFAULT_AMPLITUDE_CAP,
    CallTransition,
    DimensionCapError,
    ExtendedState,
    ProgressTrace,
    StepOverlaps,
    extended_noisy_oracle,
    extended_oracles,
    reduced_algorithm_density,
    run_extended,
)
from .projectors import (
    ProjectorFamily,
    complement_superposition,
    function_outputs,
    marked_direction,
    output_marked_direction,
    projector_family,
    success_projector,
    truth_dim,
)
from .records import Record, all_records, record_count, record_input_sets
from .verify import (
    CheckResult,
    all_pass,
    random_algorithm,
    verify_claim_identities,
    verify_claim_norms,
    verify_lemma_inequalities,
)

__all__ = [
    "DEFAULT_AMPLITUDE_CAP",
    "CallTransition",
    "CheckResult",
    "DimensionCapError",
    "ExtendedState",
    "ProgressTrace",
    "ProjectorFamily",
    "Record",
    "StepOverlaps",
    "all_pass",
    "all_records",
    "complement_superposition",
    "extended_noisy_oracle",
    "extended_oracles",
    "function_outputs",
    "marked_direction",
    "output_marked_direction",
    "projector_family",
    "random_algorithm",
    "record_count",
    "record_input_sets",
    "reduced_algorithm_density",
    "run_extended",
    "success_projector",
    "truth_dim",
    "verify_claim_identities",
    "verify_claim_norms",
    "verify_lemma_inequalities",
]
