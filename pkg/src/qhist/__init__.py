"""Exact and floating-point tools for consistent histories and quantum measure theory
on finite history spaces."""
from .consistency import (
    MEDIUM,
    WEAK,
    ConsistentSetRecord,
    Partition,
    enumerate_consistent_histories,
    enumerate_consistent_sets,
    is_coarse_graining,
    is_consistent,
    is_consistent_history,
    probabilities,
)
from .core import (
    EXACT,
    FLOAT,
    BranchVectorModel,
    DecoherenceFunctional,
    Event,
    HistorySpace,
    OperatorModel,
    Step,
    ValidationReport,
    build_from_amplitudes,
    build_from_matrix,
    build_from_operators,
    compose,
    evaluate,
    mu,
    parse_event,
    product_event,
    validate,
)
from .errors import (
    AmplitudeParseError,
    BackendMismatchError,
    CapExceededError,
    InconsistentPartitionError,
    InvalidFunctionalError,
    InvalidModelError,
    NormalizationError,
    QHistError,
    SchemaError,
    SpaceMismatchError,
)
from .modelfile import functional_to_document, load_functional
from .models import (
    HopperSpec,
    SlitSpec,
    hopper_operator_model,
    make_appendix_b,
    make_hopper,
    make_slits,
    make_three_slit,
    random_strongly_positive,
)
from .numerics import ExactScalar, Sign, conj_mul, parse_amplitude, real_sign, render
from .preclusion import (
    ContraryWitness,
    NullCatalog,
    detect_contrary_inferences,
    enumerate_null_events,
    find_zero_covers,
    is_preclusive,
    is_zero_cover,
)
from .selection import (
    BICONDITIONAL,
    IMPLICATION,
    ClassificationTable,
    Coevent,
    check_pcs_coevent_compatibility,
    classify_all,
    coevent_valuation,
    enumerate_coevents,
    is_ocs,
    is_pcs,
)

__version__ = "0.1.0"
