"""Products of row-stochastic matrices with positive diagonals."""

from .accumulation import (
    Accumulation,
    MatrixSequence,
    Segmentation,
    accumulate,
    segment,
    segment_gantmacher,
)
from .analysis import (
    GapSchedule,
    TheoremReport,
    check_theorem,
    classify_schedule,
    hypothesis_from_uniform_bound,
    series_partial_sum,
)
from .generators import GeneratorSpec, generate
from .matrix_core import (
    StochasticMatrix,
    ZeroPattern,
    block_row_sum_norm,
    column_extrema,
    ergodicity_coefficient,
    is_consensus,
    min_plus,
    multiply,
    pattern_of,
    pattern_product,
)
from .processes import (
    ClusterReport,
    DistributionState,
    OpinionState,
    consensus_step,
    markov_step,
    run_consensus,
    run_markov,
    weak_ergodicity_estimate,
)
from .structure import (
    ClassPartition,
    GantmacherForm,
    communication_classes,
    gantmacher_form,
    is_essential_index,
    is_type_symmetric,
)

__version__ = "0.1.0"

__all__ = [
    "Accumulation",
    "ClassPartition",
    "ClusterReport",
    "DistributionState",
    "GantmacherForm",
    "GapSchedule",
    "GeneratorSpec",
    "MatrixSequence",
    "OpinionState",
    "Segmentation",
    "StochasticMatrix",
    "TheoremReport",
    "ZeroPattern",
    "accumulate",
    "block_row_sum_norm",
    "check_theorem",
    "classify_schedule",
    "column_extrema",
    "communication_classes",
    "consensus_step",
    "ergodicity_coefficient",
    "gantmacher_form",
    "generate",
    "hypothesis_from_uniform_bound",
    "is_consensus",
    "is_essential_index",
    "is_type_symmetric",
    "markov_step",
    "min_plus",
    "multiply",
    "pattern_of",
    "pattern_product",
    "run_consensus",
    "run_markov",
    "segment",
    "segment_gantmacher",
    "series_partial_sum",
    "weak_ergodicity_estimate",
]
