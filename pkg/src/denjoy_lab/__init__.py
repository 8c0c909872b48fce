"""Commuting Denjoy counterexamples, Hölder distortion estimates and
lattice-path selection for groups of circle diffeomorphisms."""

from .circle import (
    Cantor,
    CirclePoint,
    Gap,
    HolderParams,
    Letter,
    Regime,
    circle_reduce,
    index_offset,
    make_word,
)
from .denjoy import (
    ConditionFReport,
    DenjoySystem,
    Side,
    condition_F_sweep,
    gap_length,
    holder_estimate,
    local_gap_map,
    total_gap_sum,
    verify_condition_F,
)
from .distortion import (
    NOT_APPLICABLE,
    DistortionContext,
    Verdict,
    contradiction_driver,
    distortion_check,
    hyperbolic_fixed_point,
    make_context,
    word_images,
    word_sum_S,
)
from .errors import (
    CapacityError,
    ChainNotFound,
    ConfigError,
    DomainError,
    IntegrityError,
    InternalError,
    InvariantViolation,
    PreconditionError,
    RegimeError,
)
from .maps import ExplicitDynamics, Rotation, word_lift
from .metrics import (
    RotationEstimate,
    homomorphism_check,
    rotation_number,
    semiconjugacy_collapse,
    wandering_check,
)
from .paths import (
    LatticePath,
    RectangleSchedule,
    WeightGrid,
    admissible_chain,
    build_schedule,
    extract_path,
    good_columns,
    good_lines,
    oracle_min_path,
    path_weight,
    select_best_column,
    theoretical_S,
)

__version__ = "0.1.0"
