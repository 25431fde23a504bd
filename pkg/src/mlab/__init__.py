"""mlab: betting strategies, martingale transforms, and diagonalization
constructions over bit sequences, with exact rational capital throughout."""

from .core import (
    Capital,
    Checkpoints,
    DoublingViolation,
    NotIncreasing,
    OutOfBudget,
    SequenceSource,
    StepBudget,
    Word,
    default_budget,
    sequence_prefix,
    validate_checkpoints,
)
from .martingales import (
    FairnessReport,
    Martingale,
    SavingMartingale,
    check_fairness,
    saving_transform,
    weighted_sum,
)
from .strategies import (
    Adaptive,
    Injection,
    Monotonic,
    Permutation,
    RunTrace,
    ScanRule,
    Strategy,
    check_injectivity,
    next_position,
    run_on_sequence,
    run_on_word,
    visited_below,
)
from .transforms import (
    ClosedClassEnum,
    HorizonTooLarge,
    InactiveMarking,
    NoBound,
    RaceTimeout,
    average_martingale,
    average_value,
    averaging_horizon,
    conjugate_class,
    monotonize,
    totalize_martingale,
    totalize_strategy,
)
from .certificates import (
    Certificate,
    EntryRecord,
    UnknownRosterId,
    parse_certificate,
    serialize_certificate,
)
from .complexity import (
    ComplexityBound,
    DescriptionSystem,
    complexity_upper,
    enumerate_low,
)
from .diagonalize import (
    ConstructionConfig,
    ConstructionResult,
    DiagonalState,
    FairnessViolation,
    LandingSet,
    RosterEntry,
    divergence_probe,
    extend_below_bound,
    greedy_step,
    insert_entry,
    replay_certificate,
    run_construction,
    schedule_from_order,
)
from .splitting import (
    IntervalTooSmall,
    SplittingPlan,
    build_plan,
    build_splitting_strategy,
    expected_gain,
)

__version__ = "0.1.0"
