"""Worst-case control of partially observed finite systems with exact and
approximate information states."""

from .errors import *  # noqa: F401,F403
from .ranges import (
    FinitePointSet,
    FiniteRelation,
    Metric,
    CoordinateMetric,
    DiscreteMetric,
    TableMetric,
    GridPathMetric,
    HausdorffMetric,
    ProductMetric,
    absolute_metric,
    make_metric,
    hausdorff,
    average_hausdorff,
    conditional_range,
    l_inverse_constant,
    lipschitz_constant,
)
from .model import (
    Memory,
    RangeState,
    StateSpaceModel,
    InputOutputModel,
    memory_extend,
    enumerate_reachable_memories,
    range_filter_init,
    range_filter_update,
    worst_case_stage_cost,
    load_model,
    random_system,
)
from .dp import (
    InfoAbstraction,
    MemoryAbstraction,
    ConditionalRangeAbstraction,
    CompressedAbstraction,
    ValueTable,
    Strategy,
    solve_memory_dp,
    solve_terminal_dp,
    solve_information_state_dp,
    solve_abstraction_dp,
    extract_strategy,
    evaluate_strategy_worst_case,
    alpha_bound,
    simulate_rollouts,
)
from .quantize import (
    QuantizationGrid,
    BoundReport,
    build_grid,
    quantize_point,
    quantize_range,
    quantized_abstraction,
    perfect_obs_bounds,
    partial_obs_bounds,
    empirical_eps_delta,
    verify_value_lipschitz,
    bound_report,
)
from .datadriven import (
    Trajectory,
    TrajectoryDataset,
    EmpiricalRangeModel,
    generate_dataset,
    exhaustive_dataset,
    build_empirical_ranges,
    range_prediction_loss,
    solve_dp_from_data,
)

__version__ = "0.1.0"
