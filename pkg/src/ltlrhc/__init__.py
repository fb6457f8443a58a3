"""Receding-horizon reward collection under LTL constraints.

The pipeline: parse an LTL formula over the system's observations,
translate it to a Buchi automaton, build the weighted product with the
transition system, compute the energy function (distance-to-acceptance),
then run the receding-horizon controller that maximizes locally observed
rewards while the energy constraints guarantee the infinite closed-loop
trajectory satisfies the formula.
"""

from .buchi import (
    BuchiAutomaton,
    BuchiTransition,
    accepts_lasso,
    buchi_from_json,
    buchi_to_json,
    load_buchi,
    make_buchi,
    save_buchi,
)
from .controller import (
    AnchorMismatchError,
    Decrease,
    FiniteTerminal,
    InfeasibleError,
    InitFinite,
    PredictedTrajectory,
    RewardSnapshot,
    TerminalConstraint,
    ZeroAtIndex,
    baseline_step,
    classify_case,
    first_zero_index,
    predicted_reward,
    rh_init,
    rh_step,
    solve_horizon,
)
from .environment import (
    CaseStudyRewards,
    Neighborhood,
    RewardProcess,
    ScriptedRewards,
    load_scripted_rewards,
    observe,
)
from .formulas import (
    Formula,
    LassoWord,
    LtlSyntaxError,
    UnknownPropositionError,
    eval_on_lasso,
    eval_prop,
    format_formula,
    parse_ltl,
    to_nnf,
)
from .harness import (
    ComparisonReport,
    MonitorConfig,
    MonitorResult,
    Trace,
    Unsatisfiable,
    check_monitors,
    compare,
    load_trace,
    run,
    save_trace,
    trace_csv,
)
from .product import (
    AlphabetMismatchError,
    EnergyMap,
    ProductAutomaton,
    build_product,
    compute_energy,
    energy_csv,
    largest_self_reachable,
    product_dot,
    project,
)
from .system import (
    TransitionSystem,
    grid_dts,
    load_system,
    make_system,
    save_system,
    validate,
)
from .translate import translate

__version__ = "0.1.0"
