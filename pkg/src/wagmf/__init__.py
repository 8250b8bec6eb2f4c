"""Weighted adaptive gradient methods with projected steps, named baseline
presets, regret/bound analysis, and a reproducible experiment runner."""

from .analysis import (
    BoundReport,
    RegretSeries,
    RunTrace,
    adagrad_dd_term,
    corollary1_bound,
    fd_gradient_check,
    lemma3_check,
    ratio_violations,
    regret,
    students_t_test,
    thm1_bound,
    weighted_dd_term,
)
from .feasible import FeasibleSet, diameter_inf, project
from .presets import Preset, make_preset, preset_names, step
from .presets import init_state as preset_state
from .problems import (
    Dataset,
    LossOracle,
    MinibatchOracle,
    Quadratic,
    ReddiOnline,
    ReddiStochastic,
    RoundRng,
    SoftmaxObjective,
    gaussian_blobs,
    load_dataset,
    minibatch_oracle,
    quadratic,
    softmax_objective,
)
from .runner import (
    ExperimentConfig,
    ProblemSetup,
    build_problem,
    grid_search,
    parse_config,
    run,
    run_rounds,
)
from .schedules import (
    MomentumSchedule,
    StepSizeSchedule,
    WeightSchedule,
    alpha,
    balance,
    beta1_at,
    check_nonincrease,
    gamma,
)
from .steps import (
    OptimizerConfig,
    OptimizerState,
    generic_step,
    init_state,
    stable_step,
    wagmf_step,
)

__version__ = "0.1.0"
