"""Safety-aware preference-based tuning of a robust CBF safety filter."""

from .actions import Action, ActionGrid, DimSpec, GridSpec, LineSubspace, build_grid
from .cbf import (
    BarrierConfig,
    FilterResult,
    NominalGains,
    Obstacle,
    RobustParams,
    SamplingDomain,
    barrier,
    conservative_baseline,
    issf_bound,
    lie_derivatives,
    nominal_controller,
    saturate,
    trop_filter,
)
from .learner import Learner, LearnerConfig, LearnerState, Proposal, Query, region_of_interest
from .prefgp import (
    SAFE,
    UNSAFE,
    FeedbackDataset,
    KernelConfig,
    LikelihoodConfig,
    OrdinalLabel,
    PosteriorModel,
    Preference,
    kernel,
    laplace_map,
    neg_log_posterior,
    ordinal_likelihood,
    pref_likelihood,
    prior_covariance,
    sample_utilities,
)
from .sim import DisturbanceSpec, Rollout, SimConfig, score_rollout, simulate
