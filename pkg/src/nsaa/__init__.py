"""Nonstationary newsvendor policies with distributional change detection.

Demand models and hard-instance generators live in :mod:`nsaa.distributions`,
ECDF machinery in :mod:`nsaa.empirical`, the restart test in
:mod:`nsaa.detection`, losses and oracles in :mod:`nsaa.losses`, the online
policies in :mod:`nsaa.policies`, and the simulation/regret harness in
:mod:`nsaa.harness`.  ``nsaa.cli`` is the batch front door.
"""

from ._kernels import PURE_NUMPY, backend
from .detection import DetectionConfig, detect
from .distributions import (
    BudgetReport,
    DemandModel,
    DemandSequence,
    make_hard_instance,
    point_mass,
    sequence_budgets,
    sequence_from_json,
    sequence_to_json,
    tv_distance,
    uniform_model,
)
from .empirical import SampleWindow, dkw_radius, ecdf, ks_distance
from .harness import (
    CostReport,
    RegretReport,
    Trace,
    clairvoyant_decision,
    dynamic_regret,
    expected_cost,
    replay,
    run,
    slope_fit,
    sweep,
)
from .losses import (
    AuctionLoss,
    LinearNewsvendor,
    OgdOracle,
    QuadraticLoss,
    breakpoint_oracle,
    ghat,
    loss_eval,
    loss_subgrad,
    mean_oracle,
    quantile_oracle,
)
from .policies import (
    GeneralNsaa,
    NsaaCensored,
    NsaaUncensored,
    Observation,
    SaaFamily,
    make_policy,
)

__version__ = "0.1.0"

__all__ = [
    "AuctionLoss", "BudgetReport", "CostReport", "DemandModel",
    "DemandSequence", "DetectionConfig", "GeneralNsaa", "LinearNewsvendor",
    "NsaaCensored", "NsaaUncensored", "Observation", "OgdOracle",
    "QuadraticLoss", "RegretReport", "SaaFamily", "SampleWindow", "Trace",
    "backend", "breakpoint_oracle", "clairvoyant_decision", "detect",
    "dkw_radius", "dynamic_regret", "ecdf", "expected_cost", "ghat",
    "ks_distance", "loss_eval", "loss_subgrad", "make_hard_instance",
    "make_policy", "mean_oracle", "point_mass", "quantile_oracle", "replay",
    "run", "sequence_budgets", "sequence_from_json", "sequence_to_json",
    "slope_fit", "sweep", "tv_distance", "uniform_model", "PURE_NUMPY",
]
