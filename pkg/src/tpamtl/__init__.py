"""Complex activity recognition from interval-labelled actions.

Frequent temporal patterns (Allen relations, sliding-window support) serve
as features for an adaptive multi-task linear classifier that learns task
relatedness and a row-sparse weight matrix jointly.
"""

__version__ = "0.1.0"

from .intervals import Action, Activity, AllenRelation, allen_relation, normalize_activity
from .patterns import (
    FeatureSpace,
    MiningConfig,
    TemporalPattern,
    featurize,
    find_instances,
    is_subpattern,
    mine,
    pattern_support,
)
from .optimizer import Hyperparams, SolverConfig, fit_alternating, objective, solve_omega, solve_w
from .model import ModelMode, TrainedModel, load_model, predict, save_model, train
from .evaluation import kfold_cv, paired_t_test, relatedness_report

__all__ = [
    "Action",
    "Activity",
    "AllenRelation",
    "allen_relation",
    "normalize_activity",
    "FeatureSpace",
    "MiningConfig",
    "TemporalPattern",
    "featurize",
    "find_instances",
    "is_subpattern",
    "mine",
    "pattern_support",
    "Hyperparams",
    "SolverConfig",
    "fit_alternating",
    "objective",
    "solve_omega",
    "solve_w",
    "ModelMode",
    "TrainedModel",
    "load_model",
    "predict",
    "save_model",
    "train",
    "kfold_cv",
    "paired_t_test",
    "relatedness_report",
]
