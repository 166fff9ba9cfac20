"""Centroid-based concept learning for few-shot class-incremental tasks."""

from .features import (
    Dataset,
    LabeledExample,
    SyntheticSpec,
    euclidean_distance,
    generate_synthetic,
    load_features,
    save_features,
    split_shots,
)
from .clustering import (
    Centroid,
    ClassModel,
    ModelStore,
    cluster_class,
    learn_increment,
    load_store,
    save_store,
    update_class,
)
from .voting import Hyperparams, predict, predict_1nn, predict_batch, predict_ncm, predict_scores
from .linear import (
    LinearHead,
    TrainConfig,
    forward,
    gradient,
    run_flb_increment,
    run_ft_increment,
    train,
)
from .protocol import (
    IncrementMetrics,
    IncrementPlan,
    RunSummary,
    SessionState,
    aggregate_runs,
    make_plan,
    run_baseline_session,
    run_cbcl_session,
    run_many,
    tune_hyperparams,
)
from .arrangements import (
    ArrangementStore,
    ArrangementVerdict,
    Relation,
    Scene,
    SceneObject,
    check_arrangement,
    derive_relations,
    encode,
    learn_arrangement,
)
from .cleaning import CleaningTrialSpec, ErrorBreakdown, run_campaign, run_trial

__version__ = "0.1.0"

__all__ = [
    "ArrangementStore",
    "ArrangementVerdict",
    "Centroid",
    "ClassModel",
    "CleaningTrialSpec",
    "Dataset",
    "ErrorBreakdown",
    "Hyperparams",
    "IncrementMetrics",
    "IncrementPlan",
    "LabeledExample",
    "LinearHead",
    "ModelStore",
    "Relation",
    "RunSummary",
    "Scene",
    "SceneObject",
    "SessionState",
    "SyntheticSpec",
    "TrainConfig",
    "aggregate_runs",
    "check_arrangement",
    "cluster_class",
    "derive_relations",
    "encode",
    "euclidean_distance",
    "forward",
    "generate_synthetic",
    "gradient",
    "learn_arrangement",
    "learn_increment",
    "load_features",
    "load_store",
    "make_plan",
    "predict",
    "predict_1nn",
    "predict_batch",
    "predict_ncm",
    "predict_scores",
    "run_baseline_session",
    "run_campaign",
    "run_cbcl_session",
    "run_flb_increment",
    "run_ft_increment",
    "run_many",
    "run_trial",
    "save_features",
    "save_store",
    "split_shots",
    "train",
    "tune_hyperparams",
    "update_class",
]
