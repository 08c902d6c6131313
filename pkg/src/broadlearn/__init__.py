"""broadlearn: a wide random-feature classifier solved in closed form.

The design matrix concatenates random feature windows and nonlinear
enhancement nodes; output weights come from a ridge/pseudoinverse solve, and
the model grows by appending node columns through a block pseudoinverse
update instead of retraining.
"""

from .bls_core import (
    BlsModel,
    HyperParams,
    generate_enhancement_nodes,
    generate_feature_nodes,
    grow,
    predict_labels,
    predict_scores,
    train,
    train_until,
)
from .data_metrics import LabeledFeatures, accuracy, load_features, one_hot, pearson, save_features, split_8_2
from .frontend import (
    ConnectionLayer,
    FeatureTensor,
    ScalingConfig,
    compound_scaling,
    connection_fit,
    connection_forward,
    global_average_pool,
    swish_extract,
)
from .hypersearch import SearchSpace, Trial, halving_search, random_search
from .linalg import PinvState, pinv, pinv_append_columns, ridge_solve, update_output_weights
from .model_io import load_model, save_model

__version__ = "0.1.0"

__all__ = [
    "BlsModel",
    "ConnectionLayer",
    "FeatureTensor",
    "HyperParams",
    "LabeledFeatures",
    "PinvState",
    "ScalingConfig",
    "SearchSpace",
    "Trial",
    "accuracy",
    "compound_scaling",
    "connection_fit",
    "connection_forward",
    "generate_enhancement_nodes",
    "generate_feature_nodes",
    "global_average_pool",
    "grow",
    "halving_search",
    "load_features",
    "load_model",
    "one_hot",
    "pearson",
    "pinv",
    "pinv_append_columns",
    "predict_labels",
    "predict_scores",
    "random_search",
    "ridge_solve",
    "save_features",
    "save_model",
    "split_8_2",
    "swish_extract",
    "train",
    "train_until",
    "update_output_weights",
]
