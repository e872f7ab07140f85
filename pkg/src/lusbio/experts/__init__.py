from .trees import AdaBoost, DecisionTree, RandomForest
from .svm import BinarySVM, SVMClassifier, rbf_gamma, rbf_kernel
from .mlp import KNNClassifier, MLPClassifier
from .zoo import (
    EXPERT_HYPERPARAMS,
    EXPERT_KINDS,
    ExpertModel,
    accuracy,
    fit,
    fit_best_of_3,
    load_expert,
    predict,
    predict_proba,
    save_expert,
)

__all__ = [
    "AdaBoost", "DecisionTree", "RandomForest", "BinarySVM", "SVMClassifier",
    "rbf_gamma", "rbf_kernel", "KNNClassifier", "MLPClassifier",
    "EXPERT_HYPERPARAMS", "EXPERT_KINDS", "ExpertModel", "accuracy", "fit",
    "fit_best_of_3", "load_expert", "predict", "predict_proba", "save_expert",
]
