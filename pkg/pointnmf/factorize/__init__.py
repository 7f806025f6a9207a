from .loss import kl_pointwise, mean_kl, total_kl
from .optim import OptimizerKind
from .trainer import FactorPair, FactorTrainer
from .innmf import (
    ActivationKind,
    InnmfModel,
    TrainConfig,
    innmf_fit,
    refit_activations,
    grid_collapse_check,
    predict,
)
from .matrix import MatrixNmfModel, nmf_multiplicative, matrix_nmf_refit_H, mean_kl_matrix
