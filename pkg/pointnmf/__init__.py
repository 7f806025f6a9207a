__product__ = "pointnmf"
__author__ = {
    "pointnmf": "pointnmf@users.noreply.github.com",
}
__version__ = "1.0.0"

from .points import TFPoint, TFPointSet, NormalizationInfo
from .inr import EncodingConfig, InrFunction, TableFunction
from .factorize import InnmfModel, MatrixNmfModel, TrainConfig
