import numpy as np
from scipy.special import kl_div

DEFAULT_KL_FLOOR = 1e-8


def kl_pointwise(m, m_pred):
    """Generalized KL term m log(m / m_pred) - m + m_pred, with 0 log 0 = 0."""
    return kl_div(np.asarray(m, dtype=np.float64), np.asarray(m_pred, dtype=np.float64))


def mean_kl(m, m_pred, floor: float = DEFAULT_KL_FLOOR) -> float:
    """Per-point mean of the KL terms, predictions floored at `floor`."""
    return float(np.mean(kl_pointwise(m, np.maximum(m_pred, floor))))


def total_kl(V: np.ndarray, V_pred: np.ndarray) -> float:
    return float(np.sum(kl_pointwise(V, V_pred)))
