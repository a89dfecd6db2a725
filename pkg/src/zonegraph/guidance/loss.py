"""Focal loss and its gradient with respect to logits."""
from __future__ import annotations

import math

import numpy as np

from ..errors import DomainError


def focal_loss(p_t: float, gamma: float = 2.0) -> float:
    """-(1 - p_t)**gamma * ln(p_t) for p_t in (0, 1]."""
    if not p_t > 0 or p_t > 1:
        raise DomainError(f"p_t must lie in (0, 1], got {p_t}")
    return -((1.0 - p_t) ** gamma) * math.log(p_t)


def focal_loss_batch(probs: np.ndarray, labels: np.ndarray, gamma: float = 2.0):
    """Mean focal loss over rows and its gradient with respect to the logits.

    Parameters
    ----------
    probs : (B, 2) softmax outputs
    labels : (B,) ints in {0, 1}
    """
    b = probs.shape[0]
    rows = np.arange(b)
    pt = probs[rows, labels]
    if np.any(pt <= 0):
        raise DomainError("probability of the true class underflowed to 0")
    q = 1.0 - pt
    loss = -(q**gamma) * np.log(pt)
    # dL/dp_t, then softmax Jacobian: dp_t/dz_k = p_t (1[k=y] - p_k)
    dl_dpt = gamma * q ** (gamma - 1) * np.log(pt) - q**gamma / pt if gamma != 0 else -1.0 / pt
    onehot = np.zeros_like(probs)
    onehot[rows, labels] = 1.0
    dlogits = (dl_dpt * pt)[:, None] * (onehot - probs) / b
    return float(loss.mean()), dlogits
