"""AdamW with decoupled weight decay, implemented on numpy arrays.

Update rule per step t with gradient g:

    m = b1*m + (1-b1)*g
    v = b2*v + (1-b2)*g^2
    m_hat = m / (1 - b1^t),  v_hat = v / (1 - b2^t)
    param -= lr * (m_hat / (sqrt(v_hat) + eps) + wd * param * decay_mask)

Decay is decoupled from the gradient, so with wd = 0 this is exactly
Adam, and with lr = 0 parameters never move.
"""

from __future__ import annotations

import numpy as np

__all__ = ["AdamW"]


class AdamW:
    def __init__(self, shape, beta1=0.9, beta2=0.999, eps=1e-8, weight_decay=0.01,
                 decay_mask=None):
        self.beta1 = float(beta1)
        self.beta2 = float(beta2)
        self.eps = float(eps)
        self.weight_decay = float(weight_decay)
        self.m = np.zeros(shape, dtype=np.float64)
        self.v = np.zeros(shape, dtype=np.float64)
        self.t = 0
        # which entries receive decay; bias columns are typically exempt
        self.decay_mask = np.ones(shape) if decay_mask is None else np.asarray(decay_mask, float)

    def step(self, param: np.ndarray, grad: np.ndarray, lr: float) -> np.ndarray:
        self.t += 1
        self.m = self.beta1 * self.m + (1.0 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1.0 - self.beta2) * grad * grad
        m_hat = self.m / (1.0 - self.beta1 ** self.t)
        v_hat = self.v / (1.0 - self.beta2 ** self.t)
        update = m_hat / (np.sqrt(v_hat) + self.eps)
        return param - lr * (update + self.weight_decay * self.decay_mask * param)
