from dataclasses import dataclass

import numpy as np

from ltr.errors import ShapeError

BN_EPS = 1e-5


@dataclass
class BatchNormCache:
    x_hat: np.ndarray
    inv_std: np.ndarray
    mode: str


@dataclass
class BatchNormState:
    """Per-column scale/shift plus running statistics for one hidden layer."""

    gamma: np.ndarray
    beta: np.ndarray
    running_mean: np.ndarray
    running_var: np.ndarray
    momentum: float = 0.1
    eps: float = BN_EPS

    @classmethod
    def create(cls, width: int, momentum: float = 0.1) -> "BatchNormState":
        return cls(
            gamma=np.ones(width),
            beta=np.zeros(width),
            running_mean=np.zeros(width),
            running_var=np.ones(width),
            momentum=momentum,
        )

    def forward(self, x: np.ndarray, mode: str) -> tuple[np.ndarray, BatchNormCache]:
        if mode == "train":
            if x.shape[0] < 2:
                raise ShapeError(
                    detail="batch norm needs at least two rows in train mode", rows=x.shape[0]
                )
            mean = x.mean(axis=0)
            var = x.var(axis=0)
            self.running_mean = (1.0 - self.momentum) * self.running_mean + self.momentum * mean
            self.running_var = (1.0 - self.momentum) * self.running_var + self.momentum * var
        else:
            mean = self.running_mean
            var = self.running_var
        inv_std = 1.0 / np.sqrt(var + self.eps)
        x_hat = (x - mean) * inv_std
        cache = BatchNormCache(x_hat=x_hat, inv_std=inv_std, mode=mode)
        return self.gamma * x_hat + self.beta, cache

    def backward(
        self, cache: BatchNormCache, grad: np.ndarray
    ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Return gradients w.r.t. input, gamma and beta."""
        d_gamma = (grad * cache.x_hat).sum(axis=0)
        d_beta = grad.sum(axis=0)
        d_xhat = grad * self.gamma
        if cache.mode != "train":
            return d_xhat * cache.inv_std, d_gamma, d_beta
        m = grad.shape[0]
        d_x = (
            cache.inv_std
            / m
            * (m * d_xhat - d_xhat.sum(axis=0) - cache.x_hat * (d_xhat * cache.x_hat).sum(axis=0))
        )
        return d_x, d_gamma, d_beta

    def copy(self) -> "BatchNormState":
        return BatchNormState(
            gamma=self.gamma.copy(),
            beta=self.beta.copy(),
            running_mean=self.running_mean.copy(),
            running_var=self.running_var.copy(),
            momentum=self.momentum,
            eps=self.eps,
        )


def batchnorm_forward(state: BatchNormState, pre_activations: np.ndarray, mode: str) -> np.ndarray:
    out, _ = state.forward(np.asarray(pre_activations, dtype=np.float64), mode)
    return out
