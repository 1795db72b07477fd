"""Feed-forward scoring network with hand-written forward and backward passes.

Layout for ``layer_dims = [d, h1, ..., hL, 1]``: each hidden layer is
affine -> (batch norm) -> activation; the output layer is affine only, so
scores span the whole real line. Weights are stored as (fan_in, fan_out)
so a batch of documents is scored with ``x @ W + b``.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from ltr.errors import DivergenceError, ShapeError
from ltr.nn.activations import Activation, activation_backward, activation_forward
from ltr.nn.batchnorm import BatchNormCache, BatchNormState

if TYPE_CHECKING:
    from ltr.models.experiment import NetworkSpec

logger = logging.getLogger(__name__)


def weight_name(layer: int) -> str:
    return f"layers.{layer}.weight"


def bias_name(layer: int) -> str:
    return f"layers.{layer}.bias"


def gamma_name(layer: int) -> str:
    return f"bn.{layer}.gamma"


def beta_name(layer: int) -> str:
    return f"bn.{layer}.beta"


@dataclass
class ForwardCache:
    version: int
    mode: str
    inputs: list[np.ndarray]
    normed: list[np.ndarray]
    bn_caches: list[BatchNormCache | None]
    acts: list[np.ndarray]
    aux: list[np.ndarray | None]


class ScoringNet:
    """Per-document scoring function f(x) -> R."""

    def __init__(
        self,
        layer_dims: Sequence[int],
        activation: Activation | str = Activation.RELU,
        batchnorm: bool = False,
        seed: int = 0,
        bn_momentum: float = 0.1,
    ) -> None:
        dims = [int(d) for d in layer_dims]
        if len(dims) < 2 or dims[-1] != 1 or min(dims) < 1:
            raise ShapeError(
                detail="layer_dims must be [d, ..., 1] with positive widths", dims=dims
            )
        self.layer_dims = dims
        self.activation = Activation(activation)
        self.batchnorm = bool(batchnorm)
        self.rng_seed = int(seed)
        self.mode = "train"
        self.version = 0

        init_rng = np.random.default_rng(self.rng_seed)
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        for fan_in, fan_out in zip(dims[:-1], dims[1:], strict=True):
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            self.weights.append(init_rng.uniform(-limit, limit, size=(fan_in, fan_out)))
            self.biases.append(np.zeros(fan_out))
        hidden = dims[1:-1]
        self.bn: list[BatchNormState] = (
            [BatchNormState.create(h, momentum=bn_momentum) for h in hidden] if batchnorm else []
        )
        self.noise_rng = np.random.default_rng([self.rng_seed, 1])

    @classmethod
    def build(
        cls,
        input_dim: int,
        num_layers: int,
        hidden_dim: int,
        activation: Activation | str = Activation.RELU,
        batchnorm: bool = False,
        seed: int = 0,
        bn_momentum: float = 0.1,
    ) -> ScoringNet:
        if num_layers < 1:
            raise ShapeError(detail="a scoring net needs at least one layer", num_layers=num_layers)
        dims = [input_dim] + [hidden_dim] * (num_layers - 1) + [1]
        return cls(dims, activation, batchnorm, seed, bn_momentum)

    @property
    def input_dim(self) -> int:
        return self.layer_dims[0]

    @property
    def num_layers(self) -> int:
        return len(self.weights)

    def train(self) -> ScoringNet:
        self.mode = "train"
        return self

    def eval(self) -> ScoringNet:
        self.mode = "eval"
        return self

    def parameters(self) -> dict[str, np.ndarray]:
        """Trainable arrays by name; the arrays are live references."""
        params: dict[str, np.ndarray] = {}
        for i, (w, b) in enumerate(zip(self.weights, self.biases, strict=True)):
            params[weight_name(i)] = w
            params[bias_name(i)] = b
        for i, state in enumerate(self.bn):
            params[gamma_name(i)] = state.gamma
            params[beta_name(i)] = state.beta
        return params

    def mark_updated(self) -> None:
        self.version += 1

    def _check_input(self, features: np.ndarray) -> np.ndarray:
        x = np.asarray(features, dtype=np.float64)
        if x.ndim != 2 or x.shape[0] < 1:
            raise ShapeError(detail="features must be a non-empty m x d matrix", shape=x.shape)
        if x.shape[1] != self.input_dim:
            raise ShapeError(
                detail="feature dimension does not match network input",
                expected=self.input_dim,
                got=x.shape[1],
            )
        return x

    def forward(
        self,
        features: np.ndarray,
        mode: str | None = None,
        rrelu_slopes: Sequence[np.ndarray | None] | None = None,
    ) -> tuple[np.ndarray, ForwardCache]:
        """Score every row of ``features``; returns the scores and a backward cache."""
        mode = mode or self.mode
        h = self._check_input(features)
        cache = ForwardCache(
            version=self.version, mode=mode, inputs=[], normed=[], bn_caches=[], acts=[], aux=[]
        )
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases, strict=True)):
            cache.inputs.append(h)
            z = h @ w + b
            if i == last:
                scores = z[:, 0]
                break
            bn_cache = None
            if self.batchnorm:
                z, bn_cache = self.bn[i].forward(z, mode)
            slopes = rrelu_slopes[i] if rrelu_slopes is not None else None
            h, aux = activation_forward(self.activation, z, mode, self.noise_rng, slopes)
            cache.normed.append(z)
            cache.bn_caches.append(bn_cache)
            cache.acts.append(h)
            cache.aux.append(aux)
        if not np.all(np.isfinite(scores)):
            raise DivergenceError(detail="non-finite scores in forward pass")
        return scores, cache

    def predict(self, features: np.ndarray) -> np.ndarray:
        """Eval-mode scores; touches no state."""
        scores, _ = self.forward(features, mode="eval")
        return scores

    def backward(self, cache: ForwardCache, upstream: np.ndarray) -> dict[str, np.ndarray]:
        """Gradients of sum_i upstream_i * score_i for every parameter."""
        if cache.version != self.version:
            raise ShapeError(
                detail="stale forward cache", cache_version=cache.version, version=self.version
            )
        g = np.asarray(upstream, dtype=np.float64).reshape(-1, 1)
        if g.shape[0] != cache.inputs[0].shape[0]:
            raise ShapeError(
                detail="upstream gradient length differs from batch",
                expected=cache.inputs[0].shape[0],
                got=g.shape[0],
            )
        grads: dict[str, np.ndarray] = {}
        for i in range(len(self.weights) - 1, -1, -1):
            grads[weight_name(i)] = cache.inputs[i].T @ g
            grads[bias_name(i)] = g.sum(axis=0)
            if i == 0:
                break
            g = g @ self.weights[i].T
            j = i - 1
            g = activation_backward(
                self.activation, cache.normed[j], cache.acts[j], cache.aux[j], g
            )
            bn_cache = cache.bn_caches[j]
            if bn_cache is not None:
                g, d_gamma, d_beta = self.bn[j].backward(bn_cache, g)
                grads[gamma_name(j)] = d_gamma
                grads[beta_name(j)] = d_beta
        return grads

    def clone(self) -> ScoringNet:
        other = ScoringNet.__new__(ScoringNet)
        other.layer_dims = list(self.layer_dims)
        other.activation = self.activation
        other.batchnorm = self.batchnorm
        other.rng_seed = self.rng_seed
        other.mode = self.mode
        other.version = self.version
        other.weights = [w.copy() for w in self.weights]
        other.biases = [b.copy() for b in self.biases]
        other.bn = [s.copy() for s in self.bn]
        other.noise_rng = np.random.default_rng()
        other.noise_rng.bit_generator.state = self.noise_rng.bit_generator.state
        return other


def build_scoring_net(spec: NetworkSpec, input_dim: int, seed: int) -> ScoringNet:
    return ScoringNet.build(
        input_dim=input_dim,
        num_layers=spec.num_layers,
        hidden_dim=spec.hidden_dim,
        activation=spec.activation,
        batchnorm=spec.batchnorm,
        seed=seed,
        bn_momentum=spec.bn_momentum,
    )
