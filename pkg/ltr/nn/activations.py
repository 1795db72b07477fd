"""Elementwise activations with their derivatives.

Constants follow the usual conventions: LeakyReLU slope 0.01, RReLU slopes
drawn from U[1/8, 1/3] in training and fixed at the midpoint in eval, ELU and
CELU with alpha 1, SELU with the self-normalizing lambda/alpha pair.
"""

try:
    from enum import StrEnum
except ImportError:  # Python < 3.11
    from enum import Enum

    class StrEnum(str, Enum):  # type: ignore[no-redef]
        def __str__(self) -> str:
            return str(self.value)

        def __format__(self, format_spec: str) -> str:
            return str(self.value).__format__(format_spec)

import numpy as np
from scipy.special import expit

LEAKY_SLOPE = 0.01
RRELU_LOWER = 1.0 / 8.0
RRELU_UPPER = 1.0 / 3.0
RRELU_EVAL_SLOPE = (RRELU_LOWER + RRELU_UPPER) / 2.0
ELU_ALPHA = 1.0
CELU_ALPHA = 1.0
SELU_LAMBDA = 1.0507009873554805
SELU_ALPHA = 1.6732632423543772


class Activation(StrEnum):
    RELU = "ReLU"
    LEAKY_RELU = "LeakyReLU"
    RRELU = "RReLU"
    ELU = "ELU"
    SELU = "SELU"
    CELU = "CELU"
    SIGMOID = "Sigmoid"


def activation_forward(
    kind: Activation | str,
    x: np.ndarray,
    mode: str = "train",
    rng: np.random.Generator | None = None,
    slopes: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray | None]:
    """Return ``(output, aux)``; aux holds the RReLU slopes used, else None.

    Passing ``slopes`` freezes the RReLU draw, which is how a gradient check
    replays a training-mode forward.
    """
    kind = Activation(kind)
    if kind is Activation.RELU:
        return np.maximum(x, 0.0), None
    if kind is Activation.LEAKY_RELU:
        return np.where(x > 0, x, LEAKY_SLOPE * x), None
    if kind is Activation.RRELU:
        if slopes is None:
            if mode == "train":
                gen = rng if rng is not None else np.random.default_rng()
                slopes = gen.uniform(RRELU_LOWER, RRELU_UPPER, size=x.shape)
            else:
                slopes = np.full(x.shape, RRELU_EVAL_SLOPE)
        return np.where(x >= 0, x, slopes * x), slopes
    if kind is Activation.ELU:
        return np.where(x > 0, x, ELU_ALPHA * np.expm1(np.minimum(x, 0.0))), None
    if kind is Activation.SELU:
        neg = SELU_ALPHA * np.expm1(np.minimum(x, 0.0))
        return SELU_LAMBDA * np.where(x > 0, x, neg), None
    if kind is Activation.CELU:
        neg = CELU_ALPHA * np.expm1(np.minimum(x, 0.0) / CELU_ALPHA)
        return np.where(x > 0, x, neg), None
    return expit(x), None


def activation_backward(
    kind: Activation | str,
    x: np.ndarray,
    out: np.ndarray,
    aux: np.ndarray | None,
    grad: np.ndarray,
) -> np.ndarray:
    """Chain ``grad`` (w.r.t. the output) back to the pre-activation ``x``."""
    kind = Activation(kind)
    if kind is Activation.RELU:
        return grad * (x > 0)
    if kind is Activation.LEAKY_RELU:
        return grad * np.where(x > 0, 1.0, LEAKY_SLOPE)
    if kind is Activation.RRELU:
        return grad * np.where(x >= 0, 1.0, aux)
    if kind is Activation.ELU:
        return grad * np.where(x > 0, 1.0, ELU_ALPHA * np.exp(np.minimum(x, 0.0)))
    if kind is Activation.SELU:
        return grad * SELU_LAMBDA * np.where(x > 0, 1.0, SELU_ALPHA * np.exp(np.minimum(x, 0.0)))
    if kind is Activation.CELU:
        return grad * np.where(x > 0, 1.0, np.exp(np.minimum(x, 0.0) / CELU_ALPHA))
    return grad * out * (1.0 - out)


def apply_activation(
    kind: Activation | str,
    pre_activations: np.ndarray,
    mode: str = "train",
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    out, _ = activation_forward(kind, np.asarray(pre_activations, dtype=np.float64), mode, rng)
    return out
