import copy
import logging
from dataclasses import dataclass, field

import numpy as np

from ltr.errors import DivergenceError, ShapeError
from ltr.nn.network import ScoringNet

logger = logging.getLogger(__name__)


@dataclass
class AdamState:
    """Adam hyperparameters, step counter and per-parameter moments."""

    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 1e-3
    step: int = 0
    first_moment: dict[str, np.ndarray] = field(default_factory=dict)
    second_moment: dict[str, np.ndarray] = field(default_factory=dict)


def adam_step(
    state: AdamState,
    params: dict[str, np.ndarray],
    grads: dict[str, np.ndarray],
) -> dict[str, np.ndarray]:
    """One bias-corrected Adam update in place; L2 is added to the gradient first.

    Every update is computed before any is applied, so a divergent step leaves
    the parameters and the optimizer state as they were.
    """
    for name, p in params.items():
        g = grads.get(name)
        if g is None or g.shape != p.shape:
            raise ShapeError(
                detail="gradient shape does not match parameter",
                param=name,
                expected=p.shape,
                got=None if g is None else g.shape,
            )
        if not np.all(np.isfinite(g)):
            raise DivergenceError(detail="non-finite gradient", param=name, step=state.step + 1)

    t = state.step + 1
    correction1 = 1.0 - state.beta1**t
    correction2 = 1.0 - state.beta2**t
    updates: dict[str, tuple[np.ndarray, np.ndarray, np.ndarray]] = {}
    for name, p in params.items():
        g = grads[name]
        if state.weight_decay:
            g = g + state.weight_decay * p
        m = state.first_moment.get(name)
        v = state.second_moment.get(name)
        if m is None or v is None:
            m = np.zeros_like(p)
            v = np.zeros_like(p)
        m = state.beta1 * m + (1.0 - state.beta1) * g
        v = state.beta2 * v + (1.0 - state.beta2) * (g * g)
        new_p = p - state.lr * (m / correction1) / (np.sqrt(v / correction2) + state.eps)
        if not np.all(np.isfinite(new_p)):
            raise DivergenceError(detail="non-finite parameter after update", param=name, step=t)
        updates[name] = (m, v, new_p)

    state.step = t
    for name, (m, v, new_p) in updates.items():
        state.first_moment[name] = m
        state.second_moment[name] = v
        params[name][...] = new_p
    return params


class Adam:
    """Adam bound to one scoring net."""

    def __init__(
        self,
        lr: float = 1e-3,
        weight_decay: float = 1e-3,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ) -> None:
        self.state = AdamState(
            lr=lr, beta1=beta1, beta2=beta2, eps=eps, weight_decay=weight_decay
        )

    def step(self, net: ScoringNet, grads: dict[str, np.ndarray]) -> None:
        adam_step(self.state, net.parameters(), grads)
        net.mark_updated()

    def snapshot(self) -> "Adam":
        """Independent copy of the hyperparameters, step counter and moments."""
        return copy.deepcopy(self)
