"""Declarative experiment configuration.

Every section is a pydantic model with ``extra="forbid"`` so a misspelled key is
reported by name. Defaults: Adam at 1e-3 with L2 1e-3, 100 epochs, hidden width
100, cutoffs 1/3/5/10/20/50.
"""

from __future__ import annotations

import itertools
import math
try:
    from enum import StrEnum
except ImportError:  # Python < 3.11
    from enum import Enum

    class StrEnum(str, Enum):  # type: ignore[no-redef]
        def __str__(self) -> str:
            return str(self.value)

        def __format__(self, format_spec: str) -> str:
            return str(self.value).__format__(format_spec)
from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ltr.nn.activations import Activation

METRIC_NAMES = ("P", "AP", "nDCG", "ERR", "nERR")
SELECTION_KEY = ("nDCG", 5)


class RankerKind(StrEnum):
    RANK_MSE = "RankMSE"
    RANKNET = "RankNet"
    LAMBDARANK = "LambdaRank"
    LISTNET = "ListNet"
    LISTMLE = "ListMLE"
    RANKCOSINE = "RankCosine"
    APPROXNDCG = "ApproxNDCG"
    STLISTNET = "STListNet"


class RankerSpec(BaseModel):
    """Loss family and its hyperparameters for empirical risk minimization."""

    model_config = ConfigDict(extra="forbid")

    kind: RankerKind = Field(default=RankerKind.LAMBDARANK, description="Surrogate loss")
    sigma: float = Field(default=1.0, gt=0, description="Pairwise logistic scale")
    alpha: float = Field(default=10.0, gt=0, description="ApproxNDCG rank sharpness")
    seed: int | None = Field(default=None, description="Loss noise seed; derived when unset")
    masked_label_policy: Literal["zero", "exclude"] = Field(default="zero")
    listnet_target: Literal["labels", "gains"] = Field(
        default="labels", description="ListNet target softmax over raw labels or 2^y-1 gains"
    )
    tie_policy: Literal["by_index", "seeded"] = Field(
        default="by_index", description="ListMLE target tie breaking"
    )


class NetworkSpec(BaseModel):
    """Shape of the feed-forward scoring function; N layers means N weight matrices."""

    model_config = ConfigDict(extra="forbid")

    num_layers: int = Field(default=3, ge=2, le=64, description="Weight matrices")
    hidden_dim: int = Field(default=100, ge=1, description="Hidden layer width")
    activation: Activation = Field(default=Activation.RELU)
    batchnorm: bool = Field(default=True, description="Batch norm between hidden layers")
    bn_momentum: float = Field(default=0.1, gt=0, le=1)


class OptimizerSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    lr: float = Field(default=1e-3, gt=0, description="Adam learning rate")
    weight_decay: float = Field(default=1e-3, ge=0, description="L2 coefficient")
    beta1: float = Field(default=0.9, ge=0, lt=1)
    beta2: float = Field(default=0.999, ge=0, lt=1)
    eps: float = Field(default=1e-8, gt=0)


def _adversarial_network() -> NetworkSpec:
    return NetworkSpec(num_layers=5, hidden_dim=100, activation=Activation.RELU, batchnorm=False)


class AdversarialSpec(BaseModel):
    """Generator/discriminator game over top-k Plackett-Luce rankings."""

    model_config = ConfigDict(extra="forbid")

    k: int = Field(default=5, ge=1, description="Ranking size: 1 point, 2 pair, >2 list")
    temperature: float = Field(default=0.5, gt=0)
    g_steps: int = Field(default=1, ge=1, description="Generator steps per query")
    d_steps: int = Field(default=1, ge=1, description="Discriminator steps per query")
    samples_per_query: int = Field(default=5, ge=1)
    seed: int | None = Field(default=None, description="Sampling seed; derived when unset")
    network: NetworkSpec = Field(default_factory=_adversarial_network)
    player: Literal["discriminator", "generator"] = Field(
        default="discriminator", description="Player whose metrics form the run report"
    )


class SyntheticSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    num_queries: int = Field(default=200, ge=1)
    docs_per_query: int = Field(default=30, ge=1)
    dim: int = Field(default=20, ge=1)
    noise: float = Field(default=0.1, ge=0)
    num_grades: int = Field(default=5, ge=2)
    seed: int = 0


class DataSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    path: str | None = Field(default=None, description="LETOR file split into folds")
    fold_dir: str | None = Field(default=None, description="Pre-split train/vali/test directory")
    synthetic: SyntheticSpec | None = None
    feature_dim: int | None = Field(default=None, ge=1)
    normalization: Literal["zscore", "minmax", "none"] = "zscore"
    binarize_threshold: float | None = None
    noncontiguous: Literal["error", "merge"] = "error"
    mask_ratio: float = Field(default=0.0, ge=0, le=1, description="Train-split label masking")
    min_docs: int = Field(default=1, ge=1)
    require_relevant: bool = Field(
        default=False, description="Drop training queries without a relevant document"
    )

    @model_validator(mode="after")
    def _one_source(self) -> DataSpec:
        sources = [s for s in (self.path, self.fold_dir, self.synthetic) if s is not None]
        if len(sources) > 1:
            raise ValueError("set at most one of path, fold_dir, synthetic")
        return self

    @field_validator("binarize_threshold")
    @classmethod
    def _finite_threshold(cls, v: float | None) -> float | None:
        if v is not None and not math.isfinite(v):
            raise ValueError("threshold must be finite")
        return v


class EvaluationSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    cutoffs: list[int] = Field(default_factory=lambda: [1, 3, 5, 10, 20, 50])
    metrics: list[Literal["P", "AP", "nDCG", "ERR", "nERR"]] = Field(
        default_factory=lambda: list(METRIC_NAMES)
    )
    num_folds: int = Field(default=5, ge=3)
    relevance_threshold: float = Field(default=1.0, description="Binary relevance for P and AP")
    skip_zero_relevance: bool = Field(
        default=False, description="Exclude queries without relevant documents from means"
    )
    mask_ratios: list[float] = Field(default_factory=lambda: [0.0, 0.1, 0.2, 0.3, 0.4, 0.5])

    @field_validator("cutoffs")
    @classmethod
    def _ascending(cls, v: list[int]) -> list[int]:
        if not v:
            raise ValueError("cutoffs must be nonempty")
        if any(k < 1 for k in v):
            raise ValueError("cutoffs must be >= 1")
        if any(b <= a for a, b in itertools.pairwise(v)):
            raise ValueError("cutoffs must be strictly ascending")
        return v

    @field_validator("mask_ratios")
    @classmethod
    def _ratios_in_range(cls, v: list[float]) -> list[float]:
        if any(not 0.0 <= r <= 1.0 for r in v):
            raise ValueError("mask ratios must lie in [0, 1]")
        return v


class ExperimentConfig(BaseModel):
    """Fully resolved experiment: data, model, optimizer and protocol."""

    model_config = ConfigDict(extra="forbid")

    seed: int = Field(default=0, description="Root of every derived random stream")
    framework: Literal["erm", "adversarial"] = "erm"
    epochs: int = Field(default=100, ge=0)
    ranker: RankerSpec = Field(default_factory=RankerSpec)
    network: NetworkSpec = Field(default_factory=NetworkSpec)
    optimizer: OptimizerSpec = Field(default_factory=OptimizerSpec)
    adversarial: AdversarialSpec = Field(default_factory=AdversarialSpec)
    data: DataSpec = Field(default_factory=DataSpec)
    evaluation: EvaluationSpec = Field(default_factory=EvaluationSpec)
    output_dir: str = Field(default="out")

    @property
    def scoring_network(self) -> NetworkSpec:
        return self.adversarial.network if self.framework == "adversarial" else self.network

    def label(self) -> str:
        if self.framework == "adversarial":
            return f"IRGAN-k{self.adversarial.k}"
        return str(self.ranker.kind)


class GridSpec(BaseModel):
    """Candidate values per dotted config key; cells are their cartesian product."""

    model_config = ConfigDict(extra="forbid")

    axes: dict[str, list[Any]] = Field(default_factory=dict)
    max_cells: int = Field(default=1024, ge=1)

    @field_validator("axes")
    @classmethod
    def _nonempty_axes(cls, v: dict[str, list[Any]]) -> dict[str, list[Any]]:
        if not v:
            raise ValueError("grid needs at least one axis")
        for key, values in v.items():
            if not values:
                raise ValueError(f"axis {key} has no values")
        return v

    @property
    def size(self) -> int:
        size = 1
        for values in self.axes.values():
            size *= len(values)
        return size

    def cells(self) -> list[dict[str, Any]]:
        keys = list(self.axes)
        combos = itertools.product(*self.axes.values())
        return [dict(zip(keys, combo, strict=True)) for combo in combos]
