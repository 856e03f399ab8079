"""Mapping network, training configuration and training trace models."""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..core.constants import (
    DEFAULT_BATCH_SIZE, DEFAULT_HIDDEN_DIMS, DEFAULT_LEARNING_RATE, DEFAULT_MAX_EPOCHS,
    DEFAULT_MOMENTUM, DEFAULT_PATIENCE, HIDDEN_LAYERS, KL_EPSILON, StopReason,
)
from ..core.exceptions import ConfigurationError, FormatError, NumericalError


@dataclass
class MappingNetwork:
    """Source-to-target posterior regression network.

    Layer ``i`` computes ``h @ weights[i] + biases[i]``; weights are
    ``fan_in x fan_out``. Hidden layers use ReLU, the output layer softmax.
    """
    source_lang: str
    target_lang: str
    weights: List[np.ndarray]
    biases: List[np.ndarray]

    def __post_init__(self):
        self.weights = [np.asarray(w, dtype=np.float64) for w in self.weights]
        self.biases = [np.asarray(b, dtype=np.float64).reshape(-1) for b in self.biases]
        self.validate()

    @property
    def layer_dims(self) -> Tuple[int, ...]:
        return (self.weights[0].shape[0],) + tuple(w.shape[1] for w in self.weights)

    @property
    def source_dim(self) -> int:
        return int(self.weights[0].shape[0])

    @property
    def target_dim(self) -> int:
        return int(self.weights[-1].shape[1])

    @property
    def hidden_dims(self) -> Tuple[int, ...]:
        return self.layer_dims[1:-1]

    def validate(self) -> None:
        """Check topology and parameter invariants."""
        if len(self.weights) != HIDDEN_LAYERS + 1 or len(self.biases) != HIDDEN_LAYERS + 1:
            raise FormatError(
                f"Expected {HIDDEN_LAYERS} hidden layers plus output, got {len(self.weights)} layers",
                code="invalid-topology",
            )
        fan_in = self.weights[0].shape[0] if self.weights[0].ndim == 2 else 0
        for index, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.ndim != 2 or min(w.shape) < 1:
                raise FormatError(f"Layer {index} weight has shape {w.shape}", code="invalid-topology")
            if w.shape[0] != fan_in or b.shape != (w.shape[1],):
                raise FormatError(f"Layer {index} shapes do not chain", code="invalid-topology")
            fan_in = w.shape[1]
        for tensor in self.parameters():
            if not np.all(np.isfinite(tensor)):
                raise NumericalError("Network parameters contain NaN or Inf", code="non-finite-parameters")

    def parameters(self) -> List[np.ndarray]:
        """Parameter tensors in file order: W then b per layer."""
        params = []
        for w, b in zip(self.weights, self.biases):
            params.extend((w, b))
        return params

    def copy(self) -> "MappingNetwork":
        return MappingNetwork(
            source_lang=self.source_lang,
            target_lang=self.target_lang,
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
        )

    @classmethod
    def initialize(cls, source_dim: int, target_dim: int, hidden_dims: Sequence[int],
                   rng: np.random.Generator, source_lang: str = "src",
                   target_lang: str = "tgt") -> "MappingNetwork":
        """Glorot-uniform weights, zero biases."""
        if len(hidden_dims) != HIDDEN_LAYERS:
            raise ConfigurationError(f"Mapping networks have exactly {HIDDEN_LAYERS} hidden layers")
        dims = [source_dim, *hidden_dims, target_dim]
        if min(dims) < 1:
            raise FormatError(f"Layer widths must be positive, got {dims}", code="invalid-topology")
        weights, biases = [], []
        for fan_in, fan_out in zip(dims[:-1], dims[1:]):
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
            biases.append(np.zeros(fan_out))
        return cls(source_lang=source_lang, target_lang=target_lang, weights=weights, biases=biases)


@dataclass
class TrainingConfig:
    """Mini-batch SGD settings for one mapping network."""
    batch_size: int = DEFAULT_BATCH_SIZE
    learning_rate: float = DEFAULT_LEARNING_RATE
    max_epochs: int = DEFAULT_MAX_EPOCHS
    patience: int = DEFAULT_PATIENCE
    seed: int = 0
    epsilon_floor: float = KL_EPSILON
    momentum: float = DEFAULT_MOMENTUM
    hidden_dims: Tuple[int, ...] = DEFAULT_HIDDEN_DIMS

    def __post_init__(self):
        self.hidden_dims = tuple(int(h) for h in self.hidden_dims)
        self.validate()

    def validate(self) -> None:
        if self.batch_size < 1:
            raise ConfigurationError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.learning_rate <= 0:
            raise ConfigurationError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.max_epochs < 0:
            raise ConfigurationError(f"max_epochs must be >= 0, got {self.max_epochs}")
        if self.patience < 0:
            raise ConfigurationError(f"patience must be >= 0, got {self.patience}")
        if not 0.0 < self.epsilon_floor <= 1e-6:
            raise ConfigurationError(f"epsilon_floor must lie in (0, 1e-6], got {self.epsilon_floor}")
        if not 0.0 <= self.momentum < 1.0:
            raise ConfigurationError(f"momentum must lie in [0, 1), got {self.momentum}")
        if len(self.hidden_dims) != HIDDEN_LAYERS or min(self.hidden_dims) < 1:
            raise ConfigurationError(f"hidden_dims must be {HIDDEN_LAYERS} positive widths")

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "TrainingConfig":
        known = {k: v for k, v in data.items() if k in cls.__dataclass_fields__}
        try:
            return cls(**known)
        except TypeError as e:
            raise ConfigurationError(f"Invalid training config: {e}")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "batch_size": self.batch_size,
            "learning_rate": self.learning_rate,
            "max_epochs": self.max_epochs,
            "patience": self.patience,
            "seed": self.seed,
            "epsilon_floor": self.epsilon_floor,
            "momentum": self.momentum,
            "hidden_dims": list(self.hidden_dims),
        }


@dataclass
class EpochRecord:
    """Losses and accuracy after one epoch."""
    epoch: int
    train_kl: float
    dev_kl: float
    dev_top1: float

    def to_dict(self) -> Dict[str, Any]:
        return {"epoch": self.epoch, "train_kl": self.train_kl,
                "dev_kl": self.dev_kl, "dev_top1": self.dev_top1}


@dataclass
class TrainingTrace:
    """Per-epoch history of a training run."""
    records: List[EpochRecord] = field(default_factory=list)
    stop_reason: Optional[StopReason] = None
    best_epoch: Optional[int] = None

    @property
    def epoch_count(self) -> int:
        return len(self.records)

    @property
    def best_dev_kl(self) -> Optional[float]:
        if self.best_epoch is None:
            return None
        return self.records[self.best_epoch - 1].dev_kl

    def to_csv(self) -> str:
        lines = ["epoch,train_kl,dev_kl,dev_top1"]
        lines.extend(
            f"{r.epoch},{r.train_kl:.9f},{r.dev_kl:.9f},{r.dev_top1:.6f}" for r in self.records
        )
        return "\n".join(lines) + "\n"
