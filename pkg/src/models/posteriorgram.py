"""Posteriorgram and per-frame label models."""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..core.exceptions import ValidationError


@dataclass(frozen=True, eq=False)
class Posteriorgram:
    """Per-frame posterior distributions of one utterance.

    ``frames`` is stored as a read-only float32 T x d matrix, the precision
    of the on-disk format; arithmetic elsewhere upcasts to float64.
    """
    utterance_id: str
    language_id: str
    frames: np.ndarray

    def __post_init__(self):
        frames = np.array(self.frames, dtype=np.float32, order="C", copy=True)
        if frames.ndim != 2:
            raise ValidationError(
                f"Posteriorgram '{self.utterance_id}' must be a 2-D matrix, got {frames.ndim}-D",
                code="bad-shape",
            )
        if frames.shape[0] < 1:
            raise ValidationError(f"Posteriorgram '{self.utterance_id}' has no frames", code="empty-posteriorgram")
        frames.flags.writeable = False
        object.__setattr__(self, "frames", frames)

    @property
    def num_frames(self) -> int:
        return int(self.frames.shape[0])

    @property
    def dim(self) -> int:
        return int(self.frames.shape[1])

    def as_float64(self) -> np.ndarray:
        return self.frames.astype(np.float64)

    def same_as(self, other: "Posteriorgram") -> bool:
        """Bit-level equality of identity and payload."""
        return (
            self.utterance_id == other.utterance_id
            and self.language_id == other.language_id
            and self.frames.shape == other.frames.shape
            and self.frames.tobytes() == other.frames.tobytes()
        )


@dataclass(frozen=True, eq=False)
class LabelSequence:
    """Per-frame reference class indices into a named inventory."""
    utterance_id: str
    labels: np.ndarray
    language_id: Optional[str] = None

    def __post_init__(self):
        labels = np.array(self.labels, dtype=np.int64, copy=True).reshape(-1)
        labels.flags.writeable = False
        object.__setattr__(self, "labels", labels)

    @property
    def num_frames(self) -> int:
        return int(self.labels.shape[0])

    def check_range(self, size: int) -> None:
        """Raise unless every label lies in [0, size)."""
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= size):
            bad = int(np.flatnonzero((self.labels < 0) | (self.labels >= size))[0])
            raise ValidationError(
                f"Label {int(self.labels[bad])} at frame {bad} of '{self.utterance_id}' "
                f"is outside [0, {size})",
                code="label-out-of-range",
                row=bad,
            )


@dataclass
class ValidationOutcome:
    """Result of a validation predicate."""
    valid: bool
    code: Optional[str] = None
    row: Optional[int] = None
    message: str = "ok"

    @classmethod
    def ok(cls) -> "ValidationOutcome":
        return cls(valid=True)

    @classmethod
    def failure(cls, code: str, message: str, row: Optional[int] = None) -> "ValidationOutcome":
        return cls(valid=False, code=code, row=row, message=message)

    def raise_for_failure(self, exc_type=ValidationError) -> None:
        if not self.valid:
            raise exc_type(self.message, code=self.code, row=self.row)
