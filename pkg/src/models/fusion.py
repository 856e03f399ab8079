"""Fusion weight and language similarity models."""

from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from typing import Any, Dict, List, Optional, Tuple

from ..core.constants import FusionMode, WEIGHT_SUM_TOLERANCE
from ..core.exceptions import FileAccessError, FormatError, WeightError


@dataclass
class WeightCheck:
    """Outcome of weight validation with the list of failed invariants."""
    valid: bool
    failures: List[str] = field(default_factory=list)

    @property
    def message(self) -> str:
        return "ok" if self.valid else "; ".join(self.failures)


@dataclass(frozen=True)
class WeightVector:
    """Convex fusion weights: target weight plus one weight per source language."""
    mode: FusionMode
    target_weight: float
    source_weights: Tuple[Tuple[str, float], ...]

    def __post_init__(self):
        object.__setattr__(self, "mode", FusionMode.parse(str(self.mode)))
        object.__setattr__(
            self, "source_weights", tuple((str(lang), float(w)) for lang, w in self.source_weights)
        )

    @property
    def languages(self) -> List[str]:
        return [lang for lang, _ in self.source_weights]

    @property
    def weights(self) -> List[float]:
        return [w for _, w in self.source_weights]

    def weight_of(self, lang: str) -> float:
        return dict(self.source_weights)[lang]

    def check(self) -> WeightCheck:
        """Evaluate every invariant and collect the failures."""
        failures = []
        if not self.source_weights:
            failures.append("at least one source weight is required")
        if len(set(self.languages)) != len(self.languages):
            failures.append("source languages must be distinct")
        for name, value in [("target", self.target_weight), *self.source_weights]:
            if not 0.0 <= value <= 1.0:
                failures.append(f"weight of '{name}' is {value}, outside [0, 1]")
        total = self.target_weight + sum(self.weights)
        if abs(total - 1.0) > WEIGHT_SUM_TOLERANCE:
            failures.append(f"weights sum to {total!r}, not 1")
        if self.mode == FusionMode.CROSS_LINGUAL and self.target_weight != 0.0:
            failures.append(f"cross-lingual mode requires target weight 0, got {self.target_weight}")
        return WeightCheck(valid=not failures, failures=failures)

    def require_valid(self) -> "WeightVector":
        outcome = self.check()
        if not outcome.valid:
            raise WeightError(outcome.message)
        return self

    def to_text(self) -> str:
        lines = [f"mode {self.mode.value}", f"target {self.target_weight!r}"]
        lines.extend(f"{lang} {weight!r}" for lang, weight in self.source_weights)
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "WeightVector":
        """Parse ``mode``, ``target`` and ``<lang> <weight>`` lines.

        Numbers are read as exact decimals before conversion, and the result
        is validated.
        """
        mode: Optional[str] = None
        target: Optional[float] = None
        sources: List[Tuple[str, float]] = []
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise FormatError(f"Weight line {lineno}: expected two fields", code="bad-weights")
            key, value = parts
            if key == "mode":
                mode = value
                continue
            try:
                number = float(Decimal(value))
            except InvalidOperation:
                raise FormatError(f"Weight line {lineno}: '{value}' is not a number", code="bad-weights")
            if key == "target":
                target = number
            else:
                sources.append((key, number))
        if mode is None:
            raise FormatError("Weight file has no 'mode' line", code="bad-weights")
        try:
            parsed_mode = FusionMode.parse(mode)
        except ValueError:
            raise FormatError(f"Unknown fusion mode '{mode}'", code="bad-weights")
        if target is None:
            target = 0.0 if parsed_mode == FusionMode.CROSS_LINGUAL else None
        if target is None:
            raise FormatError("Multilingual weight file has no 'target' line", code="bad-weights")
        return cls(mode=parsed_mode, target_weight=target, source_weights=tuple(sources)).require_valid()

    @classmethod
    def load(cls, path: str) -> "WeightVector":
        try:
            with open(path, "r", encoding="utf-8") as f:
                return cls.from_text(f.read())
        except FileNotFoundError:
            raise FileAccessError(f"No such weight file: {path}")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "mode": self.mode.value,
            "target_weight": self.target_weight,
            "source_weights": dict(self.source_weights),
        }


@dataclass(frozen=True)
class SimilarityEntry:
    """Mapping-network quality figures of one source language."""
    avg_entropy: float
    top1_accuracy: float


@dataclass
class SimilarityTable:
    """Per-source-language entropy and accuracy, in insertion order."""
    entries: Dict[str, SimilarityEntry] = field(default_factory=dict)

    def add(self, lang: str, avg_entropy: float, top1_accuracy: float) -> None:
        self.entries[lang] = SimilarityEntry(float(avg_entropy), float(top1_accuracy))

    def to_text(self) -> str:
        return "".join(
            f"{lang} {entry.avg_entropy!r} {entry.top1_accuracy!r}\n" for lang, entry in self.entries.items()
        )

    @classmethod
    def from_text(cls, text: str) -> "SimilarityTable":
        """Parse ``<lang> <avg_entropy> <top1_accuracy>`` lines."""
        table = cls()
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 3:
                raise FormatError(f"Similarity line {lineno}: expected three fields", code="bad-similarity")
            try:
                table.add(parts[0], float(parts[1]), float(parts[2]))
            except ValueError:
                raise FormatError(f"Similarity line {lineno}: non-numeric value", code="bad-similarity")
        return table

    @classmethod
    def load(cls, path: str) -> "SimilarityTable":
        try:
            with open(path, "r", encoding="utf-8") as f:
                return cls.from_text(f.read())
        except FileNotFoundError:
            raise FileAccessError(f"No such similarity table: {path}")

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as f:
            f.write(self.to_text())
