"""Evaluation report model."""

from dataclasses import dataclass, field
from typing import Any, Dict, Optional

from ..core.exceptions import FormatError
from ..core.utils import format_metric


@dataclass
class EvalReport:
    """Frame accuracy, top-n accuracy, entropy and PER of one evaluation run."""
    n_frames: int
    cmf: int
    top_n_accuracy: Dict[int, float] = field(default_factory=dict)
    avg_entropy: float = 0.0
    per: Optional[float] = None
    substitutions: int = 0
    insertions: int = 0
    deletions: int = 0
    reference_phones: int = 0

    @property
    def accuracy(self) -> float:
        return self.cmf / self.n_frames if self.n_frames else 0.0

    @property
    def edit_distance(self) -> int:
        return self.substitutions + self.insertions + self.deletions

    def to_dict(self) -> Dict[str, Any]:
        return {
            "frames": self.n_frames,
            "cmf": self.cmf,
            "accuracy": self.accuracy,
            "top_n_accuracy": {str(n): v for n, v in sorted(self.top_n_accuracy.items())},
            "avg_entropy_nats": self.avg_entropy,
            "per": self.per,
            "sub": self.substitutions,
            "ins": self.insertions,
            "del": self.deletions,
            "ref_phones": self.reference_phones,
        }

    def to_text(self) -> str:
        """Flat ``key=value`` block, one metric per line, 6 decimals."""
        lines = [f"frames={self.n_frames}", f"cmf={self.cmf}"]
        lines.extend(f"top{n}={format_metric(v)}" for n, v in sorted(self.top_n_accuracy.items()))
        lines.append(f"avg_entropy_nats={format_metric(self.avg_entropy)}")
        if self.per is not None:
            lines.append(f"per={format_metric(self.per)}")
        lines.extend([f"sub={self.substitutions}", f"ins={self.insertions}", f"del={self.deletions}"])
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "EvalReport":
        values: Dict[str, str] = {}
        for line in text.splitlines():
            if line.strip():
                key, sep, value = line.partition("=")
                if not sep:
                    raise FormatError(f"Report line '{line}' is not key=value", code="bad-report")
                values[key.strip()] = value.strip()
        try:
            return cls(
                n_frames=int(values["frames"]),
                cmf=int(values["cmf"]),
                top_n_accuracy={
                    int(key[3:]): float(value) for key, value in values.items() if key.startswith("top")
                },
                avg_entropy=float(values["avg_entropy_nats"]),
                per=float(values["per"]) if "per" in values else None,
                substitutions=int(values.get("sub", 0)),
                insertions=int(values.get("ins", 0)),
                deletions=int(values.get("del", 0)),
            )
        except (KeyError, ValueError) as e:
            raise FormatError(f"Incomplete report: {e}", code="bad-report")
