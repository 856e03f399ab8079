"""Run-matrix experiment configuration and result models."""

import os
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

from ..core.config import load_yaml
from ..core.constants import DEFAULT_DEV_FRACTION, DEFAULT_TARGET_SHARE, DEFAULT_TEMPERATURE, DEFAULT_TOPN, FusionMode
from ..core.exceptions import ConfigurationError, RangeError
from .network import TrainingConfig
from .report import EvalReport
from .synth import SynthConfig

MONO = "mono"
MULTI_MF = "multi-mf"
CROSS_MF = "cross-mf"


@dataclass
class PipelineConfig:
    """One target language, its sources, and where everything is read and written.

    The corpus is either generated from ``synth`` or read from
    ``corpus_dir``. Explicit ``weights`` (``target`` plus one entry per
    source) replace derived multilingual weights.
    """
    name: str
    target: str
    sources: List[str]
    output_dir: str
    synth: Optional[SynthConfig] = None
    corpus_dir: Optional[str] = None
    training: TrainingConfig = field(default_factory=TrainingConfig)
    dev_fraction: float = DEFAULT_DEV_FRACTION
    eval_fraction: float = 0.2
    temperature: float = DEFAULT_TEMPERATURE
    target_share: float = DEFAULT_TARGET_SHARE
    weights: Optional[Dict[str, float]] = None
    topn: List[int] = field(default_factory=lambda: list(DEFAULT_TOPN))
    seed: int = 0

    def __post_init__(self):
        self.validate()

    @property
    def languages(self) -> List[str]:
        return [self.target] + list(self.sources)

    def validate(self) -> None:
        if not self.name:
            raise ConfigurationError("Pipeline needs a name")
        if not self.target:
            raise ConfigurationError("Exactly one target language is required")
        if not self.sources:
            raise ConfigurationError("At least one source language is required")
        if len(set(self.sources)) != len(self.sources) or self.target in self.sources:
            raise ConfigurationError("Source languages must be distinct and differ from the target")
        if (self.synth is None) == (self.corpus_dir is None):
            raise ConfigurationError("Give exactly one of 'synth' and 'corpus_dir'")
        if self.corpus_dir is not None and os.path.abspath(self.corpus_dir) == os.path.abspath(self.output_dir):
            raise ConfigurationError("corpus_dir and output_dir must be distinct paths")
        if self.synth is not None:
            missing = [lang for lang in self.languages if lang not in self.synth.language_ids]
            if missing:
                raise ConfigurationError(
                    f"Synthetic config lacks language(s): {', '.join(missing)}", code="missing-language"
                )
        for label, value in (("dev_fraction", self.dev_fraction), ("eval_fraction", self.eval_fraction)):
            if not 0.0 < value < 1.0:
                raise ConfigurationError(f"{label} must lie in (0, 1), got {value}")
        if self.temperature <= 0:
            raise ConfigurationError(f"temperature must be positive, got {self.temperature}")
        if not 0.0 <= self.target_share <= 1.0:
            raise ConfigurationError(f"target_share must lie in [0, 1], got {self.target_share}")
        if self.weights is not None and set(self.weights) != {"target", *self.sources}:
            raise ConfigurationError("weights must name 'target' and every source exactly once")
        if not self.topn or min(self.topn) < 1:
            raise ConfigurationError("topn must list positive integers")
        if self.synth is not None:
            self.check_topn(self.synth.language(self.target).class_count)

    def check_topn(self, class_count: int) -> None:
        """Reject top-n values the target inventory cannot rank."""
        if max(self.topn) > class_count:
            raise RangeError(
                f"top-n value {max(self.topn)} is outside [1, {class_count}] for target '{self.target}'",
                code="n-out-of-range",
            )

    @classmethod
    def from_dict(cls, data: Dict[str, Any], base_dir: str = ".") -> "PipelineConfig":
        """Build from a parsed YAML mapping; relative paths resolve against ``base_dir``."""
        def resolve(path: Optional[str]) -> Optional[str]:
            if path is None:
                return None
            return path if os.path.isabs(path) else os.path.join(base_dir, path)

        try:
            synth = data.get("synth")
            if isinstance(synth, str):
                synth = SynthConfig.load(resolve(synth))
            elif isinstance(synth, dict):
                synth = SynthConfig.from_dict(synth)
            fusion = data.get("fusion", {}) or {}
            training = dict(data.get("training", {}) or {})
            training.setdefault("seed", int(data.get("seed", 0)))
            weights = fusion.get("weights")
            return cls(
                name=str(data["name"]),
                target=str(data["target"]),
                sources=[str(s) for s in data["sources"]],
                output_dir=resolve(str(data.get("output_dir", os.path.join("runs", str(data["name"]))))),
                synth=synth,
                corpus_dir=resolve(data.get("corpus_dir")),
                training=TrainingConfig.from_dict(training),
                dev_fraction=float(data.get("dev_fraction", DEFAULT_DEV_FRACTION)),
                eval_fraction=float(data.get("eval_fraction", 0.2)),
                temperature=float(fusion.get("temperature", DEFAULT_TEMPERATURE)),
                target_share=float(fusion.get("target_share", DEFAULT_TARGET_SHARE)),
                weights=None if weights is None else {str(k): float(v) for k, v in weights.items()},
                topn=[int(n) for n in data.get("topn", DEFAULT_TOPN)],
                seed=int(data.get("seed", 0)),
            )
        except (KeyError, TypeError, ValueError, AttributeError) as e:
            raise ConfigurationError(f"Invalid pipeline config: {e}")

    @classmethod
    def load(cls, path: str) -> "PipelineConfig":
        return cls.from_dict(load_yaml(path), base_dir=os.path.dirname(os.path.abspath(path)))


@dataclass
class MatrixRow:
    """One fusion configuration of the run matrix and its evaluation."""
    system: str
    mode: Optional[FusionMode]
    sources: Tuple[str, ...]
    report: EvalReport

    @property
    def key(self) -> str:
        if not self.sources:
            return self.system
        return f"{self.system}_{'+'.join(self.sources)}"


@dataclass
class MatrixResult:
    """All rows of one run matrix, in evaluation order."""
    target: str
    sources: List[str]
    topn: List[int]
    rows: List[MatrixRow] = field(default_factory=list)

    def row(self, key: str) -> MatrixRow:
        for row in self.rows:
            if row.key == key:
                return row
        raise KeyError(key)
