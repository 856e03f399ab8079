"""Synthetic multilingual corpus configuration and container models."""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from ..core.config import load_yaml
from ..core.exceptions import ConfigurationError
from .inventory import ClassInventory
from .posteriorgram import LabelSequence, Posteriorgram


@dataclass
class LanguageSpec:
    """One synthetic acoustic model's class space and emission behaviour.

    ``similarity`` is the fraction of latent phones that keep a class of
    their own; the rest are merged onto other phones' classes. A language
    ``derived_from`` another also inherits that language's merges.
    """
    language_id: str
    class_count: int
    noise_sigma: float = 1.0
    similarity: float = 1.0
    derived_from: Optional[str] = None
    templates: Optional[np.ndarray] = None

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "LanguageSpec":
        templates = data.get("templates")
        return cls(
            language_id=str(data["id"]),
            class_count=int(data["class_count"]),
            noise_sigma=float(data.get("noise_sigma", 1.0)),
            similarity=float(data.get("similarity", 1.0)),
            derived_from=data.get("derived_from"),
            templates=None if templates is None else np.asarray(templates, dtype=np.float64),
        )

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            "id": self.language_id,
            "class_count": self.class_count,
            "noise_sigma": self.noise_sigma,
            "similarity": self.similarity,
        }
        if self.derived_from is not None:
            data["derived_from"] = self.derived_from
        if self.templates is not None:
            data["templates"] = self.templates.tolist()
        return data


@dataclass
class SynthConfig:
    """Generative model of a synthetic multilingual posteriorgram corpus."""
    languages: List[LanguageSpec]
    n_latent_phones: int = 12
    self_loop: float = 0.9
    n_utterances: int = 100
    frames_per_utterance: Tuple[int, int] = (80, 120)
    sharpness: float = 4.0
    template_jitter: float = 0.5
    seed: int = 0

    def __post_init__(self):
        self.frames_per_utterance = tuple(int(v) for v in self.frames_per_utterance)
        self.validate()

    @property
    def language_ids(self) -> List[str]:
        return [spec.language_id for spec in self.languages]

    def language(self, language_id: str) -> LanguageSpec:
        for spec in self.languages:
            if spec.language_id == language_id:
                return spec
        raise ConfigurationError(f"Unknown language '{language_id}'", code="missing-language")

    def validate(self) -> None:
        if self.n_latent_phones < 1:
            raise ConfigurationError("n_latent_phones must be >= 1")
        if not 0.0 < self.self_loop < 1.0:
            raise ConfigurationError(f"self_loop must lie in (0, 1), got {self.self_loop}")
        if self.n_utterances < 1:
            raise ConfigurationError("n_utterances must be >= 1")
        low, high = self.frames_per_utterance
        if not 1 <= low <= high:
            raise ConfigurationError(f"frames_per_utterance must satisfy 1 <= min <= max, got {low}, {high}")
        if self.sharpness < 0 or self.template_jitter < 0:
            raise ConfigurationError("sharpness and template_jitter must be non-negative")
        if not self.languages:
            raise ConfigurationError("At least one language is required")

        seen = set()
        for spec in self.languages:
            if spec.language_id == "latent" or not spec.language_id:
                raise ConfigurationError(f"'{spec.language_id}' is not a usable language id")
            if spec.language_id in seen:
                raise ConfigurationError(f"Language '{spec.language_id}' is declared twice")
            if spec.class_count < 2:
                raise ConfigurationError(f"Language '{spec.language_id}' needs at least 2 classes")
            if spec.noise_sigma < 0:
                raise ConfigurationError(f"Language '{spec.language_id}' has negative noise_sigma")
            if not 0.0 <= spec.similarity <= 1.0:
                raise ConfigurationError(f"Language '{spec.language_id}' similarity must lie in [0, 1]")
            if spec.derived_from is not None and spec.derived_from not in seen:
                raise ConfigurationError(
                    f"Language '{spec.language_id}' derives from '{spec.derived_from}', "
                    "which must be declared earlier"
                )
            if spec.templates is not None:
                if spec.templates.shape != (self.n_latent_phones, spec.class_count):
                    raise ConfigurationError(
                        f"Templates of '{spec.language_id}' must be "
                        f"{self.n_latent_phones} x {spec.class_count}, got {spec.templates.shape}"
                    )
                if not np.all(np.isfinite(spec.templates)):
                    raise ConfigurationError(f"Templates of '{spec.language_id}' are not finite")
            seen.add(spec.language_id)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SynthConfig":
        try:
            return cls(
                languages=[LanguageSpec.from_dict(item) for item in data["languages"]],
                n_latent_phones=int(data.get("n_latent_phones", 12)),
                self_loop=float(data.get("self_loop", 0.9)),
                n_utterances=int(data.get("n_utterances", 100)),
                frames_per_utterance=tuple(data.get("frames_per_utterance", (80, 120))),
                sharpness=float(data.get("sharpness", 4.0)),
                template_jitter=float(data.get("template_jitter", 0.5)),
                seed=int(data.get("seed", 0)),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigurationError(f"Invalid synthetic corpus config: {e}")

    @classmethod
    def load(cls, path: str) -> "SynthConfig":
        return cls.from_dict(load_yaml(path))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "seed": self.seed,
            "n_latent_phones": self.n_latent_phones,
            "self_loop": self.self_loop,
            "n_utterances": self.n_utterances,
            "frames_per_utterance": list(self.frames_per_utterance),
            "sharpness": self.sharpness,
            "template_jitter": self.template_jitter,
            "languages": [spec.to_dict() for spec in self.languages],
        }


@dataclass
class LanguageModel:
    """Resolved emission templates of one synthetic language."""
    spec: LanguageSpec
    templates: np.ndarray
    home_class: np.ndarray
    inventory: ClassInventory


@dataclass
class SynthCorpus:
    """Generated posteriorgrams with their shared latent phone labels."""
    config: SynthConfig
    models: Dict[str, LanguageModel]
    posteriorgrams: Dict[str, Dict[str, Posteriorgram]]
    latent: Dict[str, LabelSequence]
    canonical: Dict[str, Dict[str, LabelSequence]]
    latent_inventory: Optional[ClassInventory] = None
    utterance_ids: List[str] = field(default_factory=list)

    def inventory(self, language_id: str) -> ClassInventory:
        return self.models[language_id].inventory

    def subset(self, utterance_ids: List[str]) -> "SynthCorpus":
        """Restrict every per-utterance mapping to ``utterance_ids``."""
        keep = sorted(utterance_ids)
        return SynthCorpus(
            config=self.config,
            models=self.models,
            posteriorgrams={lang: {u: pgs[u] for u in keep} for lang, pgs in self.posteriorgrams.items()},
            latent={u: self.latent[u] for u in keep},
            canonical={lang: {u: labels[u] for u in keep} for lang, labels in self.canonical.items()},
            latent_inventory=self.latent_inventory,
            utterance_ids=keep,
        )

    @property
    def num_frames(self) -> int:
        return sum(labels.num_frames for labels in self.latent.values())
