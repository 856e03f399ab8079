"""Synthetic multilingual corpora and Bayes-optimal mapping oracles."""

import os
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
import yaml

from ..core.constants import LABEL_SUFFIX, SILENCE_PHONE, UNUSED_PHONE
from ..core.exceptions import ConfigurationError, FileAccessError, FormatError, ValidationError
from ..core.logger import get_logger
from ..core.utils import argmax_rows, derive_rng
from ..models.inventory import ClassInventory
from ..models.posteriorgram import LabelSequence, Posteriorgram
from ..models.synth import LanguageModel, SynthConfig, SynthCorpus
from .metrics_service import frame_accuracy
from .posterior_service import (
    ensure_valid, label_path, pgm_path, read_labels, read_posteriorgram, write_labels, write_posteriorgram,
)

logger = get_logger("service.synth")

MANIFEST_NAME = "manifest.txt"
CONFIG_NAME = "synth.yaml"
LATENT_DIR = "latent"
LATENT_LANGUAGE = "latent"
INVENTORY_SUFFIX = ".inv"

ORACLE_SOURCE_ARGMAX = "source_argmax"
ORACLE_LATENT = "latent"
DEFAULT_ORACLE_SAMPLES = 100_000
_ORACLE_CHUNK = 20_000


def latent_phone_names(n_latent: int) -> List[str]:
    """Latent phone 0 is silence; the rest are ``p1``, ``p2``, ..."""
    return [SILENCE_PHONE] + [f"p{i}" for i in range(1, n_latent)]


def _home_classes(cfg: SynthConfig, lang: str, homes: Dict[str, np.ndarray]) -> np.ndarray:
    spec = cfg.language(lang)
    n, d = cfg.n_latent_phones, spec.class_count
    rng = derive_rng(cfg.seed, "homes", lang)
    home = rng.choice(d, size=n, replace=n > d)

    if spec.derived_from is not None:
        parent = homes[spec.derived_from]
        for l in range(n):
            earlier = np.flatnonzero(parent[:l] == parent[l])
            if earlier.size:
                home[l] = home[earlier[0]]

    n_merged = int(round((1.0 - spec.similarity) * n))
    if n_merged:
        merged = rng.choice(n, size=n_merged, replace=False)
        anchors = np.setdiff1d(np.arange(n), merged)
        if anchors.size == 0:
            anchors = np.array([0])
        for l in sorted(int(m) for m in merged):
            candidates = anchors[anchors != l]
            if candidates.size:
                home[l] = home[int(rng.choice(candidates))]
    return home.astype(np.int64)


def _inventory(lang: str, home: np.ndarray, class_count: int) -> ClassInventory:
    names = latent_phone_names(home.shape[0])
    # classes without a latent phone decode to a non-silence placeholder
    phones = [UNUSED_PHONE] * class_count
    # lowest latent wins a shared class
    for l in range(home.shape[0] - 1, -1, -1):
        phones[int(home[l])] = names[l]
    return ClassInventory(language_id=lang, size=class_count, phone_of_class=tuple(phones),
                          silence_phone=SILENCE_PHONE)


def build_language_models(cfg: SynthConfig) -> Dict[str, LanguageModel]:
    """Resolve emission templates and class inventories for every language.

    Latent phones sharing a home class share one template row, so merged
    phones are indistinguishable in that language.
    """
    models: Dict[str, LanguageModel] = {}
    homes: Dict[str, np.ndarray] = {}
    for spec in cfg.languages:
        lang = spec.language_id
        if spec.templates is not None:
            templates = spec.templates.copy()
            home = argmax_rows(templates).astype(np.int64)
        else:
            home = _home_classes(cfg, lang, homes)
            rng = derive_rng(cfg.seed, "templates", lang)
            base = rng.normal(0.0, cfg.template_jitter, size=(spec.class_count, spec.class_count))
            base[np.arange(spec.class_count), np.arange(spec.class_count)] += cfg.sharpness
            templates = base[home]
        homes[lang] = home
        models[lang] = LanguageModel(
            spec=spec, templates=templates, home_class=home,
            inventory=_inventory(lang, home, spec.class_count),
        )
    return models


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def sample_latent_chain(rng: np.random.Generator, num_frames: int, n_latent: int, self_loop: float) -> np.ndarray:
    """Self-loop Markov chain; a jump lands uniformly on another phone."""
    if n_latent == 1:
        return np.zeros(num_frames, dtype=np.int64)
    start = rng.integers(n_latent)
    jump = rng.random(num_frames) >= self_loop
    jump[0] = False
    offsets = rng.integers(1, n_latent, size=num_frames) * jump
    return ((start + np.cumsum(offsets)) % n_latent).astype(np.int64)


def utterance_id(index: int) -> str:
    return f"utt{index:05d}"


def generate(cfg: SynthConfig) -> SynthCorpus:
    """Sample a corpus; bit-identical for a fixed config.

    Each utterance draws from generators keyed by its index, so utterances
    can be produced in any order.
    """
    cfg.validate()
    models = build_language_models(cfg)
    latent_inv = None
    if cfg.n_latent_phones >= 2:
        latent_inv = ClassInventory(
            language_id=LATENT_LANGUAGE, size=cfg.n_latent_phones,
            phone_of_class=tuple(latent_phone_names(cfg.n_latent_phones)), silence_phone=SILENCE_PHONE,
        )

    low, high = cfg.frames_per_utterance
    ids: List[str] = []
    latent: Dict[str, LabelSequence] = {}
    pgs: Dict[str, Dict[str, Posteriorgram]] = {lang: {} for lang in models}
    canonical: Dict[str, Dict[str, LabelSequence]] = {lang: {} for lang in models}

    for index in range(cfg.n_utterances):
        utt = utterance_id(index)
        rng = derive_rng(cfg.seed, "utterance", index)
        num_frames = int(rng.integers(low, high + 1))
        chain = sample_latent_chain(rng, num_frames, cfg.n_latent_phones, cfg.self_loop)
        ids.append(utt)
        latent[utt] = LabelSequence(utterance_id=utt, labels=chain, language_id=LATENT_LANGUAGE)

        for lang, model in models.items():
            logits = model.templates[chain]
            sigma = model.spec.noise_sigma
            if sigma > 0:
                logits = logits + derive_rng(cfg.seed, "noise", index, lang).normal(0.0, sigma, size=logits.shape)
            pgs[lang][utt] = ensure_valid(
                Posteriorgram(utterance_id=utt, language_id=lang, frames=_softmax(logits)), model.inventory
            )
            canonical[lang][utt] = LabelSequence(utterance_id=utt, labels=model.home_class[chain], language_id=lang)

    corpus = SynthCorpus(
        config=cfg, models=models, posteriorgrams=pgs, latent=latent, canonical=canonical,
        latent_inventory=latent_inv, utterance_ids=ids,
    )
    logger.info(
        f"Generated {len(ids)} utterances ({corpus.num_frames} frames) for {', '.join(models)}"
    )
    return corpus


def write_corpus(corpus: SynthCorpus, directory: Union[str, os.PathLike]) -> Path:
    """Write a corpus directory.

    Layout: ``<lang>/<utt>.pgm`` with canonical ``<lang>/<utt>.lab`` labels,
    ``latent/<utt>.lab``, ``<lang>.inv`` inventories, the generating config
    and a manifest.
    """
    root = Path(directory)
    root.mkdir(parents=True, exist_ok=True)
    for lang, model in corpus.models.items():
        lang_dir = root / lang
        lang_dir.mkdir(exist_ok=True)
        model.inventory.save(str(root / f"{lang}{INVENTORY_SUFFIX}"))
        for utt in corpus.utterance_ids:
            write_posteriorgram(corpus.posteriorgrams[lang][utt], pgm_path(lang_dir, utt))
            write_labels(corpus.canonical[lang][utt], label_path(lang_dir, utt))
    for utt in corpus.utterance_ids:
        write_labels(corpus.latent[utt], label_path(root / LATENT_DIR, utt))
    if corpus.latent_inventory is not None:
        corpus.latent_inventory.save(str(root / f"{LATENT_LANGUAGE}{INVENTORY_SUFFIX}"))

    with open(root / CONFIG_NAME, "w", encoding="utf-8") as f:
        yaml.safe_dump(corpus.config.to_dict(), f, default_flow_style=None, sort_keys=False)

    lines = ["languages " + " ".join(corpus.models)]
    lines.extend(
        f"utterance {utt} {corpus.latent[utt].num_frames} {LATENT_DIR}/{utt}{LABEL_SUFFIX}"
        for utt in corpus.utterance_ids
    )
    (root / MANIFEST_NAME).write_text("\n".join(lines) + "\n", encoding="utf-8")
    logger.success(f"Corpus written to {root}")
    return root


def _read_manifest(root: Path) -> Tuple[List[str], List[str]]:
    path = root / MANIFEST_NAME
    if not path.is_file():
        raise FileAccessError(f"No corpus manifest at {path}")
    languages: List[str] = []
    ids: List[str] = []
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        parts = line.split()
        if not parts:
            continue
        if parts[0] == "languages":
            languages = parts[1:]
        elif parts[0] == "utterance" and len(parts) == 4:
            ids.append(parts[1])
        else:
            raise FormatError(f"Manifest line {lineno} is malformed", code="bad-manifest")
    if not languages:
        raise FormatError("Manifest lists no languages", code="bad-manifest")
    return languages, ids


def read_corpus(directory: Union[str, os.PathLike]) -> SynthCorpus:
    """Load a corpus written by :func:`write_corpus`."""
    root = Path(directory)
    languages, ids = _read_manifest(root)
    cfg = SynthConfig.load(str(root / CONFIG_NAME))
    if cfg.language_ids != languages:
        raise FormatError("Manifest languages disagree with the stored config", code="bad-manifest")
    models = build_language_models(cfg)

    latent = {utt: read_labels(label_path(root / LATENT_DIR, utt), utt, LATENT_LANGUAGE) for utt in ids}
    pgs: Dict[str, Dict[str, Posteriorgram]] = {}
    canonical: Dict[str, Dict[str, LabelSequence]] = {}
    for lang in languages:
        pgs[lang], canonical[lang] = {}, {}
        for utt in ids:
            pg = read_posteriorgram(pgm_path(root / lang, utt))
            if pg.num_frames != latent[utt].num_frames:
                raise ValidationError(
                    f"'{lang}/{utt}' has {pg.num_frames} frames, latent labels have {latent[utt].num_frames}",
                    code="align-mismatch",
                )
            pgs[lang][utt] = pg
            canonical[lang][utt] = read_labels(label_path(root / lang, utt), utt, lang)

    latent_inv_path = root / f"{LATENT_LANGUAGE}{INVENTORY_SUFFIX}"
    return SynthCorpus(
        config=cfg, models=models, posteriorgrams=pgs, latent=latent, canonical=canonical,
        latent_inventory=ClassInventory.load(str(latent_inv_path)) if latent_inv_path.is_file() else None,
        utterance_ids=ids,
    )


@dataclass
class MappingOracle:
    """Lookup from a conditioning index to a target-class distribution."""
    source_lang: str
    target_lang: str
    condition: str
    table: np.ndarray

    def __call__(self, key: int) -> np.ndarray:
        return self.table[int(key)]

    def predict(self, keys: np.ndarray) -> np.ndarray:
        return self.table[np.asarray(keys, dtype=np.int64)]


def _argmax_draws(model: LanguageModel, latents: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    logits = model.templates[latents]
    if model.spec.noise_sigma > 0:
        logits = logits + rng.normal(0.0, model.spec.noise_sigma, size=logits.shape)
    return argmax_rows(logits)


def bayes_map_oracle(cfg: SynthConfig, source_lang: str, target_lang: str,
                     condition: str = ORACLE_SOURCE_ARGMAX,
                     n_samples: int = DEFAULT_ORACLE_SAMPLES) -> MappingOracle:
    """Conditional target-argmax distribution under the generative model.

    ``condition`` selects the key: the source argmax class, or the latent
    phone itself. Latent phones are uniformly distributed, which is the
    stationary law of the self-loop chain. Noise-free languages are
    enumerated exactly; otherwise ``n_samples`` Monte Carlo draws are used.
    Keys never observed fall back to the target marginal.
    """
    cfg.validate()
    if condition not in (ORACLE_SOURCE_ARGMAX, ORACLE_LATENT):
        raise ConfigurationError(f"Unknown oracle condition '{condition}'")
    models = build_language_models(cfg)
    for lang in (source_lang, target_lang):
        if lang not in models:
            raise ConfigurationError(f"Unknown language '{lang}'", code="missing-language")
    source, target = models[source_lang], models[target_lang]
    n = cfg.n_latent_phones
    rows = n if condition == ORACLE_LATENT else source.spec.class_count
    counts = np.zeros((rows, target.spec.class_count), dtype=np.float64)

    exact = target.spec.noise_sigma == 0 and (condition == ORACLE_LATENT or source.spec.noise_sigma == 0)
    if exact:
        latents = np.arange(n)
        keys = latents if condition == ORACLE_LATENT else argmax_rows(source.templates)
        np.add.at(counts, (keys, argmax_rows(target.templates)), 1.0 / n)
    else:
        rng = derive_rng(cfg.seed, "oracle", source_lang, target_lang)
        remaining = int(n_samples)
        while remaining > 0:
            size = min(remaining, _ORACLE_CHUNK)
            latents = rng.integers(n, size=size)
            keys = latents if condition == ORACLE_LATENT else _argmax_draws(source, latents, rng)
            np.add.at(counts, (keys, _argmax_draws(target, latents, rng)), 1.0)
            remaining -= size

    marginal = counts.sum(axis=0)
    marginal /= marginal.sum()
    totals = counts.sum(axis=1, keepdims=True)
    table = np.where(totals > 0, counts / np.where(totals > 0, totals, 1.0), marginal)
    logger.debug(f"Oracle {source_lang}->{target_lang} ({condition}, exact={exact}) built")
    return MappingOracle(source_lang=source_lang, target_lang=target_lang, condition=condition, table=table)


def oracle_posteriorgrams(corpus: SynthCorpus, oracle: MappingOracle) -> Dict[str, Posteriorgram]:
    """Oracle prediction for every utterance of the corpus."""
    for lang in (oracle.source_lang, oracle.target_lang):
        if lang not in corpus.posteriorgrams:
            raise ValidationError(f"Corpus has no language '{lang}'", code="missing-language")
    predicted = {}
    for utt in corpus.utterance_ids:
        if oracle.condition == ORACLE_LATENT:
            keys = corpus.latent[utt].labels
        else:
            keys = argmax_rows(corpus.posteriorgrams[oracle.source_lang][utt].frames)
        predicted[utt] = Posteriorgram(utterance_id=utt, language_id=oracle.target_lang, frames=oracle.predict(keys))
    return predicted


def oracle_accuracy(corpus: SynthCorpus, oracle: MappingOracle,
                    source_lang: Optional[str] = None, target_lang: Optional[str] = None) -> float:
    """Frame accuracy of the oracle against the target posteriorgram argmax."""
    if (source_lang or oracle.source_lang) != oracle.source_lang or \
            (target_lang or oracle.target_lang) != oracle.target_lang:
        raise ValidationError("Oracle was built for a different language pair", code="missing-language")
    correct, frames = 0, 0
    targets = corpus.posteriorgrams.get(oracle.target_lang, {})
    for utt, hypothesis in oracle_posteriorgrams(corpus, oracle).items():
        cmf, _ = frame_accuracy(targets[utt], hypothesis)
        correct += cmf
        frames += hypothesis.num_frames
    return correct / frames
