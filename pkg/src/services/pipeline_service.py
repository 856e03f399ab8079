"""Run-matrix orchestration: train, map, weight, fuse and evaluate every configuration."""

import itertools
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from tabulate import tabulate

from ..core.constants import FusionMode, NETWORK_SUFFIX
from ..core.exceptions import ValidationError
from ..core.logger import get_logger
from ..core.utils import format_metric
from ..models.fusion import SimilarityTable, WeightVector
from ..models.network import MappingNetwork
from ..models.pipeline import CROSS_MF, MONO, MULTI_MF, MatrixResult, MatrixRow, PipelineConfig
from ..models.posteriorgram import Posteriorgram
from ..models.report import EvalReport
from ..models.synth import SynthCorpus
from . import metrics_service
from .fusion_service import derive_weights, fuse_posteriorgrams, similarity_from_reports
from .mapping_service import load_network, map_posteriorgram_set, save_network, split_train_dev, train
from .posterior_service import pgm_path, write_posteriorgram
from .synth_service import generate, read_corpus, write_corpus

PhoneSequences = Dict[str, List[str]]


def network_filename(source_lang: str, target_lang: str) -> str:
    return f"{source_lang}-{target_lang}{NETWORK_SUFFIX}"


def source_subsets(sources: Sequence[str]) -> List[Tuple[str, ...]]:
    """Every non-empty subset, largest first, in declaration order within a size."""
    subsets: List[Tuple[str, ...]] = []
    for size in range(len(sources), 0, -1):
        subsets.extend(itertools.combinations(sources, size))
    return subsets


def reference_phone_sequences(corpus: SynthCorpus, target: str, ids: Sequence[str]) -> PhoneSequences:
    """Latent phone sequences, or the canonical target decoding without a latent inventory."""
    if corpus.latent_inventory is not None:
        return {utt: metrics_service.decode_classes(corpus.latent[utt].labels, corpus.latent_inventory)
                for utt in ids}
    inv = corpus.inventory(target)
    return {utt: metrics_service.decode_classes(corpus.canonical[target][utt].labels, inv) for utt in ids}


def write_split(corpus: SynthCorpus, root: Path, languages: Sequence[str]) -> None:
    """Write one split's posteriorgrams as ``<root>/<lang>/<utt>.pgm``."""
    for lang in languages:
        for utt in corpus.utterance_ids:
            write_posteriorgram(corpus.posteriorgrams[lang][utt], pgm_path(root / lang, utt))


class PipelineService:
    """Runs the multilingual and cross-lingual fusion grid for one target language."""

    def __init__(self, config: PipelineConfig):
        self.config = config
        self.output_dir = Path(config.output_dir)
        self.logger = get_logger("service.pipeline")

    def load_corpus(self) -> SynthCorpus:
        cfg = self.config
        if cfg.synth is not None:
            corpus = generate(cfg.synth)
            write_corpus(corpus, self.output_dir / "corpus")
            return corpus
        corpus = read_corpus(cfg.corpus_dir)
        missing = [lang for lang in cfg.languages if lang not in corpus.posteriorgrams]
        if missing:
            raise ValidationError(f"Corpus lacks language(s): {', '.join(missing)}", code="missing-language")
        return corpus

    def split(self, corpus: SynthCorpus) -> Tuple[SynthCorpus, SynthCorpus, SynthCorpus]:
        """Disjoint train, dev and eval utterance subsets."""
        rest, eval_ids = split_train_dev(corpus.utterance_ids, self.config.eval_fraction, self.config.seed)
        train_ids, dev_ids = split_train_dev(rest, self.config.dev_fraction, self.config.seed + 1)
        self.logger.info(f"Split {len(train_ids)} train / {len(dev_ids)} dev / {len(eval_ids)} eval utterances")
        return corpus.subset(train_ids), corpus.subset(dev_ids), corpus.subset(eval_ids)

    def train_networks(self, train_set: SynthCorpus, dev_set: SynthCorpus) -> Dict[str, MappingNetwork]:
        """One mapping network per source, saved with its training trace."""
        cfg = self.config
        networks: Dict[str, MappingNetwork] = {}
        net_dir = self.output_dir / "networks"
        net_dir.mkdir(parents=True, exist_ok=True)
        for source in cfg.sources:
            self.logger.step(f"Training {source} -> {cfg.target}")
            net, trace = train(
                train_set.posteriorgrams[source], train_set.posteriorgrams[cfg.target], cfg.training,
                dev_set.posteriorgrams[source], dev_set.posteriorgrams[cfg.target],
                target_inventory=train_set.inventory(cfg.target),
            )
            path = net_dir / network_filename(source, cfg.target)
            save_network(net, path)
            path.with_suffix(".trace.csv").write_text(trace.to_csv(), encoding="utf-8")
            networks[source] = net
        return networks

    def similarity(self, dev_set: SynthCorpus, mapped_dev: Mapping[str, Mapping[str, Posteriorgram]]) -> SimilarityTable:
        """Entropy and top-1 accuracy of each mapping network on the dev set."""
        cfg = self.config
        inv = dev_set.inventory(cfg.target)
        reports = {
            source: metrics_service.build_corpus_report(
                dev_set.posteriorgrams[cfg.target], mapped_dev[source], inv, [1],
                phones=reference_phone_sequences(dev_set, cfg.target, dev_set.utterance_ids),
            )
            for source in cfg.sources
        }
        table = similarity_from_reports(reports)
        table.save(str(self.output_dir / "similarity.txt"))
        return table

    def weights_for(self, sim: SimilarityTable, mode: FusionMode, sources: Tuple[str, ...]) -> WeightVector:
        cfg = self.config
        if mode == FusionMode.MULTILINGUAL and cfg.weights is not None:
            return WeightVector(
                mode=mode, target_weight=cfg.weights["target"],
                source_weights=tuple((s, cfg.weights[s]) for s in sources),
            ).require_valid()
        subset = SimilarityTable()
        for source in sources:
            entry = sim.entries[source]
            subset.add(source, entry.avg_entropy, entry.top1_accuracy)
        return derive_weights(subset, mode, temperature=cfg.temperature, target_share=cfg.target_share)

    def _evaluate(self, eval_set: SynthCorpus, hypotheses: Mapping[str, Posteriorgram],
                  phones: PhoneSequences) -> EvalReport:
        target = self.config.target
        return metrics_service.build_corpus_report(
            eval_set.canonical[target], hypotheses, eval_set.inventory(target), self.config.topn, phones=phones,
        )

    def _fuse_cell(self, key: str, eval_set: SynthCorpus, mapped_eval: Mapping[str, Mapping[str, Posteriorgram]],
                   w: WeightVector) -> Dict[str, Posteriorgram]:
        cell_dir = self.output_dir / "cells" / key
        cell_dir.mkdir(parents=True, exist_ok=True)
        (cell_dir / "weights.txt").write_text(w.to_text(), encoding="utf-8")
        target = self.config.target
        fused = {}
        for utt in eval_set.utterance_ids:
            target_pg = eval_set.posteriorgrams[target][utt] if w.mode == FusionMode.MULTILINGUAL else None
            fused[utt] = fuse_posteriorgrams(target_pg, [mapped_eval[s][utt] for s in w.languages], w)
            write_posteriorgram(fused[utt], pgm_path(cell_dir, utt))
        return fused

    def run_matrix(self) -> MatrixResult:
        """Evaluate mono, multi-mf, and cross-mf over every source subset."""
        cfg = self.config
        self.logger.info(f"Run matrix '{cfg.name}': target {cfg.target}, sources {', '.join(cfg.sources)}")

        corpus = self.load_corpus()
        cfg.check_topn(corpus.inventory(cfg.target).size)
        self.output_dir.mkdir(parents=True, exist_ok=True)
        train_set, dev_set, eval_set = self.split(corpus)
        for name, subset in (("train", train_set), ("dev", dev_set), ("eval", eval_set)):
            write_split(subset, self.output_dir / "data" / name, cfg.languages)

        networks = self.train_networks(train_set, dev_set)
        mapped_dev = {s: map_posteriorgram_set(networks[s], dev_set.posteriorgrams[s]) for s in cfg.sources}
        mapped_eval = {s: map_posteriorgram_set(networks[s], eval_set.posteriorgrams[s]) for s in cfg.sources}
        sim = self.similarity(dev_set, mapped_dev)

        phones = reference_phone_sequences(eval_set, cfg.target, eval_set.utterance_ids)
        result = MatrixResult(target=cfg.target, sources=list(cfg.sources), topn=list(cfg.topn))
        result.rows.append(MatrixRow(MONO, None, (), self._evaluate(eval_set, eval_set.posteriorgrams[cfg.target], phones)))

        cells = [(MULTI_MF, FusionMode.MULTILINGUAL, tuple(cfg.sources))]
        cells.extend((CROSS_MF, FusionMode.CROSS_LINGUAL, subset) for subset in source_subsets(cfg.sources))
        for system, mode, sources in cells:
            w = self.weights_for(sim, mode, sources)
            row = MatrixRow(system, mode, sources, None)
            fused = self._fuse_cell(row.key, eval_set, mapped_eval, w)
            row.report = self._evaluate(eval_set, fused, phones)
            result.rows.append(row)
            self.logger.info(
                f"{row.key}: frame_acc={format_metric(row.report.accuracy)} per={format_metric(row.report.per)}"
            )

        (self.output_dir / "results.csv").write_text(matrix_csv(result), encoding="utf-8")
        self.logger.success(f"Run matrix written to {self.output_dir}")
        return result


def matrix_rows(result: MatrixResult, with_topn: bool = False) -> Tuple[List[str], List[List[str]]]:
    """Headers and cells with a Y/N column per source language."""
    headers = ["system", *result.sources, "frame_acc"]
    if with_topn:
        headers.extend(f"top{n}" for n in result.topn)
        headers.append("avg_entropy")
    headers.append("per")
    rows = []
    for row in result.rows:
        cells = [row.system]
        cells.extend("Y" if s in row.sources else "N" for s in result.sources)
        cells.append(format_metric(row.report.accuracy))
        if with_topn:
            cells.extend(format_metric(row.report.top_n_accuracy[n]) for n in result.topn)
            cells.append(format_metric(row.report.avg_entropy))
        cells.append(format_metric(row.report.per))
        rows.append(cells)
    return headers, rows


def matrix_table(result: MatrixResult) -> str:
    headers, rows = matrix_rows(result)
    return tabulate(rows, headers=headers, tablefmt="simple", disable_numparse=True)


def matrix_csv(result: MatrixResult) -> str:
    headers, rows = matrix_rows(result, with_topn=True)
    return "".join(",".join(cells) + "\n" for cells in [headers, *rows])


def load_networks(directory: str) -> Dict[Tuple[str, str], MappingNetwork]:
    """Every ``*.mnw`` in ``directory`` keyed by (source, target)."""
    networks = {}
    for path in sorted(Path(directory).glob(f"*{NETWORK_SUFFIX}")):
        net = load_network(path)
        networks[(net.source_lang, net.target_lang)] = net
    if not networks:
        raise ValidationError(f"No mapping networks in {directory}", code="empty-set")
    return networks


def entropy_matrix_from_networks(corpus: SynthCorpus, networks: Mapping[Tuple[str, str], MappingNetwork],
                                 languages: Optional[Sequence[str]] = None) -> Dict[Tuple[str, str], Optional[float]]:
    """Average mapped entropy of each network over the corpus's source posteriorgrams."""
    languages = list(languages or corpus.config.language_ids)
    mapped = {
        pair: map_posteriorgram_set(net, corpus.posteriorgrams[pair[0]])
        for pair, net in networks.items()
        if pair[0] in corpus.posteriorgrams
    }
    return metrics_service.entropy_matrix(mapped, languages)


def entropy_table(matrix: Mapping[Tuple[str, str], Optional[float]], languages: Sequence[str]) -> str:
    """Target rows by source columns; ``-`` marks self pairs and missing networks."""
    rows = []
    for target in languages:
        cells = [target]
        for source in languages:
            value = matrix.get((source, target))
            cells.append("-" if value is None else format_metric(value))
        rows.append(cells)
    return tabulate(rows, headers=["target \\ source", *languages], tablefmt="simple", disable_numparse=True)
