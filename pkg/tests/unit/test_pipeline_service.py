"""Unit tests for run-matrix configuration and orchestration."""

from pathlib import Path

import numpy as np
import pytest

from src.core.constants import FusionMode
from src.core.exceptions import ConfigurationError, RangeError
from src.models.fusion import SimilarityTable
from src.models.network import TrainingConfig
from src.models.pipeline import PipelineConfig
from src.models.synth import LanguageSpec, SynthConfig
from src.services import pipeline_service as ps
from src.services.synth_service import generate, read_corpus, write_corpus

CONFIG_DIR = Path(__file__).resolve().parents[2] / "config"


def small_synth(seed=5):
    return SynthConfig(
        languages=[
            LanguageSpec("tam", 8, noise_sigma=1.0),
            LanguageSpec("tel", 9, noise_sigma=1.0, derived_from="tam", similarity=0.9),
            LanguageSpec("jav", 10, noise_sigma=1.0, similarity=0.75),
        ],
        n_latent_phones=6, n_utterances=40, frames_per_utterance=(30, 50), seed=seed,
    )


def small_pipeline(output_dir, **overrides):
    settings = dict(
        name="small",
        target="tam",
        sources=["tel", "jav"],
        output_dir=str(output_dir),
        synth=small_synth(),
        training=TrainingConfig(hidden_dims=(16, 16, 16), learning_rate=0.05, batch_size=64,
                                max_epochs=4, patience=2, seed=5),
        dev_fraction=0.15,
        eval_fraction=0.25,
        topn=[1, 2],
        seed=5,
    )
    settings.update(overrides)
    return PipelineConfig(**settings)


class TestPipelineConfig:
    """Test cases for PipelineConfig."""

    def test_from_dict_resolves_paths(self, tmp_path):
        cfg = PipelineConfig.from_dict({
            "name": "demo",
            "target": "tam",
            "sources": ["tel"],
            "corpus_dir": "corpus",
            "seed": 9,
            "training": {"hidden_dims": [8, 8, 8]},
            "fusion": {"temperature": 0.5, "weights": {"target": 0.5, "tel": 0.5}},
        }, base_dir=str(tmp_path))

        assert cfg.corpus_dir == str(tmp_path / "corpus")
        assert cfg.output_dir == str(tmp_path / "runs" / "demo")
        assert cfg.training.seed == 9
        assert cfg.temperature == 0.5
        assert cfg.weights == {"target": 0.5, "tel": 0.5}

    def test_load_default_config(self):
        cfg = PipelineConfig.load(str(CONFIG_DIR / "pipeline_default.yaml"))

        assert cfg.target == "tam"
        assert cfg.sources == ["tel", "ceb", "jav"]
        assert cfg.synth.language_ids == ["tam", "tel", "ceb", "jav"]

    @pytest.mark.parametrize("overrides", [
        {"sources": []},
        {"sources": ["tam"]},
        {"sources": ["tel", "tel"]},
        {"corpus_dir": "somewhere"},
        {"synth": None},
        {"sources": ["tel", "ceb"]},
        {"eval_fraction": 0.0},
        {"weights": {"target": 0.5, "tel": 0.5}},
        {"topn": [0]},
    ])
    def test_invalid(self, tmp_path, overrides):
        with pytest.raises(ConfigurationError):
            small_pipeline(tmp_path, **overrides)

    def test_topn_beyond_target_classes(self, tmp_path):
        out = tmp_path / "run"

        with pytest.raises(RangeError) as exc:
            small_pipeline(out, topn=[1, 20])

        assert exc.value.code == "n-out-of-range"
        assert not out.exists()

    def test_source_subsets_order(self):
        assert ps.source_subsets(["a", "b", "c"]) == [
            ("a", "b", "c"), ("a", "b"), ("a", "c"), ("b", "c"), ("a",), ("b",), ("c",),
        ]


class TestWeightsFor:
    """Test cases for per-cell weight selection."""

    def test_explicit_multilingual_weights(self, tmp_path):
        service = ps.PipelineService(small_pipeline(tmp_path, weights={"target": 0.6, "tel": 0.3, "jav": 0.1}))
        sim = SimilarityTable()
        sim.add("tel", 1.0, 0.5)
        sim.add("jav", 1.0, 0.5)

        w = service.weights_for(sim, FusionMode.MULTILINGUAL, ("tel", "jav"))

        assert w.target_weight == 0.6
        assert w.source_weights == (("tel", 0.3), ("jav", 0.1))

    def test_derived_cross_lingual_subset(self, tmp_path):
        service = ps.PipelineService(small_pipeline(tmp_path))
        sim = SimilarityTable()
        sim.add("tel", 0.4, 0.8)
        sim.add("jav", 1.2, 0.6)

        w = service.weights_for(sim, FusionMode.CROSS_LINGUAL, ("jav",))

        assert w.source_weights == (("jav", 1.0),)


class TestRunMatrix:
    """Test cases for PipelineService.run_matrix."""

    @pytest.fixture
    def result_and_dir(self, tmp_path):
        out = tmp_path / "run"
        return ps.PipelineService(small_pipeline(out)).run_matrix(), out

    def test_rows(self, result_and_dir):
        result, _ = result_and_dir

        assert [row.key for row in result.rows] == [
            "mono", "multi-mf_tel+jav", "cross-mf_tel+jav", "cross-mf_tel", "cross-mf_jav",
        ]
        for row in result.rows:
            assert 0.0 <= row.report.accuracy <= 1.0
            assert row.report.top_n_accuracy[1] <= row.report.top_n_accuracy[2]

    def test_artifacts(self, result_and_dir):
        _, out = result_and_dir

        assert (out / "networks" / "tel-tam.mnw").is_file()
        assert (out / "networks" / "jav-tam.trace.csv").is_file()
        assert (out / "similarity.txt").is_file()
        assert (out / "cells" / "cross-mf_tel" / "weights.txt").read_text().startswith("mode cross-lingual")
        assert (out / "corpus" / "manifest.txt").is_file()
        for split in ("train", "dev", "eval"):
            assert any((out / "data" / split / "tam").glob("*.pgm"))
        header = (out / "results.csv").read_text().splitlines()[0]
        assert header == "system,tel,jav,frame_acc,top1,top2,avg_entropy,per"

    def test_table_marks_sources(self, result_and_dir):
        result, _ = result_and_dir

        headers, rows = ps.matrix_rows(result)

        assert headers[:3] == ["system", "tel", "jav"]
        assert rows[0][:3] == ["mono", "N", "N"]
        assert rows[3][:3] == ["cross-mf", "Y", "N"]
        assert "multi-mf" in ps.matrix_table(result)

    def test_deterministic(self, result_and_dir, tmp_path):
        _, out = result_and_dir
        rerun = tmp_path / "rerun"

        ps.PipelineService(small_pipeline(rerun)).run_matrix()

        assert (out / "results.csv").read_bytes() == (rerun / "results.csv").read_bytes()
        assert (out / "networks" / "jav-tam.mnw").read_bytes() == (rerun / "networks" / "jav-tam.mnw").read_bytes()

    def test_entropy_table(self, result_and_dir):
        _, out = result_and_dir
        corpus = read_corpus(out / "corpus")

        matrix = ps.entropy_matrix_from_networks(corpus, ps.load_networks(str(out / "networks")))
        table = ps.entropy_table(matrix, ["tam", "tel", "jav"])

        assert matrix[("tam", "tam")] is None
        assert np.isfinite(matrix[("tel", "tam")])
        assert ("tam", "tel") not in matrix
        assert table.splitlines()[2].split()[:2] == ["tam", "-"]

    def test_topn_checked_before_any_output(self, tmp_path):
        write_corpus(generate(small_synth()), tmp_path / "corpus")
        out = tmp_path / "run"
        cfg = small_pipeline(out, synth=None, corpus_dir=str(tmp_path / "corpus"), topn=[1, 20])

        with pytest.raises(RangeError) as exc:
            ps.PipelineService(cfg).run_matrix()

        assert exc.value.code == "n-out-of-range"
        assert not out.exists()
