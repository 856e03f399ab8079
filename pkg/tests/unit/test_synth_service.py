"""Unit tests for the synthetic corpus generator and Bayes oracles."""

import numpy as np
import pytest

from src.core.constants import UNUSED_PHONE
from src.core.exceptions import ConfigurationError, ValidationError
from src.models.posteriorgram import Posteriorgram
from src.models.synth import LanguageSpec, SynthConfig
from src.services import metrics_service, posterior_service
from src.services import synth_service as ss


def two_language_config(sigma=0.0, **overrides):
    settings = dict(
        languages=[
            LanguageSpec("aa", class_count=8, noise_sigma=sigma),
            LanguageSpec("bb", class_count=10, noise_sigma=sigma),
        ],
        n_latent_phones=8,
        n_utterances=20,
        frames_per_utterance=(40, 60),
        seed=21,
    )
    settings.update(overrides)
    return SynthConfig(**settings)


class TestSynthConfig:
    """Test cases for SynthConfig validation and loading."""

    def test_from_dict(self):
        cfg = SynthConfig.from_dict({
            "seed": 3,
            "languages": [{"id": "tam", "class_count": 6}, {"id": "tel", "class_count": 5, "derived_from": "tam"}],
        })

        assert cfg.language_ids == ["tam", "tel"]
        assert cfg.language("tel").derived_from == "tam"

    @pytest.mark.parametrize("overrides", [
        {"self_loop": 1.0},
        {"frames_per_utterance": (10, 5)},
        {"languages": []},
        {"languages": [LanguageSpec("aa", 4), LanguageSpec("aa", 4)]},
        {"languages": [LanguageSpec("aa", 1)]},
        {"languages": [LanguageSpec("aa", 4, noise_sigma=-1.0)]},
        {"languages": [LanguageSpec("aa", 4, similarity=1.5)]},
        {"languages": [LanguageSpec("aa", 4, derived_from="bb"), LanguageSpec("bb", 4)]},
        {"languages": [LanguageSpec("latent", 4)]},
        {"languages": [LanguageSpec("aa", 4, templates=np.zeros((3, 4)))]},
    ])
    def test_invalid(self, overrides):
        with pytest.raises(ConfigurationError):
            two_language_config(**overrides)

    def test_unknown_language(self):
        with pytest.raises(ConfigurationError) as exc:
            two_language_config().language("zz")
        assert exc.value.code == "missing-language"


class TestGenerate:
    """Test cases for corpus generation."""

    def test_noise_free_rows_depend_only_on_latent(self):
        corpus = ss.generate(two_language_config(sigma=0.0))

        for lang in ("aa", "bb"):
            seen = {}
            for utt in corpus.utterance_ids:
                frames = corpus.posteriorgrams[lang][utt].frames
                for latent, row in zip(corpus.latent[utt].labels, frames):
                    expected = seen.setdefault(int(latent), row)
                    assert np.array_equal(row, expected)

    def test_deterministic(self):
        first = ss.generate(two_language_config(sigma=1.0))
        second = ss.generate(two_language_config(sigma=1.0))

        for lang in ("aa", "bb"):
            for utt in first.utterance_ids:
                assert first.posteriorgrams[lang][utt].same_as(second.posteriorgrams[lang][utt])

    def test_posteriorgrams_valid_and_aligned(self):
        corpus = ss.generate(two_language_config(sigma=1.5))

        for utt in corpus.utterance_ids:
            frames = corpus.latent[utt].num_frames
            assert 40 <= frames <= 60
            for lang in ("aa", "bb"):
                pg = corpus.posteriorgrams[lang][utt]
                assert pg.num_frames == frames
                assert posterior_service.validate_posteriorgram(pg, corpus.inventory(lang)).valid

    def test_mean_run_length(self, rng):
        chain = ss.sample_latent_chain(rng, 10000, 12, 0.9)

        runs = 1 + int(np.count_nonzero(np.diff(chain)))
        sigma = np.sqrt(0.9) / 0.1 / np.sqrt(runs)
        assert abs(10000 / runs - 10.0) <= 5 * sigma

    def test_single_latent_phone(self):
        corpus = ss.generate(two_language_config(n_latent_phones=1))

        assert corpus.latent_inventory is None
        assert all(not labels.labels.any() for labels in corpus.latent.values())

    def test_similarity_merges_latent_phones(self):
        cfg = SynthConfig(
            languages=[LanguageSpec("tam", 16), LanguageSpec("ceb", 24, similarity=0.75)],
            n_latent_phones=12, n_utterances=1, seed=7,
        )

        models = ss.build_language_models(cfg)

        assert len(set(models["tam"].home_class.tolist())) == 12
        assert len(set(models["ceb"].home_class.tolist())) == 12 - 3

    def test_derived_language_inherits_merges(self):
        cfg = SynthConfig(
            languages=[LanguageSpec("tam", 16, similarity=0.5), LanguageSpec("tel", 20, derived_from="tam")],
            n_latent_phones=12, n_utterances=1, seed=7,
        )

        models = ss.build_language_models(cfg)

        parent, child = models["tam"].home_class, models["tel"].home_class
        for a in range(12):
            for b in range(12):
                if parent[a] == parent[b]:
                    assert child[a] == child[b]

    def test_merged_phones_share_template_rows(self):
        cfg = SynthConfig(languages=[LanguageSpec("ceb", 24, similarity=0.5)], n_latent_phones=12, seed=2)

        model = ss.build_language_models(cfg)["ceb"]

        for a in range(12):
            for b in range(12):
                if model.home_class[a] == model.home_class[b]:
                    assert np.array_equal(model.templates[a], model.templates[b])

    def test_inventory_names_latent_phones(self):
        model = ss.build_language_models(two_language_config())["aa"]

        names = ss.latent_phone_names(8)
        for latent, cls in enumerate(model.home_class):
            assert model.inventory.phone(int(cls)) == names[latent]

    def test_unused_classes_are_not_silence(self):
        model = ss.build_language_models(two_language_config())["bb"]

        unused = sorted(set(range(10)) - {int(c) for c in model.home_class})
        assert unused
        for cls in unused:
            assert model.inventory.phone(cls) == UNUSED_PHONE
            assert model.inventory.phone(cls) != model.inventory.silence_phone
        assert UNUSED_PHONE not in ss.latent_phone_names(8)

    def test_unused_class_argmax_counts_as_phone_error(self):
        model = ss.build_language_models(two_language_config())["bb"]
        unused = next(c for c in range(10) if c not in set(model.home_class.tolist()))
        frames = np.full((3, 10), 0.01)
        frames[:, unused] = 0.91

        phones = metrics_service.greedy_decode(Posteriorgram("utt00000", "bb", frames), model.inventory)

        assert phones == [UNUSED_PHONE]


class TestCorpusStorage:
    """Test cases for corpus directories."""

    def test_round_trip(self, tmp_path):
        corpus = ss.generate(two_language_config(sigma=0.7))
        ss.write_corpus(corpus, tmp_path / "corpus")

        loaded = ss.read_corpus(tmp_path / "corpus")

        assert loaded.utterance_ids == corpus.utterance_ids
        assert loaded.config.to_dict() == corpus.config.to_dict()
        assert loaded.latent_inventory == corpus.latent_inventory
        for lang in ("aa", "bb"):
            assert loaded.inventory(lang) == corpus.inventory(lang)
            for utt in corpus.utterance_ids:
                assert loaded.posteriorgrams[lang][utt].same_as(corpus.posteriorgrams[lang][utt])
                assert np.array_equal(loaded.canonical[lang][utt].labels, corpus.canonical[lang][utt].labels)
        for utt in corpus.utterance_ids:
            assert np.array_equal(loaded.latent[utt].labels, corpus.latent[utt].labels)

    def test_manifest_layout(self, tmp_path):
        corpus = ss.generate(two_language_config(n_utterances=2))
        root = ss.write_corpus(corpus, tmp_path)

        lines = (root / ss.MANIFEST_NAME).read_text().splitlines()

        assert lines[0] == "languages aa bb"
        assert lines[1].startswith("utterance utt00000 ")
        assert lines[1].endswith(" latent/utt00000.lab")

    def test_subset(self):
        corpus = ss.generate(two_language_config())

        part = corpus.subset(["utt00003", "utt00001"])

        assert part.utterance_ids == ["utt00001", "utt00003"]
        assert list(part.posteriorgrams["bb"]) == ["utt00001", "utt00003"]


class TestBayesOracle:
    """Test cases for the Bayes mapping oracles."""

    def test_identity_lookup(self):
        templates = np.eye(4) * 4.0
        cfg = SynthConfig(
            languages=[LanguageSpec("aa", 4, noise_sigma=0.0, templates=templates),
                       LanguageSpec("bb", 4, noise_sigma=0.0, templates=templates)],
            n_latent_phones=4, n_utterances=5, seed=1,
        )

        oracle = ss.bayes_map_oracle(cfg, "aa", "bb")

        assert np.array_equal(oracle.table, np.eye(4))
        assert ss.oracle_accuracy(ss.generate(cfg), oracle, "aa", "bb") == 1.0

    def test_confusable_source_splits_evenly(self):
        cfg = SynthConfig(
            languages=[LanguageSpec("aa", 2, noise_sigma=0.0, templates=np.array([[1.0, 0.0], [1.0, 0.0]])),
                       LanguageSpec("bb", 2, noise_sigma=0.0, templates=np.array([[1.0, 0.0], [0.0, 1.0]]))],
            n_latent_phones=2, seed=1,
        )

        oracle = ss.bayes_map_oracle(cfg, "aa", "bb")

        assert np.allclose(oracle(0), [0.5, 0.5])
        # class 1 is never the source argmax and falls back to the marginal
        assert np.allclose(oracle(1), [0.5, 0.5])

    def test_single_latent_accuracy(self):
        cfg = two_language_config(sigma=0.0, n_latent_phones=1)

        oracle = ss.bayes_map_oracle(cfg, "aa", "bb")

        assert ss.oracle_accuracy(ss.generate(cfg), oracle) == 1.0

    def test_accuracy_non_increasing_with_noise(self):
        accuracies = []
        for sigma in (0.0, 0.5, 1.0, 2.0):
            cfg = two_language_config(sigma=sigma, n_utterances=100)
            oracle = ss.bayes_map_oracle(cfg, "aa", "bb", n_samples=100_000)
            accuracies.append(ss.oracle_accuracy(ss.generate(cfg), oracle))

        assert accuracies[0] == 1.0
        assert all(b <= a + 0.005 for a, b in zip(accuracies, accuracies[1:]))

    def test_latent_condition_is_a_ceiling(self):
        cfg = two_language_config(sigma=1.5, n_utterances=100)
        corpus = ss.generate(cfg)

        by_source = ss.oracle_accuracy(corpus, ss.bayes_map_oracle(cfg, "aa", "bb"))
        by_latent = ss.oracle_accuracy(corpus, ss.bayes_map_oracle(cfg, "aa", "bb", condition=ss.ORACLE_LATENT))

        assert by_latent >= by_source - 0.01

    def test_monte_carlo_is_seeded(self):
        cfg = two_language_config(sigma=1.0)

        first = ss.bayes_map_oracle(cfg, "aa", "bb", n_samples=30_000)
        second = ss.bayes_map_oracle(cfg, "aa", "bb", n_samples=30_000)

        assert np.array_equal(first.table, second.table)
        assert np.allclose(first.table.sum(axis=1), 1.0)

    def test_errors(self):
        cfg = two_language_config()

        with pytest.raises(ConfigurationError):
            ss.bayes_map_oracle(cfg, "aa", "zz")
        with pytest.raises(ConfigurationError):
            ss.bayes_map_oracle(cfg, "aa", "bb", condition="posterior")
        with pytest.raises(ValidationError):
            ss.oracle_accuracy(ss.generate(cfg), ss.bayes_map_oracle(cfg, "aa", "bb"), "bb", "aa")
