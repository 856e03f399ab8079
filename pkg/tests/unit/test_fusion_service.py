"""Unit tests for weighted fusion and weight derivation."""

import numpy as np
import pytest

from src.core.constants import FusionMode
from src.core.exceptions import AlignmentError, FormatError, RangeError, WeightError
from src.models.fusion import SimilarityTable, WeightVector
from src.services import fusion_service as fs
from tests.conftest import make_pg, random_rows

MULTI = FusionMode.MULTILINGUAL
CROSS = FusionMode.CROSS_LINGUAL


def random_weights(rng, k, mode):
    if mode == MULTI:
        w = rng.dirichlet(np.ones(k + 1))
        target, sources = float(w[0]), w[1:]
    else:
        target, sources = 0.0, rng.dirichlet(np.ones(k))
    # absorb rounding so the weights sum to exactly one within tolerance
    sources = list(sources[:-1]) + [1.0 - target - float(np.sum(sources[:-1]))]
    return WeightVector(mode=mode, target_weight=target,
                        source_weights=tuple((f"s{i}", w) for i, w in enumerate(sources)))


class TestWeightVector:
    """Test cases for weight validation."""

    def test_multilingual_valid(self):
        w = WeightVector(mode=MULTI, target_weight=0.4, source_weights=(("a", 0.3), ("b", 0.3)))

        assert fs.validate_weights(w).valid

    def test_sum_violation(self):
        w = WeightVector(mode=MULTI, target_weight=0.0, source_weights=(("a", 0.5), ("b", 0.6)))

        outcome = fs.validate_weights(w)

        assert not outcome.valid
        assert "sum" in outcome.message

    def test_cross_lingual_target_weight(self):
        w = WeightVector(mode=CROSS, target_weight=0.1, source_weights=(("a", 0.9),))

        outcome = fs.validate_weights(w)

        assert not outcome.valid
        assert "cross-lingual" in outcome.message

    def test_negative_and_duplicate(self):
        w = WeightVector(mode=CROSS, target_weight=0.0, source_weights=(("a", 1.5), ("a", -0.5)))

        failures = fs.validate_weights(w).failures

        assert any("distinct" in f for f in failures)
        assert any("outside [0, 1]" in f for f in failures)

    def test_text_round_trip(self):
        w = WeightVector(mode=MULTI, target_weight=0.5, source_weights=(("tel", 0.3), ("ceb", 0.2)))

        assert WeightVector.from_text(w.to_text()) == w

    def test_text_cross_mode_without_target(self):
        w = WeightVector.from_text("mode cross\ntel 0.1\nceb 0.2\njav 0.7\n")

        assert w.target_weight == 0.0
        assert w.languages == ["tel", "ceb", "jav"]

    def test_text_decimal_weights_sum_exactly(self):
        w = WeightVector.from_text("mode multilingual\ntarget 0.1\na 0.2\nb 0.7\n")

        assert w.check().valid

    def test_text_errors(self):
        with pytest.raises(FormatError):
            WeightVector.from_text("tel 1.0\n")
        with pytest.raises(FormatError):
            WeightVector.from_text("mode cross\ntel one\n")
        with pytest.raises(WeightError):
            WeightVector.from_text("mode cross\ntel 0.4\n")


class TestFuseFrame:
    """Test cases for fuse_frame."""

    def test_target_endpoint(self):
        target = np.array([0.1, 0.7, 0.2])
        w = WeightVector(mode=MULTI, target_weight=1.0, source_weights=(("a", 0.0), ("b", 0.0)))

        out = fs.fuse_frame(target, [[0.3, 0.3, 0.4], [1.0, 0.0, 0.0]], w)

        assert np.array_equal(out, target)

    def test_cross_lingual_midpoint(self):
        w = WeightVector(mode=CROSS, target_weight=0.0, source_weights=(("a", 0.5), ("b", 0.5)))

        assert np.allclose(fs.fuse_frame(None, [[1.0, 0.0], [0.0, 1.0]], w), [0.5, 0.5])

    def test_multilingual_hand_example(self):
        w = WeightVector(mode=MULTI, target_weight=0.5, source_weights=(("a", 0.5),))

        out = fs.fuse_frame([0.8, 0.2], [[0.4, 0.6]], w)

        assert np.allclose(out, [0.6, 0.4], atol=1e-12)

    def test_mode_mismatch(self):
        cross = WeightVector(mode=CROSS, target_weight=0.0, source_weights=(("a", 1.0),))
        multi = WeightVector(mode=MULTI, target_weight=0.5, source_weights=(("a", 0.5),))

        with pytest.raises(WeightError):
            fs.fuse_frame([0.5, 0.5], [[0.5, 0.5]], cross)
        with pytest.raises(WeightError):
            fs.fuse_frame(None, [[0.5, 0.5]], multi)

    def test_count_mismatch(self):
        w = WeightVector(mode=CROSS, target_weight=0.0, source_weights=(("a", 0.5), ("b", 0.5)))

        with pytest.raises(WeightError) as exc:
            fs.fuse_frame(None, [[0.5, 0.5]], w)
        assert exc.value.code == "mode-mismatch"


class TestFusionProperties:
    """Randomized properties of frame fusion."""

    @pytest.mark.parametrize("mode", [MULTI, CROSS])
    def test_output_is_distribution(self, rng, mode):
        for _ in range(1000):
            k, d = int(rng.integers(1, 5)), int(rng.integers(2, 10))
            w = random_weights(rng, k, mode)
            target = random_rows(rng, 1, d)[0] if mode == MULTI else None
            out = fs.fuse_frame(target, random_rows(rng, k, d), w)
            assert np.all(out >= 0)
            assert abs(out.sum() - 1.0) <= 1e-6

    def test_source_endpoint(self, rng):
        for _ in range(1000):
            k, d = int(rng.integers(1, 5)), int(rng.integers(2, 10))
            j = int(rng.integers(k))
            w = WeightVector(mode=CROSS, target_weight=0.0,
                             source_weights=tuple((f"s{i}", 1.0 if i == j else 0.0) for i in range(k)))
            rows = random_rows(rng, k, d)
            assert np.array_equal(fs.fuse_frame(None, rows, w), rows[j])

    def test_permutation_invariance(self, rng):
        for _ in range(1000):
            k, d = int(rng.integers(2, 5)), int(rng.integers(2, 10))
            w = random_weights(rng, k, CROSS)
            rows = random_rows(rng, k, d)
            perm = rng.permutation(k)
            permuted = WeightVector(mode=CROSS, target_weight=0.0,
                                    source_weights=tuple(w.source_weights[i] for i in perm))
            assert np.allclose(fs.fuse_frame(None, rows, w), fs.fuse_frame(None, rows[perm], permuted),
                               atol=1e-12)

    def test_shared_argmax_is_kept(self, rng):
        for _ in range(1000):
            k, d = int(rng.integers(1, 5)), int(rng.integers(2, 10))
            c = int(rng.integers(d))
            rows = random_rows(rng, k + 1, d)
            rows[:, c] += 1.0
            rows /= rows.sum(axis=1, keepdims=True)
            out = fs.fuse_frame(rows[0], rows[1:], random_weights(rng, k, MULTI))
            assert int(np.argmax(out)) == c


class TestFusePosteriorgrams:
    """Test cases for fuse_posteriorgrams."""

    def test_single_source_identity(self, rng):
        pg = make_pg(random_rows(rng, 100, 5), lang="tam")
        w = WeightVector(mode=CROSS, target_weight=0.0, source_weights=(("tel", 1.0),))

        fused = fs.fuse_posteriorgrams(None, [pg], w)

        assert fused.same_as(pg)

    def test_self_fusion(self, rng):
        pg = make_pg(random_rows(rng, 30, 4))
        w = WeightVector(mode=MULTI, target_weight=0.2, source_weights=(("a", 0.5), ("b", 0.3)))

        fused = fs.fuse_posteriorgrams(pg, [pg, pg], w)

        assert np.allclose(fused.frames, pg.frames, atol=1e-6)

    def test_rows_normalized(self, rng):
        w = random_weights(rng, 3, MULTI)
        target = make_pg(random_rows(rng, 100, 6))
        mapped = [make_pg(random_rows(rng, 100, 6)) for _ in range(3)]

        fused = fs.fuse_posteriorgrams(target, mapped, w)

        assert fused.num_frames == 100
        assert np.allclose(fused.as_float64().sum(axis=1), 1.0, atol=1e-5)

    def test_misaligned_inputs(self, rng):
        w = WeightVector(mode=CROSS, target_weight=0.0, source_weights=(("a", 0.5), ("b", 0.5)))

        with pytest.raises(AlignmentError):
            fs.fuse_posteriorgrams(None, [make_pg(random_rows(rng, 10, 3)), make_pg(random_rows(rng, 9, 3))], w)


class TestDeriveWeights:
    """Test cases for derive_weights."""

    @staticmethod
    def table(rows):
        sim = SimilarityTable()
        for lang, entropy, accuracy in rows:
            sim.add(lang, entropy, accuracy)
        return sim

    def test_symmetric_sources(self):
        w = fs.derive_weights(self.table([("a", 1.0, 0.6), ("b", 1.0, 0.6)]), CROSS)

        assert w.weights == [0.5, 0.5]

    def test_hand_example(self):
        w = fs.derive_weights(self.table([("a", 1.0, 0.5), ("b", 2.0, 0.5)]), CROSS, temperature=1.0)

        assert w.weight_of("a") == pytest.approx(np.exp(-1) / (np.exp(-1) + np.exp(-2)), abs=1e-12)
        assert w.weight_of("b") == pytest.approx(0.2689414, abs=1e-6)

    def test_lowest_entropy_wins(self):
        w = fs.derive_weights(self.table([("tam", 1.214, 0.5), ("tel", 1.235, 0.5), ("jav", 1.098, 0.5)]), CROSS)

        assert max(w.source_weights, key=lambda item: item[1])[0] == "jav"
        assert w.languages == ["tam", "tel", "jav"]

    def test_multilingual_share(self):
        w = fs.derive_weights(self.table([("a", 0.5, 0.8), ("b", 0.9, 0.4)]), MULTI, target_share=0.3)

        assert w.target_weight == 0.3
        assert sum(w.weights) == pytest.approx(0.7, abs=1e-12)
        assert w.check().valid

    def test_extreme_entropies_stay_finite(self):
        w = fs.derive_weights(self.table([("a", 400.0, 0.5), ("b", 0.0, 0.5)]), CROSS, temperature=0.25)

        assert w.weights == pytest.approx([0.0, 1.0])

    def test_zero_accuracy_source_gets_zero(self):
        w = fs.derive_weights(self.table([("a", 1.0, 0.0), ("b", 1.0, 0.5)]), CROSS)

        assert w.weight_of("a") == 0.0

    def test_errors(self):
        with pytest.raises(WeightError):
            fs.derive_weights(SimilarityTable(), CROSS)
        with pytest.raises(RangeError):
            fs.derive_weights(self.table([("a", 1.0, 0.5)]), CROSS, temperature=0.0)
        with pytest.raises(WeightError):
            fs.derive_weights(self.table([("a", 1.0, 0.0)]), CROSS)
        with pytest.raises(WeightError):
            fs.derive_weights(self.table([("a", 1.0, 0.5)]), CROSS, include_target=True)

    def test_similarity_table_text(self):
        sim = self.table([("tel", 1.235, 0.52), ("jav", 1.098, 0.61)])

        parsed = SimilarityTable.from_text(sim.to_text())

        assert list(parsed.entries) == ["tel", "jav"]
        assert parsed.entries["jav"].avg_entropy == 1.098
