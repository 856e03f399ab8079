"""Unit tests for posteriorgram validation and PGM1 I/O."""

import io
import struct

import numpy as np
import pytest

from src.core.exceptions import DimensionMismatchError, FileAccessError, FormatError, ValidationError
from src.models.inventory import ClassInventory
from src.models.posteriorgram import LabelSequence, Posteriorgram
from src.services import posterior_service as ps
from tests.conftest import make_inventory, make_pg, random_rows


class TestClassInventory:
    """Test cases for ClassInventory."""

    def test_text_round_trip(self):
        inv = make_inventory("tam", 4, ["sil", "a", "b", "a"])

        parsed = ClassInventory.from_text(inv.to_text())

        assert parsed == inv

    def test_size_below_two_rejected(self):
        with pytest.raises(ValidationError) as exc:
            ClassInventory(language_id="x", size=1, phone_of_class=("sil",), silence_phone="sil")
        assert exc.value.code == "invalid-inventory"

    def test_silence_phone_must_occur(self):
        with pytest.raises(ValidationError):
            ClassInventory(language_id="x", size=2, phone_of_class=("a", "b"), silence_phone="sil")

    def test_comments_and_header_order(self):
        text = "# inventory\n0 sil\nsize 3\n1 a\nlanguage_id tel\n2 b  # vowel\nsilence_phone sil\n"

        inv = ClassInventory.from_text(text)

        assert inv.language_id == "tel"
        assert inv.phone_of_class == ("sil", "a", "b")
        assert inv.is_silence(0) and not inv.is_silence(1)

    def test_missing_header_is_format_error(self):
        with pytest.raises(FormatError) as exc:
            ClassInventory.from_text("0 sil\n1 a\n")
        assert exc.value.code == "bad-inventory"


class TestValidatePosteriorgram:
    """Test cases for validate_posteriorgram."""

    def test_uniform_rows_valid(self):
        outcome = ps.validate_posteriorgram(make_pg(np.full((3, 4), 0.25)), make_inventory("tam", 4))

        assert outcome.valid

    def test_row_sum_two_not_normalized(self):
        outcome = ps.validate_posteriorgram(make_pg([[0.5, 0.5, 0.5, 0.5]]), make_inventory("tam", 4))

        assert not outcome.valid
        assert outcome.code == "row-not-normalized"
        assert outcome.row == 0

    def test_dimension_mismatch(self):
        outcome = ps.validate_posteriorgram(make_pg(np.full((2, 3), 1 / 3)), make_inventory("tam", 4))

        assert outcome.code == "dimension-mismatch"

    def test_negative_entry_reports_first_bad_row(self):
        rows = np.full((4, 2), 0.5)
        rows[2] = [1.5, -0.5]

        outcome = ps.validate_posteriorgram(make_pg(rows), make_inventory("tam", 2))

        assert outcome.code == "negative-entry"
        assert outcome.row == 2

    def test_non_finite_entry(self):
        rows = np.full((2, 2), 0.5)
        rows[1, 0] = np.nan

        outcome = ps.check_distribution_rows(rows)

        assert outcome.code == "non-finite-entry"
        assert outcome.row == 1

    def test_tolerance_boundary(self):
        ok = ps.check_distribution_rows(np.array([[0.5, 0.5 + 5e-6]]))
        bad = ps.check_distribution_rows(np.array([[0.5, 0.5 + 5e-5]]))

        assert ok.valid
        assert bad.code == "row-not-normalized"

    def test_single_perturbations_are_caught(self, rng):
        for _ in range(200):
            rows = random_rows(rng, 5, 6)
            row, col = rng.integers(5), rng.integers(6)
            kind = rng.integers(3)
            if kind == 0:
                rows[row, col] = -0.01 - rng.random()
            elif kind == 1:
                rows[row, col] += 1e-3 + rng.random()
            else:
                rows[row, col] = np.inf
            assert not ps.check_distribution_rows(rows).valid

    def test_ensure_valid_raises_with_code(self):
        with pytest.raises(ValidationError) as exc:
            ps.ensure_valid(make_pg([[0.9, 0.3]]))
        assert exc.value.code == "row-not-normalized"

    def test_empty_matrix_rejected_on_construction(self):
        with pytest.raises(ValidationError):
            Posteriorgram(utterance_id="u", language_id="tam", frames=np.zeros((0, 3)))


class TestPosteriorgramIO:
    """Test cases for PGM1 reading and writing."""

    @pytest.fixture
    def pg(self, rng):
        return make_pg(random_rows(rng, 2, 3), utt="utt7", lang="tel")

    def test_round_trip_bit_exact(self, pg):
        loaded = ps.read_posteriorgram(ps.write_posteriorgram(pg))

        assert loaded.same_as(pg)
        assert loaded.frames.dtype == np.float32

    def test_round_trip_through_file(self, pg, tmp_path):
        path = tmp_path / "nested" / "utt7.pgm"
        ps.write_posteriorgram(pg, path)

        assert ps.read_posteriorgram(path).same_as(pg)

    def test_layout(self, pg):
        blob = ps.write_posteriorgram(pg)
        header = b"utt=utt7;lang=tel;T=2;D=3"

        assert blob[:4] == b"PGM1"
        assert struct.unpack("<I", blob[4:8])[0] == len(header)
        assert blob[8:8 + len(header)] == header
        assert np.array_equal(np.frombuffer(blob[8 + len(header):], dtype="<f4").reshape(2, 3), pg.frames)

    def test_bad_magic(self, pg):
        blob = b"XXXX" + ps.write_posteriorgram(pg)[4:]

        with pytest.raises(FormatError) as exc:
            ps.read_posteriorgram(blob)
        assert exc.value.code == "bad-magic"

    def test_truncated_payload(self, rng):
        blob = ps.write_posteriorgram(make_pg(random_rows(rng, 5, 4)))

        with pytest.raises(FormatError) as exc:
            ps.read_posteriorgram(blob[:-2 * 4 * 4])
        assert exc.value.code == "truncated-stream"

    def test_trailing_bytes_are_header_mismatch(self, pg):
        with pytest.raises(FormatError) as exc:
            ps.read_posteriorgram(ps.write_posteriorgram(pg) + b"\x00" * 4)
        assert exc.value.code == "header-mismatch"

    def test_read_from_file_object(self, pg):
        assert ps.read_posteriorgram(io.BytesIO(ps.write_posteriorgram(pg))).same_as(pg)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileAccessError):
            ps.read_posteriorgram(tmp_path / "absent.pgm")

    def test_invalid_posteriorgram_not_written(self, tmp_path):
        path = tmp_path / "bad.pgm"

        with pytest.raises(ValidationError):
            ps.write_posteriorgram(make_pg([[0.7, 0.7]]), path)
        assert not path.exists()

    def test_load_directory_sorted(self, rng, tmp_path):
        for utt in ("b", "a", "c"):
            ps.write_posteriorgram(make_pg(random_rows(rng, 3, 2), utt=utt), ps.pgm_path(tmp_path, utt))

        assert list(ps.load_posteriorgram_dir(tmp_path)) == ["a", "b", "c"]


class TestAlignmentAndLabels:
    """Test cases for frame alignment, labels and silence filtering."""

    def test_frame_align_check(self):
        a = make_pg(np.full((100, 2), 0.5), utt="u")

        assert ps.frame_align_check(a, make_pg(np.full((100, 2), 0.5), utt="u"))
        assert not ps.frame_align_check(a, make_pg(np.full((99, 2), 0.5), utt="u"))
        assert not ps.frame_align_check(a, make_pg(np.full((100, 2), 0.5), utt="v"))

    def test_pair_utterances_rejects_misaligned(self):
        source = {"u": make_pg(np.full((4, 2), 0.5), utt="u")}
        target = {"u": make_pg(np.full((5, 2), 0.5), utt="u")}

        with pytest.raises(ValidationError) as exc:
            ps.pair_utterances(source, target)
        assert exc.value.code == "align-mismatch"

    def test_labels_round_trip(self, tmp_path):
        labels = LabelSequence(utterance_id="u1", labels=[0, 3, 3, 1])
        path = ps.label_path(tmp_path, "u1")
        ps.write_labels(labels, path)

        loaded = ps.read_labels(path)

        assert loaded.utterance_id == "u1"
        assert loaded.labels.tolist() == [0, 3, 3, 1]

    def test_label_range(self):
        with pytest.raises(ValidationError) as exc:
            LabelSequence(utterance_id="u", labels=[0, 4]).check_range(4)
        assert exc.value.row == 1

    def test_silence_only_utterances_discarded(self):
        inv = make_inventory("tam", 3)
        silent = make_pg([[0.8, 0.1, 0.1], [0.6, 0.3, 0.1]], utt="s")
        speech = make_pg([[0.8, 0.1, 0.1], [0.1, 0.8, 0.1]], utt="p")

        kept = ps.discard_silence_utterances({"s": silent, "p": speech}, inv)

        assert list(kept) == ["p"]

    @pytest.mark.parametrize("size", [4, 12])
    def test_silence_filter_inventory_size_mismatch(self, rng, size):
        pg = make_pg(random_rows(rng, 30, 8), utt="u")

        with pytest.raises(DimensionMismatchError):
            ps.discard_silence_utterances({"u": pg}, make_inventory("tam", size))
