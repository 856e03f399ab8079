"""Posteriorgram validation, alignment and PGM1/label file I/O."""

import io
import os
import struct
from pathlib import Path
from typing import BinaryIO, Dict, Iterable, List, Optional, Union

import numpy as np

from ..core.constants import LABEL_SUFFIX, PGM_MAGIC, PGM_SUFFIX, ROW_SUM_TOLERANCE
from ..core.exceptions import AlignmentError, DimensionMismatchError, FileAccessError, FormatError, ValidationError
from ..core.logger import get_logger
from ..core.utils import argmax_rows
from ..models.inventory import ClassInventory
from ..models.posteriorgram import LabelSequence, Posteriorgram, ValidationOutcome

logger = get_logger("service.posterior")

Source = Union[bytes, bytearray, str, os.PathLike, BinaryIO]

_HEADER_LEN = struct.Struct("<I")
_PAYLOAD_DTYPE = np.dtype("<f4")


def check_distribution_rows(matrix: np.ndarray) -> ValidationOutcome:
    """Check that every row of ``matrix`` is a probability distribution.

    Reports the first offending row. Within a row the reasons are tried in
    the order non-finite, negative, above one, row sum.
    """
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[0] == 0:
        return ValidationOutcome.failure("empty-posteriorgram", "Expected a non-empty T x d matrix")

    finite = np.isfinite(matrix)
    safe = np.where(finite, matrix, 0.0)
    non_finite = ~finite.all(axis=1)
    negative = (safe < 0.0).any(axis=1)
    above_one = (safe > 1.0 + ROW_SUM_TOLERANCE).any(axis=1)
    not_normalized = np.abs(safe.sum(axis=1) - 1.0) > ROW_SUM_TOLERANCE

    bad = non_finite | negative | above_one | not_normalized
    if not bad.any():
        return ValidationOutcome.ok()

    row = int(np.flatnonzero(bad)[0])
    if non_finite[row]:
        return ValidationOutcome.failure("non-finite-entry", f"Row {row} contains NaN or Inf", row)
    if negative[row]:
        col = int(np.flatnonzero(safe[row] < 0.0)[0])
        return ValidationOutcome.failure(
            "negative-entry", f"Row {row} has negative entry {safe[row, col]!r} at class {col}", row
        )
    if above_one[row]:
        return ValidationOutcome.failure("entry-above-one", f"Row {row} has an entry above 1", row)
    return ValidationOutcome.failure(
        "row-not-normalized", f"Row {row} sums to {safe[row].sum():.8f}, not 1", row
    )


def validate_posteriorgram(pg: Posteriorgram, inv: ClassInventory) -> ValidationOutcome:
    """Validate ``pg`` against the posteriorgram invariants and ``inv``."""
    if pg.dim != inv.size:
        return ValidationOutcome.failure(
            "dimension-mismatch",
            f"Posteriorgram '{pg.utterance_id}' has {pg.dim} columns, "
            f"inventory '{inv.language_id}' has {inv.size} classes",
        )
    return check_distribution_rows(pg.frames)


def ensure_valid(pg: Posteriorgram, inv: Optional[ClassInventory] = None) -> Posteriorgram:
    """Raise ValidationError unless ``pg`` is valid; returns ``pg``."""
    outcome = validate_posteriorgram(pg, inv) if inv is not None else check_distribution_rows(pg.frames)
    if not outcome.valid:
        raise ValidationError(f"{pg.utterance_id}: {outcome.message}", code=outcome.code, row=outcome.row)
    return pg


def frame_align_check(a: Posteriorgram, b: Posteriorgram) -> bool:
    """True iff both posteriorgrams score the same utterance frame by frame."""
    return a.num_frames == b.num_frames and a.utterance_id == b.utterance_id


def _encode_header(pg: Posteriorgram) -> bytes:
    for name, value in (("utterance_id", pg.utterance_id), ("language_id", pg.language_id)):
        if not value or any(ch in value for ch in ";=\n"):
            raise FormatError(f"{name} '{value}' cannot be stored in a PGM1 header", code="bad-header")
    return f"utt={pg.utterance_id};lang={pg.language_id};T={pg.num_frames};D={pg.dim}".encode("utf-8")


def write_posteriorgram(pg: Posteriorgram, destination: Union[str, os.PathLike, BinaryIO, None] = None) -> bytes:
    """Serialize ``pg`` as PGM1 and optionally write it to ``destination``.

    Returns the encoded bytes either way.
    """
    outcome = check_distribution_rows(pg.frames)
    if not outcome.valid:
        raise ValidationError(f"Refusing to write invalid posteriorgram: {outcome.message}",
                              code=outcome.code, row=outcome.row)
    header = _encode_header(pg)
    payload = pg.frames.astype(_PAYLOAD_DTYPE, copy=False).tobytes(order="C")
    blob = PGM_MAGIC + _HEADER_LEN.pack(len(header)) + header + payload

    if destination is None:
        return blob
    if hasattr(destination, "write"):
        destination.write(blob)
    else:
        Path(destination).parent.mkdir(parents=True, exist_ok=True)
        with open(destination, "wb") as f:
            f.write(blob)
    return blob


def _read_all(source: Source) -> bytes:
    if isinstance(source, (bytes, bytearray)):
        return bytes(source)
    if hasattr(source, "read"):
        return source.read()
    try:
        with open(source, "rb") as f:
            return f.read()
    except FileNotFoundError:
        raise FileAccessError(f"No such posteriorgram file: {source}")


def _parse_header(text: str) -> Dict[str, str]:
    fields = {}
    for item in text.split(";"):
        key, sep, value = item.partition("=")
        if not sep:
            raise FormatError(f"Malformed header field '{item}'", code="header-mismatch")
        fields[key] = value
    for key in ("utt", "lang", "T", "D"):
        if key not in fields:
            raise FormatError(f"Header is missing '{key}'", code="header-mismatch")
    return fields


def read_posteriorgram(source: Source) -> Posteriorgram:
    """Decode a PGM1 stream (bytes, path or binary file object)."""
    data = _read_all(source)
    view = io.BytesIO(data)

    magic = view.read(4)
    if len(magic) < 4:
        raise FormatError("Stream ends inside the magic", code="truncated-stream")
    if magic != PGM_MAGIC:
        raise FormatError(f"Bad magic {magic!r}, expected {PGM_MAGIC!r}", code="bad-magic")

    raw_len = view.read(_HEADER_LEN.size)
    if len(raw_len) < _HEADER_LEN.size:
        raise FormatError("Stream ends inside the header length", code="truncated-stream")
    (header_len,) = _HEADER_LEN.unpack(raw_len)
    raw_header = view.read(header_len)
    if len(raw_header) < header_len:
        raise FormatError("Stream ends inside the header", code="truncated-stream")
    try:
        fields = _parse_header(raw_header.decode("utf-8"))
        num_frames, dim = int(fields["T"]), int(fields["D"])
    except UnicodeDecodeError:
        raise FormatError("Header is not valid UTF-8", code="header-mismatch")
    except ValueError:
        raise FormatError("Header T/D are not integers", code="header-mismatch")
    if num_frames < 1 or dim < 1:
        raise FormatError(f"Header declares T={num_frames}, D={dim}", code="header-mismatch")

    payload = view.read()
    expected = num_frames * dim * _PAYLOAD_DTYPE.itemsize
    if len(payload) < expected:
        raise FormatError(
            f"Payload has {len(payload)} bytes, header T={num_frames} D={dim} needs {expected}",
            code="truncated-stream",
        )
    if len(payload) > expected:
        raise FormatError(
            f"Payload has {len(payload) - expected} trailing bytes beyond T={num_frames} D={dim}",
            code="header-mismatch",
        )

    frames = np.frombuffer(payload, dtype=_PAYLOAD_DTYPE).reshape(num_frames, dim)
    return Posteriorgram(utterance_id=fields["utt"], language_id=fields["lang"], frames=frames)


def write_labels(labels: LabelSequence, path: Union[str, os.PathLike]) -> None:
    """Write one class index per line."""
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        f.write("".join(f"{int(label)}\n" for label in labels.labels))


def read_labels(path: Union[str, os.PathLike], utterance_id: Optional[str] = None,
                language_id: Optional[str] = None) -> LabelSequence:
    """Read a label file; the utterance id defaults to the file stem."""
    try:
        with open(path, "r", encoding="utf-8") as f:
            values = [int(line) for line in f if line.strip()]
    except FileNotFoundError:
        raise FileAccessError(f"No such label file: {path}")
    except ValueError:
        raise FormatError(f"Label file {path} contains a non-integer line", code="bad-labels")
    return LabelSequence(
        utterance_id=utterance_id or Path(path).name.split(".")[0],
        labels=np.asarray(values, dtype=np.int64),
        language_id=language_id,
    )


def pgm_path(directory: Union[str, os.PathLike], utterance_id: str) -> Path:
    return Path(directory) / f"{utterance_id}{PGM_SUFFIX}"


def label_path(directory: Union[str, os.PathLike], utterance_id: str) -> Path:
    return Path(directory) / f"{utterance_id}{LABEL_SUFFIX}"


def load_posteriorgram_dir(directory: Union[str, os.PathLike]) -> Dict[str, Posteriorgram]:
    """Load every ``*.pgm`` under ``directory`` keyed by utterance id, sorted."""
    directory = Path(directory)
    if not directory.is_dir():
        raise FileAccessError(f"No such directory: {directory}")
    pgs = {}
    for path in sorted(directory.glob(f"*{PGM_SUFFIX}")):
        pg = read_posteriorgram(path)
        pgs[pg.utterance_id] = pg
    logger.debug(f"Loaded {len(pgs)} posteriorgrams from {directory}")
    return dict(sorted(pgs.items()))


def load_posteriorgrams(paths: Iterable[Union[str, os.PathLike]]) -> Dict[str, Posteriorgram]:
    """Load PGM1 files or directories of them into one id-keyed mapping."""
    pgs: Dict[str, Posteriorgram] = {}
    for path in paths:
        if Path(path).is_dir():
            pgs.update(load_posteriorgram_dir(path))
        else:
            pg = read_posteriorgram(path)
            pgs[pg.utterance_id] = pg
    return dict(sorted(pgs.items()))


def pair_utterances(source: Dict[str, Posteriorgram],
                    target: Dict[str, Posteriorgram]) -> List[str]:
    """Utterance ids present in both sets; raises on misaligned pairs."""
    shared = sorted(set(source) & set(target))
    for utt in shared:
        if not frame_align_check(source[utt], target[utt]):
            raise AlignmentError(
                f"Utterance '{utt}' has {source[utt].num_frames} source frames "
                f"but {target[utt].num_frames} target frames"
            )
    return shared


def is_silence_only(pg: Posteriorgram, inv: ClassInventory) -> bool:
    """True when every frame's most probable class is a silence class."""
    if pg.dim != inv.size:
        raise DimensionMismatchError(
            f"Posteriorgram '{pg.utterance_id}' has {pg.dim} classes, inventory '{inv.language_id}' has {inv.size}"
        )
    silence = np.array([inv.is_silence(c) for c in range(inv.size)])
    return bool(silence[argmax_rows(pg.frames)].all())


def discard_silence_utterances(pgs: Dict[str, Posteriorgram], inv: ClassInventory) -> Dict[str, Posteriorgram]:
    """Drop utterances that contain only non-speech frames."""
    kept = {utt: pg for utt, pg in pgs.items() if not is_silence_only(pg, inv)}
    dropped = len(pgs) - len(kept)
    if dropped:
        logger.info(f"Discarded {dropped} silence-only utterance(s) of '{inv.language_id}'")
    return kept
