"""Weighted posterior fusion and weight derivation."""

from typing import Mapping, Optional, Sequence

import numpy as np

from ..core.constants import DEFAULT_TARGET_SHARE, DEFAULT_TEMPERATURE, FusionMode
from ..core.exceptions import AlignmentError, DimensionMismatchError, RangeError, WeightError
from ..core.logger import get_logger
from ..models.fusion import SimilarityTable, WeightCheck, WeightVector
from ..models.posteriorgram import Posteriorgram
from ..models.report import EvalReport
from .posterior_service import ensure_valid, frame_align_check

logger = get_logger("service.fusion")


def validate_weights(w: WeightVector) -> WeightCheck:
    """Report which WeightVector invariants hold."""
    return w.check()


def _check_arguments(has_target: bool, count: int, w: WeightVector) -> None:
    w.require_valid()
    if w.mode == FusionMode.MULTILINGUAL and not has_target:
        raise WeightError("Multilingual fusion needs the target posteriors", code="mode-mismatch")
    if w.mode == FusionMode.CROSS_LINGUAL and has_target:
        raise WeightError("Cross-lingual fusion must not receive target posteriors", code="mode-mismatch")
    if count != len(w.source_weights):
        raise WeightError(
            f"Got {count} mapped inputs for {len(w.source_weights)} source weights", code="mode-mismatch"
        )


def _combine(target: Optional[np.ndarray], mapped: Sequence[np.ndarray], w: WeightVector) -> np.ndarray:
    fused = np.zeros_like(mapped[0], dtype=np.float64)
    if target is not None:
        fused += w.target_weight * target
    for weight, rows in zip(w.weights, mapped):
        fused += weight * rows
    return fused


def fuse_frame(target_row: Optional[np.ndarray], mapped_rows: Sequence[np.ndarray],
               w: WeightVector) -> np.ndarray:
    """Convex combination of one frame's distributions (no renormalization)."""
    _check_arguments(target_row is not None, len(mapped_rows), w)
    rows = [np.asarray(r, dtype=np.float64).reshape(-1) for r in mapped_rows]
    target = None if target_row is None else np.asarray(target_row, dtype=np.float64).reshape(-1)
    dims = {r.shape[0] for r in rows} | ({target.shape[0]} if target is not None else set())
    if len(dims) != 1:
        raise DimensionMismatchError(f"Fused rows have differing dimensions {sorted(dims)}")
    return _combine(target, rows, w)


def fuse_posteriorgrams(target_pg: Optional[Posteriorgram], mapped_pgs: Sequence[Posteriorgram],
                        w: WeightVector) -> Posteriorgram:
    """Frame-wise weighted fusion; ``mapped_pgs`` follow ``w.source_weights`` order."""
    mapped_pgs = list(mapped_pgs)
    _check_arguments(target_pg is not None, len(mapped_pgs), w)
    inputs = ([target_pg] if target_pg is not None else []) + mapped_pgs
    reference = inputs[0]
    for pg in inputs[1:]:
        if not frame_align_check(reference, pg):
            raise AlignmentError(
                f"'{pg.utterance_id}' ({pg.num_frames} frames) does not align with "
                f"'{reference.utterance_id}' ({reference.num_frames} frames)"
            )
        if pg.dim != reference.dim:
            raise DimensionMismatchError(
                f"Fusion inputs of '{reference.utterance_id}' have {reference.dim} and {pg.dim} classes"
            )

    fused = _combine(
        None if target_pg is None else target_pg.as_float64(),
        [pg.as_float64() for pg in mapped_pgs],
        w,
    )
    result = Posteriorgram(utterance_id=reference.utterance_id, language_id=reference.language_id, frames=fused)
    return ensure_valid(result)


def derive_weights(sim: SimilarityTable, mode: FusionMode, temperature: float = DEFAULT_TEMPERATURE,
                   include_target: Optional[bool] = None,
                   target_share: float = DEFAULT_TARGET_SHARE) -> WeightVector:
    """Weights proportional to ``accuracy * exp(-entropy / temperature)``.

    Sources keep the table's order. In multilingual mode the target gets
    ``target_share`` and the sources share the rest.
    """
    mode = FusionMode.parse(str(mode))
    if include_target is None:
        include_target = mode == FusionMode.MULTILINGUAL
    if include_target != (mode == FusionMode.MULTILINGUAL):
        raise WeightError("include_target must match the fusion mode", code="mode-mismatch")
    if not sim.entries:
        raise WeightError("Similarity table is empty", code="empty-table")
    if not temperature > 0.0:
        raise RangeError(f"Temperature must be positive, got {temperature}", code="non-positive-temperature")
    if not 0.0 <= target_share <= 1.0:
        raise RangeError(f"target_share must lie in [0, 1], got {target_share}")

    langs = list(sim.entries)
    entropy = np.array([sim.entries[lang].avg_entropy for lang in langs])
    accuracy = np.array([sim.entries[lang].top1_accuracy for lang in langs])
    if not (np.all(np.isfinite(entropy)) and np.all(np.isfinite(accuracy))):
        raise WeightError("Similarity table has non-finite entries", code="invalid-similarity")
    if np.any(entropy < 0) or np.any((accuracy < 0) | (accuracy > 1)):
        raise WeightError("Similarity entropies must be >= 0 and accuracies in [0, 1]", code="invalid-similarity")
    if not np.any(accuracy > 0):
        raise WeightError("Every source has zero accuracy", code="invalid-similarity")

    with np.errstate(divide="ignore"):
        log_score = np.log(accuracy) - entropy / temperature
    scores = np.exp(log_score - log_score.max())
    share = (1.0 - target_share) if include_target else 1.0
    weights = scores / scores.sum() * share

    w = WeightVector(
        mode=mode,
        target_weight=target_share if include_target else 0.0,
        source_weights=tuple(zip(langs, (float(x) for x in weights))),
    )
    logger.debug(f"Derived weights: {w.to_dict()}")
    return w.require_valid()


def similarity_from_reports(reports: Mapping[str, EvalReport]) -> SimilarityTable:
    """Build a similarity table from per-source mapping evaluations."""
    table = SimilarityTable()
    for lang, report in reports.items():
        table.add(lang, report.avg_entropy, report.accuracy)
    return table
