"""Evaluation metrics: frame and top-n accuracy, entropy, greedy decoding, PER."""

from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from ..core.constants import ENTROPY_EPSILON
from ..core.exceptions import AlignmentError, DimensionMismatchError, RangeError, ValidationError
from ..core.logger import get_logger
from ..core.utils import argmax_rows, topn_indices
from ..models.inventory import ClassInventory
from ..models.posteriorgram import LabelSequence, Posteriorgram
from ..models.report import EvalReport

logger = get_logger("service.metrics")

Reference = Union[Posteriorgram, LabelSequence]


class PhoneErrors(NamedTuple):
    """Phoneme error rate with its edit operation counts."""
    per: float
    substitutions: int
    insertions: int
    deletions: int


def _reference_classes(reference: Reference, hypothesis: Posteriorgram) -> np.ndarray:
    if reference.utterance_id != hypothesis.utterance_id or reference.num_frames != hypothesis.num_frames:
        raise AlignmentError(
            f"Reference '{reference.utterance_id}' ({reference.num_frames} frames) does not align with "
            f"hypothesis '{hypothesis.utterance_id}' ({hypothesis.num_frames} frames)"
        )
    if isinstance(reference, LabelSequence):
        reference.check_range(hypothesis.dim)
        return reference.labels
    if reference.dim != hypothesis.dim:
        raise DimensionMismatchError(
            f"Reference has {reference.dim} classes, hypothesis has {hypothesis.dim}"
        )
    return argmax_rows(reference.frames)


def frame_accuracy(reference: Reference, hypothesis: Posteriorgram) -> Tuple[int, float]:
    """Correctly mapped frames and their fraction of all frames."""
    ref = _reference_classes(reference, hypothesis)
    cmf = int(np.sum(argmax_rows(hypothesis.frames) == ref))
    return cmf, cmf / hypothesis.num_frames


def _topn_hits(ref: np.ndarray, hypothesis: Posteriorgram, ns: Iterable[int]) -> Dict[int, int]:
    ns = sorted(set(int(n) for n in ns))
    for n in ns:
        if not 1 <= n <= hypothesis.dim:
            raise RangeError(f"top-n value {n} is outside [1, {hypothesis.dim}]", code="n-out-of-range")
    if not ns:
        return {}
    ranked = topn_indices(hypothesis.frames, ns[-1])
    hit_rank = ranked == ref[:, None]
    return {n: int(hit_rank[:, :n].any(axis=1).sum()) for n in ns}


def topn_accuracy(reference: Reference, hypothesis: Posteriorgram, ns: Iterable[int]) -> Dict[int, float]:
    """Fraction of frames whose reference class is among the n most probable."""
    ref = _reference_classes(reference, hypothesis)
    return {n: hits / hypothesis.num_frames for n, hits in _topn_hits(ref, hypothesis, ns).items()}


def frame_entropies(pg: Posteriorgram) -> np.ndarray:
    """Per-frame entropy in nats."""
    p = pg.as_float64()
    return -np.sum(p * np.log(np.maximum(p, ENTROPY_EPSILON)), axis=1)


def frame_entropy(row: Sequence[float]) -> float:
    """Entropy of one distribution in nats."""
    p = np.asarray(row, dtype=np.float64)
    return float(-np.sum(p * np.log(np.maximum(p, ENTROPY_EPSILON))))


def avg_entropy(pgs: Union[Posteriorgram, Mapping[str, Posteriorgram], Sequence[Posteriorgram]]) -> float:
    """Mean frame entropy; over a set, weighted by frame count."""
    if isinstance(pgs, Posteriorgram):
        return float(np.mean(frame_entropies(pgs)))
    items = [pgs[k] for k in sorted(pgs)] if isinstance(pgs, Mapping) else list(pgs)
    if not items:
        raise ValidationError("Cannot average entropy over an empty set", code="empty-set")
    total = sum(float(np.sum(frame_entropies(pg))) for pg in items)
    return total / sum(pg.num_frames for pg in items)


def decode_classes(classes: Sequence[int], inv: ClassInventory) -> List[str]:
    """Map classes to phones, collapse repeats, then drop silence."""
    phones: List[str] = []
    previous = None
    for c in classes:
        phone = inv.phone_of_class[int(c)]
        if phone != previous:
            phones.append(phone)
            previous = phone
    return [p for p in phones if p != inv.silence_phone]


def greedy_decode(pg: Posteriorgram, inv: ClassInventory) -> List[str]:
    """Frame-argmax phone sequence of ``pg``."""
    if pg.dim != inv.size:
        raise DimensionMismatchError(f"Posteriorgram has {pg.dim} classes, inventory has {inv.size}")
    return decode_classes(argmax_rows(pg.frames), inv)


def edit_counts(reference: Sequence[str], hypothesis: Sequence[str]) -> Tuple[int, int, int]:
    """Unit-cost Levenshtein alignment as (substitutions, insertions, deletions).

    Backtrace ties prefer the diagonal, then deletion, then insertion.
    """
    n, m = len(reference), len(hypothesis)
    d = np.zeros((n + 1, m + 1), dtype=np.int64)
    d[:, 0] = np.arange(n + 1)
    d[0, :] = np.arange(m + 1)
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            cost = 0 if reference[i - 1] == hypothesis[j - 1] else 1
            d[i, j] = min(d[i - 1, j - 1] + cost, d[i - 1, j] + 1, d[i, j - 1] + 1)

    subs = ins = dels = 0
    i, j = n, m
    while i > 0 or j > 0:
        if i > 0 and j > 0:
            cost = 0 if reference[i - 1] == hypothesis[j - 1] else 1
            if d[i, j] == d[i - 1, j - 1] + cost:
                subs += cost
                i, j = i - 1, j - 1
                continue
        if i > 0 and d[i, j] == d[i - 1, j] + 1:
            dels += 1
            i -= 1
        else:
            ins += 1
            j -= 1
    return subs, ins, dels


def phoneme_error_rate(reference: Sequence[str], hypothesis: Sequence[str]) -> PhoneErrors:
    """(S + I + D) / len(reference); may exceed 1."""
    if len(reference) == 0:
        raise ValidationError("Reference phone sequence is empty", code="empty-reference")
    subs, ins, dels = edit_counts(reference, hypothesis)
    return PhoneErrors((subs + ins + dels) / len(reference), subs, ins, dels)


def reference_phones(reference: Reference, inv: ClassInventory) -> List[str]:
    """Phone sequence of a reference posteriorgram or label sequence."""
    if isinstance(reference, LabelSequence):
        reference.check_range(inv.size)
        return decode_classes(reference.labels, inv)
    return greedy_decode(reference, inv)


@dataclass
class _Tally:
    frames: int = 0
    cmf: int = 0
    topn_hits: Dict[int, int] = field(default_factory=dict)
    entropy_sum: float = 0.0
    subs: int = 0
    ins: int = 0
    dels: int = 0
    ref_phones: int = 0

    def add(self, reference: Reference, hypothesis: Posteriorgram, inv: ClassInventory,
            ns: Iterable[int], phones: Optional[Sequence[str]]) -> None:
        if hypothesis.dim != inv.size:
            raise DimensionMismatchError(
                f"Hypothesis has {hypothesis.dim} classes, inventory '{inv.language_id}' has {inv.size}"
            )
        ref = _reference_classes(reference, hypothesis)
        self.frames += hypothesis.num_frames
        self.cmf += int(np.sum(argmax_rows(hypothesis.frames) == ref))
        for n, hits in _topn_hits(ref, hypothesis, ns).items():
            self.topn_hits[n] = self.topn_hits.get(n, 0) + hits
        self.entropy_sum += float(np.sum(frame_entropies(hypothesis)))
        ref_seq = list(phones) if phones is not None else reference_phones(reference, inv)
        subs, ins, dels = edit_counts(ref_seq, greedy_decode(hypothesis, inv))
        self.subs, self.ins, self.dels = self.subs + subs, self.ins + ins, self.dels + dels
        self.ref_phones += len(ref_seq)

    def report(self) -> EvalReport:
        if self.ref_phones == 0:
            raise ValidationError("Reference phone sequence is empty", code="empty-reference")
        return EvalReport(
            n_frames=self.frames,
            cmf=self.cmf,
            top_n_accuracy={n: hits / self.frames for n, hits in sorted(self.topn_hits.items())},
            avg_entropy=self.entropy_sum / self.frames,
            per=(self.subs + self.ins + self.dels) / self.ref_phones,
            substitutions=self.subs,
            insertions=self.ins,
            deletions=self.dels,
            reference_phones=self.ref_phones,
        )


def build_report(reference: Reference, hypothesis: Posteriorgram, inv: ClassInventory,
                 ns: Iterable[int], phones: Optional[Sequence[str]] = None) -> EvalReport:
    """All metrics of one utterance.

    ``phones`` overrides the reference phone sequence otherwise decoded from
    ``reference``.
    """
    tally = _Tally()
    tally.add(reference, hypothesis, inv, ns, phones)
    return tally.report()


def build_corpus_report(references: Mapping[str, Reference], hypotheses: Mapping[str, Posteriorgram],
                        inv: ClassInventory, ns: Iterable[int],
                        phones: Optional[Mapping[str, Sequence[str]]] = None) -> EvalReport:
    """Metrics pooled over utterances in sorted id order."""
    missing = sorted(set(hypotheses) - set(references))
    if missing:
        raise AlignmentError(f"No reference for utterance(s): {', '.join(missing[:5])}")
    if not hypotheses:
        raise ValidationError("No hypotheses to evaluate", code="empty-set")
    ns = list(ns)
    tally = _Tally()
    for utt in sorted(hypotheses):
        tally.add(references[utt], hypotheses[utt], inv, ns, None if phones is None else phones[utt])
    report = tally.report()
    logger.debug(f"Evaluated {len(hypotheses)} utterances, {report.n_frames} frames")
    return report


def entropy_matrix(mapped: Mapping[Tuple[str, str], Mapping[str, Posteriorgram]],
                   languages: Sequence[str]) -> Dict[Tuple[str, str], Optional[float]]:
    """Average mapped entropy for every (source, target) pair.

    Self pairs have no mapping network and are reported as ``None``.
    """
    matrix: Dict[Tuple[str, str], Optional[float]] = {}
    for target in languages:
        for source in languages:
            if source == target:
                matrix[(source, target)] = None
            elif (source, target) in mapped:
                matrix[(source, target)] = avg_entropy(mapped[(source, target)])
    return matrix
