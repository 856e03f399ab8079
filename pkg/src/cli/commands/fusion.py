"""Posterior fusion CLI command."""

from pathlib import Path
from typing import Dict, List, Optional, Tuple

import click

from ...core.constants import FusionMode
from ...core.exceptions import AlignmentError, UsageError, ValidationError, WeightError
from ...core.utils import parse_float_list
from ...models.fusion import SimilarityTable, WeightVector
from ...models.posteriorgram import Posteriorgram
from ...services.fusion_service import derive_weights, fuse_posteriorgrams
from ...services.posterior_service import load_posteriorgrams, pgm_path, write_posteriorgram
from ..ui.display import display_weights, success_message
from ..utils import exclusive, handle_errors


def parse_mapped(specs: Tuple[str, ...]) -> List[Tuple[str, str]]:
    """``LANG=PATH`` pairs; a bare path is named by its position (``s1``, ``s2``, ...)."""
    pairs = []
    for index, spec in enumerate(specs, start=1):
        name, sep, path = spec.partition("=")
        pairs.append((name, path) if sep else (f"s{index}", spec))
    names = [name for name, _ in pairs]
    if len(set(names)) != len(names):
        raise UsageError("Mapped input names must be distinct", code="bad-flag")
    return pairs


def weights_from_list(values: List[float], mode: FusionMode, names: List[str]) -> WeightVector:
    """``w_T,w_1,...,w_K``; in cross-lingual mode ``w_T`` may be left out."""
    if len(values) == len(names) + 1:
        target, sources = values[0], values[1:]
    elif len(values) == len(names) and mode == FusionMode.CROSS_LINGUAL:
        target, sources = 0.0, values
    else:
        raise WeightError(
            f"--weights has {len(values)} values for {len(names)} mapped input(s)", code="mode-mismatch"
        )
    return WeightVector(mode=mode, target_weight=target, source_weights=tuple(zip(names, sources))).require_valid()


def restrict_table(sim: SimilarityTable, names: List[str]) -> SimilarityTable:
    """Entries for ``names`` only, keeping the table's order."""
    missing = [name for name in names if name not in sim.entries]
    if missing:
        raise WeightError(f"Similarity table has no entry for {', '.join(missing)}", code="invalid-similarity")
    subset = SimilarityTable()
    for lang, entry in sim.entries.items():
        if lang in names:
            subset.add(lang, entry.avg_entropy, entry.top1_accuracy)
    return subset


def _utterance_sets(target: Optional[Dict[str, Posteriorgram]],
                    mapped: Dict[str, Dict[str, Posteriorgram]]) -> List[str]:
    sets = [set(pgs) for pgs in mapped.values()] + ([set(target)] if target is not None else [])
    if any(s != sets[0] for s in sets[1:]):
        raise AlignmentError("Fusion inputs do not contain the same utterances")
    if not sets[0]:
        raise ValidationError("No posteriorgrams to fuse", code="empty-set")
    return sorted(sets[0])


@click.command("fuse")
@click.option("--mode", "mode_name", required=True, type=click.Choice(["multi", "cross"]), help="Fusion mode")
@click.option("--target", "target_path", type=click.Path(), help="Target posteriorgrams (multilingual mode)")
@click.option("--mapped", "mapped_specs", required=True, multiple=True,
              help="Mapped posteriorgrams as LANG=PATH (repeatable, file or directory)")
@click.option("--weights", "weight_list", help="Explicit weights w_T,w_1,...,w_K")
@click.option("--weights-file", type=click.Path(dir_okay=False), help="Weight file")
@click.option("--derive-weights", "derive", is_flag=True, help="Derive weights from a similarity table")
@click.option("--tau", type=float, default=None, help="Entropy temperature for --derive-weights")
@click.option("--target-share", type=float, default=None, help="Target weight for --derive-weights")
@click.option("--sim-table", type=click.Path(dir_okay=False), help="Similarity table for --derive-weights")
@click.option("--output", "output_path", required=True, type=click.Path(), help="PGM1 file or directory")
@click.option("--show-weights", is_flag=True, help="Print the weights used")
@click.pass_context
@handle_errors
def fuse(ctx, mode_name, target_path, mapped_specs, weight_list, weights_file, derive,
         tau, target_share, sim_table, output_path, show_weights):
    """Fuse target and mapped posteriors with convex weights.

    All inputs are read and checked before the output is written.
    """
    app = ctx.obj
    mode = FusionMode.parse(mode_name)
    source = exclusive(weights=weight_list, weights_file=weights_file, derive_weights=derive)
    if source is None:
        raise UsageError("Give one of --weights, --weights-file or --derive-weights", code="missing-weights")
    if source != "derive_weights" and (tau is not None or target_share is not None or sim_table):
        raise UsageError("--tau, --target-share and --sim-table require --derive-weights")
    if mode == FusionMode.MULTILINGUAL and not target_path:
        raise UsageError("Multilingual fusion needs --target", code="mode-mismatch")
    if mode == FusionMode.CROSS_LINGUAL and target_path:
        raise UsageError("Cross-lingual fusion takes no --target", code="mode-mismatch")

    named = parse_mapped(mapped_specs)
    names = [name for name, _ in named]
    if source == "weights":
        w = weights_from_list(parse_float_list(weight_list), mode, names)
    elif source == "weights_file":
        w = WeightVector.load(weights_file)
        if w.mode != mode:
            raise WeightError(f"Weight file is for {w.mode} fusion", code="mode-mismatch")
    else:
        if not sim_table:
            raise UsageError("--derive-weights needs --sim-table", code="missing-weights")
        w = derive_weights(
            restrict_table(SimilarityTable.load(sim_table), names), mode,
            temperature=tau if tau is not None else app.config.fusion.temperature,
            target_share=target_share if target_share is not None else app.config.fusion.target_share,
        )
    if sorted(w.languages) != sorted(names):
        raise WeightError(f"Weights name {w.languages}, inputs are {names}", code="mode-mismatch")

    paths = dict(named)
    mapped = {name: load_posteriorgrams([paths[name]]) for name in w.languages}
    target = load_posteriorgrams([target_path]) if target_path else None
    utterances = _utterance_sets(target, mapped)
    fused = {
        utt: fuse_posteriorgrams(
            target[utt] if target is not None else None, [mapped[name][utt] for name in w.languages], w
        )
        for utt in utterances
    }

    inputs = [p for _, p in named] + ([target_path] if target_path else [])
    if any(Path(p).is_dir() for p in inputs):
        for utt, pg in fused.items():
            write_posteriorgram(pg, pgm_path(output_path, utt))
    else:
        write_posteriorgram(next(iter(fused.values())), output_path)
    if show_weights:
        display_weights(w)
    success_message(f"Fused {len(fused)} posteriorgram(s) ({w.mode})")
