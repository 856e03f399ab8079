"""Evaluation CLI command."""

import json
from pathlib import Path
from typing import Dict, List, Optional

import click

from ...core.exceptions import UsageError
from ...core.utils import argmax_rows, parse_int_list
from ...models.inventory import ClassInventory
from ...models.posteriorgram import Posteriorgram
from ...services import metrics_service
from ...services.posterior_service import ensure_valid, label_path, load_posteriorgrams, read_labels
from ..ui.display import display_report
from ..utils import exclusive, handle_errors


def _load_labels(path: str, utterances: List[str]) -> Dict:
    if Path(path).is_dir():
        return {utt: read_labels(label_path(path, utt), utt) for utt in utterances}
    if len(utterances) != 1:
        raise UsageError("A single label file can only score a single hypothesis", code="bad-flag")
    return {utterances[0]: read_labels(path, utterances[0])}


def frame_entropy_csv(hypotheses: Dict[str, Posteriorgram]) -> str:
    """``utterance,frame,entropy_nats,argmax`` rows in utterance then frame order."""
    lines = ["utterance,frame,entropy_nats,argmax"]
    for utt, pg in sorted(hypotheses.items()):
        entropies = metrics_service.frame_entropies(pg)
        classes = argmax_rows(pg.frames)
        lines.extend(f"{utt},{t},{h:.6f},{c}" for t, (h, c) in enumerate(zip(entropies, classes)))
    return "\n".join(lines) + "\n"


@click.command("eval")
@click.option("--hypothesis", "hypothesis_path", required=True, type=click.Path(),
              help="Hypothesis PGM1 file or directory")
@click.option("--reference", "reference_path", type=click.Path(), help="Reference PGM1 file or directory")
@click.option("--labels", "labels_path", type=click.Path(), help="Reference label file or directory")
@click.option("--inventory", "inventory_path", required=True, type=click.Path(dir_okay=False),
              help="Class inventory of the hypothesis")
@click.option("--topn", default=None, help="Comma-separated n values, e.g. 1,2,5,10")
@click.option("--phone-labels", type=click.Path(), help="Labels defining the reference phone sequences")
@click.option("--phone-inventory", type=click.Path(dir_okay=False), help="Inventory for --phone-labels")
@click.option("--format", "output_format", default="text", type=click.Choice(["text", "json"]), help="Output format")
@click.option("--frame-entropy", "entropy_path", type=click.Path(dir_okay=False),
              help="Write per-frame entropies as CSV")
@click.option("--output", "output_path", type=click.Path(dir_okay=False), help="Also write the report here")
@click.pass_context
@handle_errors
def evaluate(ctx, hypothesis_path, reference_path, labels_path, inventory_path, topn, phone_labels,
             phone_inventory, output_format, entropy_path, output_path):
    """Frame accuracy, top-n accuracy, entropy and PER of a hypothesis."""
    if exclusive(reference=reference_path, labels=labels_path) is None:
        raise UsageError("Give --reference or --labels", code="bad-flag")
    if bool(phone_labels) != bool(phone_inventory):
        raise UsageError("--phone-labels and --phone-inventory go together", code="bad-flag")
    ns = parse_int_list(topn) if topn else list(ctx.obj.config.topn)

    inv = ClassInventory.load(inventory_path)
    hypotheses = {utt: ensure_valid(pg, inv) for utt, pg in load_posteriorgrams([hypothesis_path]).items()}
    utterances = sorted(hypotheses)
    if reference_path:
        references = load_posteriorgrams([reference_path])
    else:
        references = _load_labels(labels_path, utterances)

    phones: Optional[Dict[str, List[str]]] = None
    if phone_labels:
        phone_inv = ClassInventory.load(phone_inventory)
        phones = {
            utt: metrics_service.reference_phones(labels, phone_inv)
            for utt, labels in _load_labels(phone_labels, utterances).items()
        }
    report = metrics_service.build_corpus_report(references, hypotheses, inv, ns, phones=phones)

    if output_format == "json":
        text = json.dumps(report.to_dict(), indent=2) + "\n"
        click.echo(text, nl=False)
    else:
        text = report.to_text()
        display_report(report)
    if output_path:
        Path(output_path).write_text(text, encoding="utf-8")
    if entropy_path:
        Path(entropy_path).write_text(frame_entropy_csv(hypotheses), encoding="utf-8")

