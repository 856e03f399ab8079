"""Display utilities for CLI interface."""

from typing import Optional

import click
from tabulate import tabulate

from ...core.utils import format_metric, truncate_string
from ...models.fusion import SimilarityTable, WeightVector
from ...models.network import TrainingTrace
from ...models.report import EvalReport


def success_message(message: str):
    """Display success message on stderr."""
    click.echo(click.style(message, fg='green'), err=True)


def display_header(title: str, width: int = 60):
    """Display a formatted header."""
    click.echo("\n" + "=" * width)
    click.echo(title.center(width))
    click.echo("=" * width)


def display_report(report: EvalReport, title: Optional[str] = None):
    """Print the flat ``key=value`` report block."""
    if title:
        click.echo(f"# {title}")
    click.echo(report.to_text(), nl=False)


def display_trace_table(trace: TrainingTrace):
    """Per-epoch losses; the best epoch is starred."""
    rows = [
        [
            f"{r.epoch}{'*' if r.epoch == trace.best_epoch else ''}",
            f"{r.train_kl:.6f}", f"{r.dev_kl:.6f}", format_metric(r.dev_top1),
        ]
        for r in trace.records
    ]
    click.echo(tabulate(rows, headers=["epoch", "train_kl", "dev_kl", "dev_top1"],
                        tablefmt="simple", disable_numparse=True))
    click.echo(f"stop_reason={trace.stop_reason}")


def display_weights(w: WeightVector):
    rows = []
    if w.target_weight or w.mode.value == "multilingual":
        rows.append(["target", f"{w.target_weight:.6f}"])
    rows.extend([truncate_string(lang, 24), f"{weight:.6f}"] for lang, weight in w.source_weights)
    click.echo(f"mode: {w.mode}")
    click.echo(tabulate(rows, headers=["input", "weight"], tablefmt="simple", disable_numparse=True))


def display_similarity(sim: SimilarityTable):
    rows = [[lang, format_metric(e.avg_entropy), format_metric(e.top1_accuracy)]
            for lang, e in sim.entries.items()]
    click.echo(tabulate(rows, headers=["source", "avg_entropy", "top1"], tablefmt="simple",
                        disable_numparse=True))
