"""Mapping network CLI commands."""

from pathlib import Path

import click

from ...core.exceptions import UsageError
from ...core.utils import parse_int_list
from ...models.inventory import ClassInventory
from ...models.network import TrainingConfig
from ...services.mapping_service import (
    load_network, map_posteriorgram, save_network, split_train_dev, train,
)
from ...services.posterior_service import load_posteriorgrams, pair_utterances, pgm_path, write_posteriorgram
from ..ui.display import display_trace_table, success_message
from ..utils import handle_errors


def trace_path_for(network_path: str) -> Path:
    return Path(network_path).with_suffix(".trace.csv")


@click.command("train-map")
@click.option("--source", "source_paths", required=True, multiple=True, type=click.Path(),
              help="Source posteriorgram file or directory (repeatable)")
@click.option("--target", "target_paths", required=True, multiple=True, type=click.Path(),
              help="Target posteriorgram file or directory (repeatable)")
@click.option("--dev-source", "dev_source_paths", multiple=True, type=click.Path(), help="Explicit dev source set")
@click.option("--dev-target", "dev_target_paths", multiple=True, type=click.Path(), help="Explicit dev target set")
@click.option("--dev-fraction", type=float, default=None, help="Held-out utterance fraction without a dev set")
@click.option("--inventory", "inventory_path", type=click.Path(dir_okay=False),
              help="Target inventory; enables dropping silence-only utterances")
@click.option("--hidden", default=None, help="Hidden layer widths, e.g. 256,256,256")
@click.option("--epochs", type=int, default=None, help="Maximum epochs")
@click.option("--patience", type=int, default=None, help="Early stopping patience")
@click.option("--lr", type=float, default=None, help="Learning rate")
@click.option("--batch-size", type=int, default=None, help="Mini-batch size")
@click.option("--output", "output_path", required=True, type=click.Path(dir_okay=False), help="MNW1 output file")
@click.option("--show-trace", is_flag=True, help="Print the per-epoch table")
@click.pass_context
@handle_errors
def train_map(ctx, source_paths, target_paths, dev_source_paths, dev_target_paths, dev_fraction,
              inventory_path, hidden, epochs, patience, lr, batch_size, output_path, show_trace):
    """Train a source-to-target mapping network."""
    app = ctx.obj
    defaults = app.config.training
    cfg = TrainingConfig(
        batch_size=batch_size if batch_size is not None else defaults.batch_size,
        learning_rate=lr if lr is not None else defaults.learning_rate,
        max_epochs=epochs if epochs is not None else defaults.max_epochs,
        patience=patience if patience is not None else defaults.patience,
        hidden_dims=tuple(parse_int_list(hidden)) if hidden else tuple(defaults.hidden_dims),
        seed=app.seed,
    )
    inventory = ClassInventory.load(inventory_path) if inventory_path else None

    source = load_posteriorgrams(source_paths)
    target = load_posteriorgrams(target_paths)
    if bool(dev_source_paths) != bool(dev_target_paths):
        raise UsageError("--dev-source and --dev-target must be given together", code="bad-flag")
    if dev_source_paths:
        if dev_fraction is not None:
            raise UsageError("--dev-fraction cannot be combined with an explicit dev set")
        dev_source = load_posteriorgrams(dev_source_paths)
        dev_target = load_posteriorgrams(dev_target_paths)
    else:
        shared = pair_utterances(source, target)
        train_ids, dev_ids = split_train_dev(
            shared, dev_fraction if dev_fraction is not None else defaults.dev_fraction, app.seed
        )
        dev_source = {u: source[u] for u in dev_ids}
        dev_target = {u: target[u] for u in dev_ids}
        source = {u: source[u] for u in train_ids}
        target = {u: target[u] for u in train_ids}

    net, trace = train(source, target, cfg, dev_source, dev_target, target_inventory=inventory)

    save_network(net, output_path)
    trace_path_for(output_path).write_text(trace.to_csv(), encoding="utf-8")
    if show_trace:
        display_trace_table(trace)
    success_message(f"Network {net.source_lang}->{net.target_lang} saved to {output_path}")


@click.command("map")
@click.option("--network", "network_path", required=True, type=click.Path(dir_okay=False), help="MNW1 file")
@click.option("--input", "input_path", required=True, type=click.Path(), help="PGM1 file or directory")
@click.option("--output", "output_path", required=True, type=click.Path(), help="PGM1 file or directory")
@handle_errors
def map_cmd(network_path, input_path, output_path):
    """Map posteriorgrams into the network's target class space."""
    net = load_network(network_path)
    pgs = load_posteriorgrams([input_path])
    mapped = {utt: map_posteriorgram(net, pg) for utt, pg in pgs.items()}

    if Path(input_path).is_dir():
        for utt, pg in mapped.items():
            write_posteriorgram(pg, pgm_path(output_path, utt))
    else:
        write_posteriorgram(next(iter(mapped.values())), output_path)
    success_message(f"Mapped {len(mapped)} posteriorgram(s) to {net.target_lang}")
