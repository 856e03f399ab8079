"""Synthetic corpus CLI commands."""

import click

from ...core.utils import format_metric
from ...models.synth import SynthConfig
from ...services import synth_service
from ..ui.display import success_message
from ..utils import handle_errors


@click.command("gen-synth")
@click.argument("config_path", type=click.Path(dir_okay=False))
@click.argument("output_dir", type=click.Path(file_okay=False))
@click.pass_context
@handle_errors
def gen_synth(ctx, config_path, output_dir):
    """Generate a synthetic multilingual corpus from CONFIG_PATH into OUTPUT_DIR."""
    cfg = SynthConfig.load(config_path)
    if ctx.obj.seed_override is not None:
        cfg.seed = ctx.obj.seed_override
    corpus = synth_service.generate(cfg)
    synth_service.write_corpus(corpus, output_dir)
    success_message(f"{len(corpus.utterance_ids)} utterances, {corpus.num_frames} frames per language")


@click.command("oracle")
@click.option("--corpus", "corpus_dir", required=True, type=click.Path(file_okay=False), help="Corpus directory")
@click.option("--source", "source_lang", required=True, help="Source language")
@click.option("--target", "target_lang", required=True, help="Target language")
@click.option("--condition", default=synth_service.ORACLE_SOURCE_ARGMAX,
              type=click.Choice([synth_service.ORACLE_SOURCE_ARGMAX, synth_service.ORACLE_LATENT]),
              help="Condition on the source argmax class or the latent phone")
@click.option("--samples", default=synth_service.DEFAULT_ORACLE_SAMPLES, show_default=True,
              help="Monte Carlo draws when the languages are noisy")
@handle_errors
def oracle(corpus_dir, source_lang, target_lang, condition, samples):
    """Bayes-optimal mapping accuracy on a synthetic corpus."""
    corpus = synth_service.read_corpus(corpus_dir)
    lookup = synth_service.bayes_map_oracle(corpus.config, source_lang, target_lang, condition, samples)
    accuracy = synth_service.oracle_accuracy(corpus, lookup, source_lang, target_lang)
    click.echo(f"oracle_accuracy={format_metric(accuracy)}")
