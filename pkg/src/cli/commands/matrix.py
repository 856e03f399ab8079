"""Run-matrix and entropy-matrix CLI commands."""

from pathlib import Path

import click

from ...models.fusion import SimilarityTable
from ...models.pipeline import PipelineConfig
from ...services import pipeline_service
from ...services.synth_service import read_corpus
from ..ui.display import display_header, display_similarity, success_message
from ..utils import handle_errors


@click.command("run-matrix")
@click.argument("config_path", type=click.Path(dir_okay=False))
@click.option("--output-dir", type=click.Path(file_okay=False), help="Override the configured output directory")
@click.option("--csv", "csv_path", type=click.Path(dir_okay=False), help="Also write the CSV table here")
@click.pass_context
@handle_errors
def run_matrix(ctx, config_path, output_dir, csv_path):
    """Train, fuse and evaluate every configuration of a pipeline."""
    cfg = PipelineConfig.load(config_path)
    if output_dir:
        cfg.output_dir = output_dir
    if ctx.obj.seed_override is not None:
        cfg.seed = ctx.obj.seed_override
        cfg.training.seed = ctx.obj.seed_override
    cfg.validate()

    result = pipeline_service.PipelineService(cfg).run_matrix()
    display_header(f"{cfg.name}: target {cfg.target}")
    click.echo(pipeline_service.matrix_table(result))
    click.echo()
    display_similarity(SimilarityTable.load(str(Path(cfg.output_dir) / "similarity.txt")))
    if csv_path:
        Path(csv_path).write_text(pipeline_service.matrix_csv(result), encoding="utf-8")
    success_message(f"Results in {cfg.output_dir}")


@click.command("entropy-matrix")
@click.option("--corpus", "corpus_dir", required=True, type=click.Path(file_okay=False), help="Corpus directory")
@click.option("--networks", "networks_dir", required=True, type=click.Path(file_okay=False),
              help="Directory of MNW1 mapping networks")
@handle_errors
def entropy_matrix(corpus_dir, networks_dir):
    """Average mapped entropy of every source-target network."""
    corpus = read_corpus(corpus_dir)
    networks = pipeline_service.load_networks(networks_dir)
    languages = corpus.config.language_ids
    matrix = pipeline_service.entropy_matrix_from_networks(corpus, networks, languages)
    click.echo(pipeline_service.entropy_table(matrix, languages))
