#!/usr/bin/env python3
"""
Posterior Fusion Toolkit

Cross-lingual acoustic model fusion through posterior mapping networks.
"""

import copy
import sys
from pathlib import Path
from typing import Optional

import click

# Add src to Python path
sys.path.insert(0, str(Path(__file__).parent / "src"))

from src.core.config import ConfigManager, config_manager
from src.core.exceptions import PosteriorFusionException
from src.core.logger import logger
from src.cli.utils import error_line
from src.cli.commands.evaluate import evaluate
from src.cli.commands.fusion import fuse
from src.cli.commands.mapping import map_cmd, train_map
from src.cli.commands.matrix import entropy_matrix, run_matrix
from src.cli.commands.synth import gen_synth, oracle


class AppContext:
    """
    Application-wide settings shared by every command: loaded configuration
    plus the command-line seed.
    """
    def __init__(self, config_path: Optional[str] = None, seed: Optional[int] = None):
        manager = ConfigManager(config_path) if config_path else config_manager
        self.config = copy.deepcopy(manager.load_config())
        self.seed_override = seed

    @property
    def seed(self) -> int:
        return self.seed_override if self.seed_override is not None else self.config.seed


@click.group()
@click.option('--seed', type=click.IntRange(0, 2**64 - 1), default=None, help='Master random seed')
@click.option('--verbose', is_flag=True, help='Enable debug logging')
@click.option('--log-file', help='Log file path')
@click.option('--config', 'config_path', type=click.Path(dir_okay=False), help='Settings file')
@click.pass_context
def cli(ctx, seed, verbose, log_file, config_path):
    """Posterior Fusion Toolkit - map, fuse and evaluate acoustic model posteriors."""
    try:
        ctx.obj = AppContext(config_path, seed)
    except PosteriorFusionException as e:
        click.echo(error_line(e.code, str(e)), err=True)
        ctx.exit(int(e.exit_code))

    if verbose:
        ctx.obj.config.debug = True
        ctx.obj.config.log_level = "DEBUG"

    if log_file:
        ctx.obj.config.log_file = log_file

    logger.configure(
        level=ctx.obj.config.log_level,
        log_file=ctx.obj.config.log_file,
        debug=ctx.obj.config.debug
    )


cli.add_command(gen_synth)
cli.add_command(oracle)
cli.add_command(train_map)
cli.add_command(map_cmd)
cli.add_command(fuse)
cli.add_command(evaluate)
cli.add_command(run_matrix)
cli.add_command(entropy_matrix)


if __name__ == '__main__':
    cli()
