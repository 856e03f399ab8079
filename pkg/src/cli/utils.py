"""CLI utility functions and decorators."""

from functools import wraps
from typing import List, Optional

import click

from ..core.constants import ExitCode
from ..core.exceptions import FileAccessError, PosteriorFusionException, UsageError
from ..core.logger import logger


def error_line(code: str, message: str) -> str:
    """One machine-parsable line: ``error code=<code> message="<text>"``."""
    text = " ".join(str(message).split()).replace('"', "'")
    return f'error code={code} message="{text}"'


def handle_errors(f):
    """Run a command, turning toolkit exceptions into one stderr line and an exit status."""
    @wraps(f)
    def wrapper(*args, **kwargs):
        try:
            return f(*args, **kwargs)
        except PosteriorFusionException as e:
            logger.debug(f"{type(e).__name__}: {e}")
            click.echo(error_line(e.code, str(e)), err=True)
            raise click.exceptions.Exit(int(e.exit_code))
        except OSError as e:
            logger.debug(f"{type(e).__name__}: {e}")
            failure = FileAccessError(f"{e.strerror or e}: {e.filename}" if e.filename else str(e), code="io-error")
            click.echo(error_line(failure.code, str(failure)), err=True)
            raise click.exceptions.Exit(int(failure.exit_code))
        except click.BadParameter as e:
            click.echo(error_line("bad-flag", e.format_message()), err=True)
            raise click.exceptions.Exit(int(ExitCode.USAGE))

    return wrapper


def exclusive(**flags) -> Optional[str]:
    """Name of the single flag that is set; raises when more than one is."""
    given: List[str] = [name for name, value in flags.items() if value not in (None, False, ())]
    if len(given) > 1:
        raise UsageError(
            f"Options {', '.join('--' + name.replace('_', '-') for name in given)} cannot be combined",
            code="conflicting-flags",
        )
    return given[0] if given else None
