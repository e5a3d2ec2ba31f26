from __future__ import annotations

import logging
import os
from pathlib import Path

import click
from dotenv import load_dotenv

from commands._shared import CliState
from commands.evaluate import evaluate
from commands.ingest import ingest
from commands.match import match
from commands.synth import synth
from commands.train import train

BASE_DIR = Path(__file__).resolve().parent

load_dotenv(BASE_DIR / ".env")

LOG_LEVEL = os.getenv("TXREID_LOG_LEVEL", "INFO")
LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def _workers() -> int:
    raw = os.getenv("TXREID_WORKERS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise click.UsageError(f"TXREID_WORKERS must be an integer, got {raw!r}") from None


@click.group()
@click.option(
    "--log-level",
    type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"], case_sensitive=False),
    default=None,
    help="Overrides TXREID_LOG_LEVEL.",
)
@click.pass_context
def cli(ctx: click.Context, log_level: str | None) -> None:
    """txreid: tensor cross-view metric learning for person re-identification."""
    # no-op when the host (e.g. pytest) already installed handlers
    logging.basicConfig(level=(log_level or LOG_LEVEL).upper(), format=LOG_FORMAT)
    ctx.obj = CliState(workers=_workers())


cli.add_command(synth)
cli.add_command(ingest)
cli.add_command(train)
cli.add_command(evaluate)
cli.add_command(match)


if __name__ == "__main__":
    cli()
