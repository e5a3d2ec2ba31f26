from __future__ import annotations

import logging
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

import click
import numpy as np

from core.errors import FoldFailedError, NumericalError, TxReidError
from models.run_config import RunConfig, load_run_config

log = logging.getLogger("txreid.cli")

EXIT_INPUT = 1
EXIT_NUMERICAL = 2


@dataclass
class CliState:
    workers: int = 1


class CommandFailed(click.ClickException):
    """Printed as "Error: <message>" on stderr; exits with `exit_code`."""

    def __init__(self, message: str, exit_code: int = EXIT_INPUT) -> None:
        super().__init__(message)
        self.exit_code = exit_code


def _is_numerical(exc: BaseException) -> bool:
    return isinstance(exc, (NumericalError, ArithmeticError, np.linalg.LinAlgError))


@contextmanager
def exit_on_error() -> Iterator[None]:
    try:
        yield
    except FoldFailedError as exc:
        raise CommandFailed(str(exc), EXIT_NUMERICAL if _is_numerical(exc.cause) else EXIT_INPUT) from exc
    except (NumericalError, ArithmeticError, np.linalg.LinAlgError) as exc:
        # LinAlgError subclasses ValueError, so it is matched here first
        raise CommandFailed(f"numerical failure: {exc}", EXIT_NUMERICAL) from exc
    except KeyError as exc:
        raise CommandFailed(str(exc.args[0] if exc.args else exc)) from exc
    except (TxReidError, FileNotFoundError, ValueError, IndexError) as exc:
        raise CommandFailed(str(exc)) from exc


def cli_state() -> CliState:
    return click.get_current_context().ensure_object(CliState)


def load_config(path: Path, *, seed: int | None = None, out: Path | None = None) -> RunConfig:
    config = load_run_config(path, seed=seed)
    if out is not None:
        out = out.resolve()
        config = config.model_copy(update={"out_dir": out, "model_path": out / config.model_path.name})
    return config


config_option = click.option(
    "--config",
    "config_path",
    type=click.Path(path_type=Path, dir_okay=False),
    required=True,
    help="JSON run config (see docs/config.md).",
)
seed_option = click.option("--seed", type=int, default=None, help="Override the config's fold seed.")
out_option = click.option(
    "--out",
    type=click.Path(path_type=Path, file_okay=False),
    default=None,
    help="Output directory (overrides out_dir in the config).",
)
format_option = click.option(
    "--format",
    "file_format",
    type=click.Choice(["csv", "bin"]),
    default=None,
    help="Descriptor file format: csv or bin (TFV1).",
)
