from __future__ import annotations

import logging
from pathlib import Path

import click

from features.io import default_filename, write_feature_set
from features.synth import generate_crossview
from models.run_config import load_synth_config
from models.synth_config import SynthConfig

from ._shared import exit_on_error, format_option

log = logging.getLogger("txreid.cli")


@click.command("synth")
@click.option(
    "--config",
    "config_path",
    type=click.Path(path_type=Path, dir_okay=False),
    default=None,
    help="SynthConfig JSON, or a run config with a `synth` block. Defaults apply when omitted.",
)
@click.option("--seed", type=int, default=None, help="Override sample_seed.")
@click.option(
    "--out",
    type=click.Path(path_type=Path, file_okay=False),
    default=Path("out"),
    show_default=True,
    help="Directory for the two view files.",
)
@format_option
def synth(config_path: Path | None, seed: int | None, out: Path, file_format: str | None) -> None:
    """Write a deterministic synthetic pair of view files (A and B)."""
    file_format = file_format or "csv"
    with exit_on_error():
        if config_path is not None:
            cfg = load_synth_config(config_path, sample_seed=seed)
        else:
            cfg = SynthConfig() if seed is None else SynthConfig(sample_seed=seed)

        view_a, view_b = generate_crossview(cfg)
        for fs in (view_a, view_b):
            path = write_feature_set(fs, out / default_filename(fs, file_format), file_format)
            click.echo(str(path))
    log.info("synth: %d persons x %d features (%s)", cfg.n_persons, cfg.feature_dim, file_format)
