from __future__ import annotations

from pathlib import Path

import click

from core.registry import DescriptorRegistry
from features.io import default_filename, write_feature_set
from features.prep import part_count

from ._shared import config_option, exit_on_error, format_option, load_config, out_option


@click.command("ingest")
@config_option
@out_option
@format_option
def ingest(config_path: Path, out: Path | None, file_format: str | None) -> None:
    """
    Load, validate and align every descriptor named in the config.

    With --format, the aligned views are also rewritten in that format under
    the output directory.
    """
    with exit_on_error():
        config = load_config(config_path, out=out)
        registry = DescriptorRegistry()
        registry.reload(config)

        for entry in registry.summary():
            parts = part_count(entry["dim"], config.part_width)
            click.echo(f"{entry['name']}: {entry['persons']} persons, dim {entry['dim']}, {parts} parts")

        if file_format is None:
            return
        for _, pv in registry.items():
            for fs in (pv.view_a, pv.view_b):
                path = write_feature_set(fs, config.out_dir / default_filename(fs, file_format), file_format)
                click.echo(str(path))
