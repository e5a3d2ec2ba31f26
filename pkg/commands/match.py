from __future__ import annotations

import csv
import io
import logging
from dataclasses import replace
from pathlib import Path
from typing import Sequence

import click

from core.errors import ConfigError, EmptyIntersectionError, ModelFormatError
from core.matching import gallery_distances, rank_distances
from core.store import atomic_write_text, read_model
from core.txqda import project
from features.base import FeatureSet
from features.io import load_feature_set
from features.prep import TensorRecipe, apply_recipe, recipe_from_dict

from ._shared import exit_on_error, format_option

log = logging.getLogger("txreid.cli")

CSV_HEADER = ["probe_id", "rank", "gallery_id", "distance", "similarity"]


def _parse_specs(specs: Sequence[str], fusion: tuple[str, ...], option: str) -> dict[str, Path]:
    """NAME=PATH pairs; a bare PATH is accepted when the model fuses a single descriptor."""
    paths: dict[str, Path] = {}
    for spec in specs:
        name, sep, raw = spec.partition("=")
        if not sep:
            if len(fusion) != 1:
                raise ConfigError(f"{option} {spec!r}: model fuses {'+'.join(fusion)}, use NAME=PATH")
            name, raw = fusion[0], spec
        if name not in fusion:
            raise ConfigError(f"{option} {spec!r}: model has no descriptor {name!r} (has {'+'.join(fusion)})")
        if name in paths:
            raise ConfigError(f"{option}: descriptor {name!r} given twice")
        paths[name] = Path(raw)
    missing = [name for name in fusion if name not in paths]
    if missing:
        raise ConfigError(f"{option}: missing files for descriptors {missing}")
    return paths


def _load_side(paths: dict[str, Path], file_format: str | None) -> tuple[dict[str, FeatureSet], list[int]]:
    sets = {
        name: load_feature_set(path, file_format, descriptor_name=name)
        for name, path in paths.items()
    }
    shared = set.intersection(*(set(fs.person_ids) for fs in sets.values()))
    if not shared:
        raise EmptyIntersectionError(f"descriptor files {sorted(paths)} share no person_id")
    return sets, sorted(shared)


def _model_recipe(metadata: dict, part_width: int | None) -> TensorRecipe:
    try:
        recipe = recipe_from_dict(metadata["recipe"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"model carries no usable preprocessing recipe ({exc})") from None
    if part_width is not None and part_width != recipe.part_width:
        log.warning("tensorizing at w=%d, model was trained at w=%d", part_width, recipe.part_width)
        recipe = replace(recipe, part_width=part_width)
    return recipe


@click.command("match")
@click.option(
    "--model",
    "model_path",
    type=click.Path(path_type=Path, dir_okay=False),
    required=True,
    help="TXQD model file written by `train`.",
)
@click.option("--probe", "probe_specs", multiple=True, required=True, help="Probe file as NAME=PATH (repeatable).")
@click.option("--gallery", "gallery_specs", multiple=True, required=True, help="Gallery file as NAME=PATH (repeatable).")
@click.option("--part-width", type=int, default=None, help="Part width w. Defaults to the model's.")
@click.option("--top", type=int, default=None, help="Keep only the best K gallery entries per probe.")
@click.option(
    "--out",
    type=click.Path(path_type=Path, dir_okay=False),
    default=None,
    help="Write the ranking CSV here instead of stdout.",
)
@format_option
def match(
    model_path: Path,
    probe_specs: tuple[str, ...],
    gallery_specs: tuple[str, ...],
    part_width: int | None,
    top: int | None,
    out: Path | None,
    file_format: str | None,
) -> None:
    """Rank every gallery identity for each probe identity."""
    with exit_on_error():
        model, metadata = read_model(model_path)
        recipe = _model_recipe(metadata, part_width)

        probe_sets, probe_ids = _load_side(_parse_specs(probe_specs, recipe.fusion, "--probe"), file_format)
        gallery_sets, gallery_ids = _load_side(_parse_specs(gallery_specs, recipe.fusion, "--gallery"), file_format)

        probes = project(model, apply_recipe(recipe, probe_sets, probe_ids))
        gallery = project(model, apply_recipe(recipe, gallery_sets, gallery_ids))

        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for probe_id, row in zip(probe_ids, probes):
            ranked = rank_distances(gallery_distances(row, gallery, model.M))
            keep = len(ranked) if top is None else max(0, min(top, len(ranked)))
            for position in range(keep):
                writer.writerow(
                    [
                        probe_id,
                        position + 1,
                        gallery_ids[int(ranked.order[position])],
                        repr(float(ranked.distances[position])),
                        repr(float(ranked.similarities[position])),
                    ]
                )

        if out is not None:
            atomic_write_text(out, buf.getvalue())
            log.info("ranked %d probes against %d gallery entries -> %s", len(probe_ids), len(gallery_ids), out)
        else:
            click.echo(buf.getvalue(), nl=False)
