from __future__ import annotations

import logging
from pathlib import Path

import click

from core.errors import ConfigError
from core.registry import DescriptorRegistry
from core.store import write_model
from core.txqda import TxqdaConfig, txqda_train
from features.prep import apply_recipe, recipe_to_dict, view_sets

from ._shared import config_option, exit_on_error, load_config, out_option

log = logging.getLogger("txreid.cli")


@click.command("train")
@config_option
@out_option
@click.option("--fusion", default=None, help='Descriptors to fuse, e.g. "cnn+lomo". Defaults to the first configured fusion.')
@click.option("--dim", type=int, default=None, help="d_out to train. Defaults to the first entry of the d_out sweep.")
def train(config_path: Path, out: Path | None, fusion: str | None, dim: int | None) -> None:
    """Fit TXQDA on every paired person and write a TXQD model file."""
    with exit_on_error():
        config = load_config(config_path, out=out)
        registry = DescriptorRegistry()
        registry.reload(config)

        names = tuple(fusion.split("+")) if fusion else config.fusion_list()[0]
        d_out = dim if dim is not None else config.d_out[0]
        if d_out < 1:
            raise ConfigError(f"--dim must be >= 1, got {d_out}")

        source = registry.source(names, config.part_width, standardize=config.standardize)
        ids = source.person_ids
        recipe = source.recipe(ids)
        tensor_a = apply_recipe(recipe, view_sets(source.views, "A"), ids)
        tensor_b = apply_recipe(recipe, view_sets(source.views, "B"), ids)

        model = txqda_train(
            tensor_a,
            tensor_b,
            ids,
            ids,
            TxqdaConfig(
                p_out=config.p_out,
                d_out=d_out,
                max_iters=config.max_iters,
                conv_tol=config.conv_tol,
                reg_eps=config.reg_eps,
            ),
        )
        path = write_model(
            config.model_path,
            model,
            {"recipe": recipe_to_dict(recipe), "config_hash": config.config_hash()},
        )

    log.info(
        "trained %s: P=%d w=%d -> %dx%d in %d iterations",
        source.label, model.parts, model.part_width, config.p_out, d_out, model.iterations_run,
    )
    click.echo(str(path))
