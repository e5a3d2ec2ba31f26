from __future__ import annotations

import logging
from pathlib import Path

import click

from core.engine import ProtocolConfig, run_protocol
from core.registry import DescriptorRegistry
from core.store import ReportStore
from core.view import format_table

from ._shared import cli_state, config_option, exit_on_error, load_config, out_option, seed_option

log = logging.getLogger("txreid.cli")


@click.command("evaluate")
@config_option
@seed_option
@out_option
@click.option("--timings", is_flag=True, help="Include per-fold runtimes in the JSON report.")
def evaluate(config_path: Path, seed: int | None, out: Path | None, timings: bool) -> None:
    """
    Cross-validated CMC evaluation over the configured fusions and Dim sweep.

    Writes report-<hash>-s<seed>.json, the matching .csv table and a
    -curves.csv of mean CMC curves under the output directory.
    """
    with exit_on_error():
        config = load_config(config_path, seed=seed, out=out)
        registry = DescriptorRegistry()
        registry.reload(config)

        proto = ProtocolConfig(
            dims=tuple(config.d_out),
            p_out=config.p_out,
            method=config.method,
            max_iters=config.max_iters,
            conv_tol=config.conv_tol,
            reg_eps=config.reg_eps,
            folds=config.folds,
            train_fraction=config.train_fraction,
            seed=config.seed,
            direction=config.direction,
            workers=cli_state().workers,
        )

        reports = []
        for fusion in config.fusion_list():
            source = registry.source(fusion, config.part_width, standardize=config.standardize)
            reports.extend(run_protocol(source, proto))

        gallery = min(report.gallery_size for report in reports)
        ranks = [rank for rank in config.report_ranks if rank <= gallery]
        if len(ranks) < len(config.report_ranks):
            log.warning("dropping report ranks above the gallery size %d", gallery)
        table = format_table(reports, ranks)

        store = ReportStore(config.out_dir, f"report-{config.config_hash()}-s{config.seed}")
        paths = store.flush(reports, table, include_timings=timings)

    click.echo(table.text, nl=False)
    for path in paths:
        click.echo(str(path))
