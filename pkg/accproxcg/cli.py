"""
Command-line interface for accproxcg.

This module provides the ``accproxcg`` entry point: running and validating
experiment specs, evaluating the rate-constant calculators and inspecting
LIBSVM files.
"""

import asyncio
import json
import os
import sys
import time
from typing import Any, Dict, Optional, Tuple

import click
import nest_asyncio
from dotenv import load_dotenv
from pydantic import ValidationError
from rich.console import Console
from rich.progress import BarColumn, Progress, SpinnerColumn, TextColumn, TimeElapsedColumn
from rich.table import Table

from accproxcg import __version__
from accproxcg.config import AppConfig, setup_logging
from accproxcg.data_io import SparseDataset, is_synthetic_path
from accproxcg.errors import AccProxCGError, ArgumentError, LibSVMParseError, SpecError
from accproxcg.losses import lipschitz_constant
from accproxcg.orchestrator import (
    ExperimentResult,
    load_dataset,
    load_spec,
    plan_runs,
    run_experiment,
)
from accproxcg.reporting import emit_diagnostics_table, emit_summary
from accproxcg.schemas import DatasetSpec, ExperimentSpec, TheoryInputs
from accproxcg.theory import theory_report

nest_asyncio.apply()

load_dotenv()

EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_ALL_DIVERGED = 3


@click.group()
@click.version_option(__version__, prog_name="accproxcg")
def cli():
    """accproxcg - accelerated proximal stochastic conjugate-gradient experiments."""
    pass


def _load_spec_or_exit(console: Console, spec_path: str) -> ExperimentSpec:
    try:
        return load_spec(spec_path)
    except SpecError as e:
        console.print(f"[bold red]❌ Invalid spec:[/] {e}")
        sys.exit(EXIT_USAGE)
    except OSError as e:
        console.print(f"[bold red]❌ Cannot read spec:[/] {e}")
        sys.exit(EXIT_USAGE)


def _load_dataset_or_exit(console: Console, spec: DatasetSpec) -> SparseDataset:
    try:
        return load_dataset(spec)
    except (OSError, LibSVMParseError, ArgumentError) as e:
        console.print(f"[bold red]❌ Data error:[/] {e}")
        sys.exit(EXIT_DATA)


async def run(
    spec_path: str,
    output_dir: Optional[str],
    workers: Optional[int],
    debug: bool,
    no_progress: bool = False,
) -> ExperimentResult:
    """Asynchronous implementation of the ``run`` command."""
    console = Console()

    config = AppConfig.from_env_and_args(output_dir=output_dir, max_workers=workers, debug=debug)
    if not config.validate():
        sys.exit(EXIT_USAGE)
    setup_logging(config.log_level)

    spec = _load_spec_or_exit(console, spec_path)
    dataset = _load_dataset_or_exit(console, spec.dataset)

    try:
        total = len(plan_runs(spec, dataset))
    except SpecError as e:
        console.print(f"[bold red]❌ Invalid spec:[/] {e}")
        sys.exit(EXIT_USAGE)

    title = spec.name or os.path.basename(spec_path)
    console.print(f"[bold blue]🚀 Running[/] [bold green]{title}[/] on {dataset.name}")
    console.print(f"[dim]{total} runs, {config.max_workers} worker(s)[/]")

    start_time = time.time()
    if no_progress:
        result = await run_experiment(spec, config, dataset=dataset)
    else:
        with Progress(
            SpinnerColumn(),
            TextColumn("[bold blue]{task.description}[/]"),
            BarColumn(),
            TextColumn("{task.completed}/{task.total}"),
            TimeElapsedColumn(),
            console=console,
        ) as progress:
            task = progress.add_task("[yellow]Optimizing...[/]", total=total)

            async def progress_callback(done: int, total_runs: int, run_id: str) -> None:
                progress.update(task, completed=done, description=f"[yellow]{run_id}[/]")

            result = await run_experiment(
                spec, config, progress_callback=progress_callback, dataset=dataset
            )
            progress.update(task, description="[green]All runs finished[/]")

    elapsed_time = time.time() - start_time
    emit_summary(result.rows, console=console)
    emit_diagnostics_table(result.diagnostics, console=console)

    if result.failures:
        console.print(f"[bold yellow]⚠️ {result.failures} of {total} runs failed:[/]")
        for trace in result.traces:
            if trace.status == "failed":
                console.print(f"[red]- {trace.algorithm}: {trace.error}[/]")

    console.print(f"\n[bold green]✅ Finished in {elapsed_time:.1f} seconds[/]")
    console.print(f"[bold]📂 Metrics:[/] {result.output_path}")
    console.print(f"[bold]📂 Diagnostics:[/] {result.diagnostics_path}")
    console.print(f"[dim]lambda = {result.lam:.6g}, best objective = {result.p_star:.17g}[/]")
    return result


@cli.command(name="run")
@click.argument("spec_path", type=click.Path(dir_okay=False))
@click.option("--output-dir", help="Directory that overrides the spec's output location.", default=None)
@click.option("--workers", help="Maximum number of concurrent runs.", type=int, default=None)
@click.option("--debug", help="Enable debug logging.", is_flag=True, default=False)
@click.option("--no-progress", help="Disable the progress bar.", is_flag=True, default=False)
def sync_run(spec_path, output_dir, workers, debug, no_progress):
    """Run every algorithm and seed of an experiment spec."""
    try:
        result = asyncio.run(run(spec_path, output_dir, workers, debug, no_progress))
    except SpecError as e:
        Console().print(f"[bold red]❌ Invalid spec:[/] {e}")
        sys.exit(EXIT_USAGE)
    except OSError as e:
        Console().print(f"[bold red]❌ Error writing results:[/] {e}")
        sys.exit(EXIT_DATA)
    if result.all_failed:
        sys.exit(EXIT_ALL_DIVERGED)


@cli.command()
@click.argument("spec_path", type=click.Path(dir_okay=False))
@click.option(
    "--expand",
    help="Also load the dataset and print the resolved configuration of every run.",
    is_flag=True,
    default=False,
)
def validate(spec_path, expand):
    """Check an experiment spec without running it."""
    console = Console()
    spec = _load_spec_or_exit(console, spec_path)

    console.print(f"[bold green]✅ Spec is valid[/] ({len(spec.runs)} entries, {len(spec.seeds)} seeds)")
    console.print(f"[cyan]Dataset:[/] {spec.dataset.path}")
    console.print(f"[cyan]Loss:[/] {spec.loss.value} (L = {lipschitz_constant(spec.loss)})")
    console.print(f"[cyan]Lambda:[/] {spec.lam}")
    console.print(f"[cyan]Output:[/] {spec.output}")

    if not expand:
        return

    dataset = _load_dataset_or_exit(console, spec.dataset)
    try:
        plans = plan_runs(spec, dataset)
    except SpecError as e:
        console.print(f"[bold red]❌ Invalid spec:[/] {e}")
        sys.exit(EXIT_USAGE)

    table = Table(title=f"Runs on {dataset.name} (n={dataset.n}, d={dataset.d})")
    table.add_column("Run", style="cyan")
    table.add_column("Algorithm")
    table.add_column("b", justify="right")
    table.add_column("m", justify="right")
    table.add_column("gamma", justify="right")
    table.add_column("beta")
    table.add_column("step", justify="right")
    for plan in plans:
        cfg = plan.config
        step = f"{cfg.eta_fixed:.4g}" if cfg.eta_fixed is not None else f"<= {cfg.eta2:g}"
        table.add_row(
            plan.run_id,
            plan.algorithm,
            str(cfg.batch_size),
            str(cfg.epoch_length),
            f"{cfg.gamma:.4g}",
            cfg.beta_formula.rule.value,
            step,
        )
    console.print(table)


def _format_report_value(value: Any) -> str:
    if value is None:
        return "-"
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, float):
        return f"{value:.6g}"
    if isinstance(value, dict):
        return ", ".join(f"{k}={_format_report_value(v)}" for k, v in value.items())
    return str(value)


@cli.command()
@click.argument("inputs_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--delta", help="Scaled initial sub-optimality for the radii.", type=float, default=0.0)
@click.option("--json", "as_json", help="Print the report as JSON.", is_flag=True, default=False)
def theory(inputs_path, delta, as_json):
    """Evaluate the rate constants, feasibility and suggested gamma for given inputs."""
    console = Console()
    try:
        with open(inputs_path, "r", encoding="utf-8") as handle:
            inputs = TheoryInputs.model_validate(json.load(handle))
        report: Dict[str, Any] = theory_report(inputs, delta=delta)
    except (json.JSONDecodeError, ValidationError, ArgumentError) as e:
        console.print(f"[bold red]❌ Error:[/] {e}")
        sys.exit(EXIT_USAGE)

    if as_json:
        click.echo(json.dumps(report, indent=2))
        return

    table = Table(title="Rate constants")
    table.add_column("Quantity", style="cyan")
    table.add_column("Value", justify="right")
    for key, value in report.items():
        table.add_row(key, _format_report_value(value))
    console.print(table)


def _parse_label_pairs(pairs: Tuple[str, ...]) -> Optional[Dict[str, int]]:
    if not pairs:
        return None
    mapping: Dict[str, int] = {}
    for pair in pairs:
        raw, sep, mapped = pair.rpartition(":")
        if not sep or not raw:
            raise click.BadParameter(f"{pair!r} is not RAW:MAPPED")
        try:
            mapping[raw] = int(mapped)
        except ValueError:
            raise click.BadParameter(f"{pair!r} maps to a non-integer label")
    return mapping


@cli.command(name="check-data")
@click.argument("path")
@click.option("--n-features", help="Feature dimension override.", type=int, default=None)
@click.option("--normalize/--raw", help="Normalize rows before reporting.", default=False)
@click.option(
    "--label-map",
    "label_pairs",
    help="Map a raw label to -1 or +1, as RAW:MAPPED. Repeatable.",
    multiple=True,
)
def check_data(path, n_features, normalize, label_pairs):
    """Parse a LIBSVM file (or a synthetic: description) and print its statistics."""
    console = Console()
    try:
        spec = DatasetSpec(
            path=path,
            normalize=normalize,
            n_features=n_features,
            label_map=_parse_label_pairs(label_pairs),
        )
    except (click.BadParameter, ValidationError) as e:
        console.print(f"[bold red]❌ Invalid option:[/] {e}")
        sys.exit(EXIT_USAGE)

    if not is_synthetic_path(path) and not os.path.isfile(path):
        console.print(f"[bold red]❌ No such file:[/] {path}")
        sys.exit(EXIT_DATA)

    dataset = _load_dataset_or_exit(console, spec)
    stats = dataset.stats()

    console.print(f"[bold green]✅ Parsed[/] {dataset.name}")
    table = Table(title="Dataset statistics")
    table.add_column("Statistic", style="cyan")
    table.add_column("Value", justify="right")
    for key, value in stats.items():
        table.add_row(key, f"{value:.6g}" if isinstance(value, float) else str(value))
    console.print(table)


@cli.command()
def version():
    """Print the package version."""
    click.echo(f"accproxcg {__version__}")


def main():
    """Entry point for the application."""
    try:
        cli()
    except AccProxCGError as e:
        Console().print(f"[bold red]❌ Error:[/] {e}")
        sys.exit(EXIT_USAGE)


if __name__ == "__main__":
    main()
