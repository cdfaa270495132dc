"""CLI entry point for fringe-lab."""
import asyncio
import logging
import os
import sys
import threading
from pathlib import Path
from typing import Dict, Optional

import click
from rich.console import Console
from rich.logging import RichHandler
from rich.panel import Panel
from rich.progress import Progress, SpinnerColumn, TextColumn, BarColumn, TaskProgressColumn, TimeElapsedColumn
from rich.table import Table

from .artifacts import ArtifactWriter
from .config import DEFAULTS, LabConfig, env_var, find_config_file, get_config
from .errors import ConfigError, NumericalAbort, VerdictFailure
from .fringe import PhaseConvention
from .orchestrator import ExperimentOrchestrator
from .report import VerdictReport
from .scenario import SCENARIOS, ScenarioConfig, load_scenario, preset_yaml

console = Console()
logger = logging.getLogger("fringe_lab")

EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_VERDICT = 4
EXIT_INTERRUPTED = 130


def setup_logging(verbose: bool, log_level: str = "INFO"):
    """Route all logging through the shared rich console; ``-v`` forces DEBUG."""
    level = "DEBUG" if verbose else log_level.upper()
    if not isinstance(logging.getLevelName(level), int):
        level = "INFO"

    logging.basicConfig(
        level=level,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=console, rich_tracebacks=True, show_path=False)],
        force=True,
    )


def validate_config(config: LabConfig) -> bool:
    """Print lab-config problems; False when there are any."""
    problems = config.validate()
    if not problems:
        return True
    console.print("[bold red]Configuration errors:[/bold red]")
    console.print("\n".join(f"  [red]• {problem}[/red]" for problem in problems))
    return False


def print_banner(scenario: ScenarioConfig, out_dir: Path, convention: str, **kwargs):
    """Print run banner with the key settings."""
    grid = scenario.grid
    shape = f"{grid.nx}" if grid.dims == 1 else f"{grid.nx} x {grid.ny}"
    lines = [
        f"[bold cyan]fringe-lab - {scenario.scenario}[/bold cyan]",
        "",
        f"[dim]Grid:[/dim] {shape}",
        f"[dim]Convention:[/dim] {convention}",
        f"[dim]Output:[/dim] {out_dir}",
    ]

    for key, value in kwargs.items():
        display_key = key.replace('_', ' ').title()
        lines.append(f"[dim]{display_key}:[/dim] {value}")

    console.print(Panel("\n".join(lines), border_style="cyan"))


def scenario_options(fn):
    """Options shared by every scenario command."""
    fn = click.option('--seed', default=None, type=int, help='Reserved; runs are deterministic')(fn)
    fn = click.option('--convention', default=None, type=click.Choice([c.value for c in PhaseConvention]),
                      help='Phase convention for analytic columns (default: from config)')(fn)
    fn = click.option('--out', '-o', 'out', default=None, help='Output directory (default: results)')(fn)
    fn = click.option('--config', 'scenario_path', default=None, help='Scenario YAML file')(fn)
    return fn


@click.group()
@click.option('--config', '-c', 'config_path', default=None, help='Path to scenario YAML file')
@click.option('--verbose', '-v', is_flag=True, help='Enable verbose/debug output')
@click.pass_context
def cli(ctx, config_path, verbose):
    """fringe-lab: two-slit, Aharonov-Bohm and gausson experiments in silico.

    Examples:

        # Analytic patterns with the default geometry
        fringe-lab fringe

        # 2D double-slit run from a scenario file
        fringe-lab -c my-slits.yaml evolve2d --out runs/slits

        # End-to-end verdict
        fringe-lab suite
    """
    ctx.ensure_object(dict)

    # a discovered fringe-lab.yaml supplies the physics as well as the lab settings
    config_path = config_path or find_config_file()
    config = _load_config(config_path)
    ctx.obj['config'] = config
    ctx.obj['config_path'] = config_path
    ctx.obj['verbose'] = verbose

    setup_logging(verbose, config.log_level)


def _load_config(path: Optional[str]) -> LabConfig:
    try:
        return get_config(path)
    except ConfigError as e:
        console.print(f"[bold red]Configuration error:[/bold red] {e}")
        sys.exit(EXIT_CONFIG)


def _run_scenario(ctx, name: str, scenario_path: Optional[str], out: Optional[str],
                  convention: Optional[str], seed: Optional[int]):
    verbose = ctx.obj['verbose']
    path = scenario_path or ctx.obj['config_path']
    config = _load_config(path) if scenario_path else ctx.obj['config']

    if out:
        config.output_dir = out
    if convention:
        config.default_convention = convention

    if not validate_config(config):
        sys.exit(EXIT_CONFIG)

    try:
        scenario = load_scenario(path, name)
    except ConfigError as e:
        console.print(f"[bold red]Configuration error:[/bold red] {e}")
        sys.exit(EXIT_CONFIG)

    out_dir = Path(config.output_dir) / name
    svg = scenario.output.svg if scenario.output.svg is not None else config.svg_plots
    precision = scenario.output.precision or config.csv_precision
    if seed is not None:
        logger.info(f"Seed {seed} recorded; runs are deterministic and do not use it")

    try:
        writer = ArtifactWriter(out_dir, scenario.resolved(), precision=precision, svg=svg)
        report = VerdictReport(name, writer.digest)
        orchestrator = ExperimentOrchestrator(scenario, writer, report, config, convention)
        print_banner(scenario, out_dir, orchestrator.convention.value, config_hash=writer.digest[:12])
        asyncio.run(_run(orchestrator, seed))
    except KeyboardInterrupt:
        console.print("\n[yellow]Run interrupted by user[/yellow]")
        sys.exit(EXIT_INTERRUPTED)
    except ConfigError as e:
        console.print(f"\n[bold red]Configuration error:[/bold red] {e}")
        sys.exit(EXIT_CONFIG)
    except NumericalAbort as e:
        console.print(f"\n[bold red]Numerical abort:[/bold red] {e}")
        sys.exit(EXIT_NUMERICAL)
    except Exception as e:
        console.print(f"\n[bold red]Run failed:[/bold red] {e}")
        if verbose:
            console.print_exception()
        sys.exit(1)

    report.print_summary(console)
    verdict_path = out_dir / "verdict.json"
    report.save_report(str(verdict_path))
    console.print(f"\n[green]✓ Artifacts written to {out_dir}[/green]")

    if name == "suite" and not report.passed:
        failure = VerdictFailure(report.failed)
        console.print(f"[bold red]Verdict:[/bold red] {failure}")
        sys.exit(EXIT_VERDICT)


async def _run(orchestrator: ExperimentOrchestrator, seed: Optional[int] = None):
    with Progress(
        SpinnerColumn(),
        TextColumn("[progress.description]{task.description}"),
        BarColumn(),
        TaskProgressColumn(),
        TimeElapsedColumn(),
        console=console,
    ) as progress:
        tasks: Dict[str, int] = {}
        lock = threading.Lock()

        def update(label: str, completed: int, total: int):
            with lock:
                if label not in tasks:
                    tasks[label] = progress.add_task(f"[cyan]{label}", total=total)
            progress.update(tasks[label], completed=completed)

        await orchestrator.run(progress_callback=update, seed=seed)


@cli.command()
@scenario_options
@click.pass_context
def fringe(ctx, scenario_path, out, convention, seed):
    """Closed-form two-slit patterns under both phase conventions.

    Writes I(theta) side by side for the half-phase and standard conventions,
    the magnetic and solenoid columns when fields are configured, and the
    flux-periodicity sweep.
    """
    _run_scenario(ctx, "fringe", scenario_path, out, convention, seed)


@cli.command()
@scenario_options
@click.pass_context
def ab(ctx, scenario_path, out, convention, seed):
    """Aharonov-Bohm run: solenoid behind the slits with its core walled off.

    Measures the fringe shift against a reference run and repeats at a second
    radius of equal flux when fields.alternate_radius is set.
    """
    _run_scenario(ctx, "ab", scenario_path, out, convention, seed)


@cli.command()
@scenario_options
@click.pass_context
def evolve2d(ctx, scenario_path, out, convention, seed):
    """2D double-slit evolution and screen pattern.

    With fields.B_ext set, a Landau-gauge run between barrier and screen is
    compared against the field-free pattern.
    """
    _run_scenario(ctx, "evolve2d", scenario_path, out, convention, seed)


@cli.command()
@scenario_options
@click.pass_context
def madelung(ctx, scenario_path, out, convention, seed):
    """Hydrodynamic fields and continuity, Hamilton-Jacobi and Euler residuals."""
    _run_scenario(ctx, "madelung", scenario_path, out, convention, seed)


@cli.command()
@scenario_options
@click.pass_context
def gausson(ctx, scenario_path, out, convention, seed):
    """Gausson under the log nonlinearity against the analytic soliton and a b=0 control."""
    _run_scenario(ctx, "gausson", scenario_path, out, convention, seed)


@cli.command()
@scenario_options
@click.pass_context
def suite(ctx, scenario_path, out, convention, seed):
    """Fringe spacing, AB shift and gausson rigidity with a pass/fail verdict.

    Exits with status 4 when any check fails.
    """
    _run_scenario(ctx, "suite", scenario_path, out, convention, seed)


@cli.command()
@click.argument('scenario', required=False, type=click.Choice(SCENARIOS))
@click.pass_context
def show_config(ctx, scenario):
    """Show current configuration.

    Displays the merged run configuration from defaults, config file and
    environment variables; with SCENARIO also the resolved scenario.
    """
    config = ctx.obj['config']

    table = Table(title="Current Configuration")
    table.add_column("Setting", style="cyan")
    table.add_column("Value", style="green")
    table.add_column("Source", style="dim")

    for key, value in config.to_dict().items():
        table.add_row(key, str(value) if value is not None else "-", _source(key, value))

    console.print(table)

    if scenario:
        try:
            resolved = load_scenario(ctx.obj['config_path'], scenario).resolved()
        except ConfigError as e:
            console.print(f"[bold red]Configuration error:[/bold red] {e}")
            sys.exit(EXIT_CONFIG)

        scenario_table = Table(title=f"Scenario: {scenario}")
        scenario_table.add_column("Key", style="cyan")
        scenario_table.add_column("Value", style="green")
        for key, value in _flatten(resolved).items():
            scenario_table.add_row(key, str(value) if value is not None else "-")
        console.print(scenario_table)


def _source(key: str, value) -> str:
    if os.environ.get(env_var(key)):
        return env_var(key)
    return "default" if value == DEFAULTS.get(key) else "file"


def _flatten(data: dict, prefix: str = "") -> dict:
    flat = {}
    for key, value in data.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict) and value:
            flat.update(_flatten(value, f"{name}."))
        else:
            flat[name] = value
    return flat


@cli.command()
@click.argument('scenario', type=click.Choice(SCENARIOS))
@click.option('--path', default="fringe-lab.yaml", help='File to write (default: fringe-lab.yaml)')
@click.option('--force', is_flag=True, help='Overwrite an existing file')
def init(scenario, path, force):
    """Create a scenario file from a preset.

    Writes every key of the resolved preset so the file documents the full
    schema; delete what you do not want to change.
    """
    config_path = Path(path)
    if config_path.exists() and not force:
        if not click.confirm(f"{config_path} already exists. Overwrite?", default=False):
            console.print("[dim]Cancelled[/dim]")
            return

    config_path.write_text(preset_yaml(scenario))
    console.print(f"[green]✓ Created {config_path}[/green]")
    console.print("\n[dim]Edit this file, then run: fringe-lab -c "
                  f"{config_path} {scenario}[/dim]")


if __name__ == '__main__':
    cli()
