#!/usr/bin/env python3
"""
bellbench – CHSH Bell-test simulation and analysis
==================================================
Commands:
  • simulate – simulate a 16-setting experiment, write records CSV + report JSON
  • analyze  – estimate S, its error budget and significance from a records CSV
  • optimize – coordinate-scan search for the angles maximizing |S|
  • bounds   – CHSH value and no-signaling check of a behavior table
  • budget   – error budget of recorded or expected counts
Exit codes: 0 success, 3 configuration, 4 data, 5 non-convergence, 6 output I/O.
"""

import json
from pathlib import Path
from typing import Any, Dict, NoReturn, Optional

import typer
from rich.console import Console
from rich.table import Table

from bellbench import __version__
from bellbench.application.services import ApplicationCoordinator, BoundsService, REPORT_FILENAME
from bellbench.domain.bounds import builtin_behavior
from bellbench.domain.models import ErrorBudget
from bellbench.exceptions import BellBenchError, ConfigurationError, OutputError, format_error_message
from bellbench.infrastructure.config import RunConfig, load_config
from bellbench.infrastructure.file_adapter import create_file_adapter
from bellbench.infrastructure.logging_adapter import LoggingAdapter, create_logging_adapter

app = typer.Typer(name="bellbench", help="Simulate and analyze CHSH Bell tests.", no_args_is_help=True)
console = Console()

CONFIG_OPTION = typer.Option(None, "--config", "-c", help="Run configuration JSON.")
PRESET_OPTION = typer.Option(None, "--preset", "-p", help="Preset: paper (alias lab) or ideal.")
SEED_OPTION = typer.Option(None, "--seed", help="Override the plan seed.")
SETS_OPTION = typer.Option(None, "--sets", help="Override the number of 16-setting sets.")
MODE_OPTION = typer.Option(None, "--mode", help="Simulation mode: event or aggregate.")
OUT_DIR_OPTION = typer.Option(None, "--out-dir", "-o", help="Output directory.")

# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------

def _fail(error: BellBenchError) -> NoReturn:
    console.print(f"❌ {format_error_message(error)}", style="bold red")
    raise typer.Exit(code=error.exit_code)


def _load_config_or_exit(config: Optional[Path], preset: Optional[str], seed: Optional[int] = None,
                         sets: Optional[int] = None, mode: Optional[str] = None,
                         out_dir: Optional[Path] = None) -> RunConfig:
    try:
        cfg = load_config(config, preset)
        return cfg.with_overrides(seed=seed, sets=sets, mode=mode,
                                  output_dir=str(out_dir) if out_dir is not None else None)
    except ConfigurationError as e:
        _fail(e)


def _logging(out_dir: Path) -> LoggingAdapter:
    log_dir = out_dir / "logs"
    try:
        return create_logging_adapter(log_dir=log_dir)
    except OSError as e:
        _fail(OutputError(f"Cannot create log directory {log_dir}: {e.strerror or e}", path=str(log_dir)))


def _print_budget(budget: ErrorBudget) -> None:
    table = Table(title="Error budget")
    table.add_column("term")
    table.add_column("ΔS", justify="right")
    for name, value in budget.terms().items():
        note = " (not in total)" if name in ("ds_c", "ds_e") else ""
        table.add_row(name + note, f"{value:.3e}")
    table.add_row("total", f"{budget.total:.3e}", style="bold")
    console.print(table)
    console.print(f"Dominant term: [cyan]{budget.dominant_term}[/cyan]")


def _print_report(document: Dict[str, Any]) -> None:
    s = document["s_result"]
    bounds = document["bounds"]
    console.print(f"S = [bold]{s['s']:.5f}[/bold] ± {s['sigma']:.5f}  (counting {s['sigma_counting']:.2e})")
    console.print(f"Tsirelson gap   : {bounds['tsirelson_gap']:.5f} ({bounds['gap_sigmas']:.2f} σ)")
    console.print(f"Grinbaum z      : {bounds['z_grinbaum']:.2f} σ")
    console.print(f"Local z         : {bounds['z_local']:.1f} σ")
    acc = document["accidentals"]
    console.print(f"Accidentals     : {acc['half']:.4f} s⁻¹ (half) / {acc['full']:.4f} s⁻¹ (full), "
                  f"using '{acc['convention']}'", style="dim")

# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

@app.command()
def simulate(
    config: Optional[Path] = CONFIG_OPTION,
    preset: Optional[str] = PRESET_OPTION,
    seed: Optional[int] = SEED_OPTION,
    sets: Optional[int] = SETS_OPTION,
    mode: Optional[str] = MODE_OPTION,
    out_dir: Optional[Path] = OUT_DIR_OPTION,
) -> None:
    """Simulate an experiment and write records.csv and report.json."""
    cfg = _load_config_or_exit(config, preset, seed, sets, mode, out_dir)
    target = Path(cfg.output_dir) if cfg.output_dir else Path("bellbench-out")
    try:
        result = ApplicationCoordinator(cfg, _logging(target)).simulate(out_dir=target)
    except BellBenchError as e:
        _fail(e)

    _print_report(result.report.to_dict())
    console.print(f"✅ Records written to [cyan]{result.records_path}[/cyan]", style="bold green")
    console.print(f"✅ Report written to [cyan]{result.report_path}[/cyan]", style="bold green")

# ---------------------------------------------------------------------------
# analyze
# ---------------------------------------------------------------------------

@app.command()
def analyze(
    records: Path = typer.Argument(..., help="Records CSV to analyze."),
    config: Optional[Path] = CONFIG_OPTION,
    preset: Optional[str] = PRESET_OPTION,
    out_dir: Optional[Path] = OUT_DIR_OPTION,
) -> None:
    """Estimate S with its error budget and significance."""
    cfg = _load_config_or_exit(config, preset)
    target_dir = out_dir if out_dir is not None else records.parent
    out_path = target_dir / f"{records.stem}.{REPORT_FILENAME}"
    try:
        report = ApplicationCoordinator(cfg, _logging(target_dir)).analyze(records, out_path)
    except BellBenchError as e:
        _fail(e)

    _print_report(report.to_dict())
    console.print(f"✅ Report written to [cyan]{out_path}[/cyan]", style="bold green")

# ---------------------------------------------------------------------------
# optimize
# ---------------------------------------------------------------------------

@app.command()
def optimize(
    config: Optional[Path] = CONFIG_OPTION,
    preset: Optional[str] = PRESET_OPTION,
    seed: Optional[int] = SEED_OPTION,
    out_dir: Optional[Path] = OUT_DIR_OPTION,
    dwell: float = typer.Option(10.0, "--dwell", help="Seconds per scan point."),
    oracle: str = typer.Option("model", "--oracle", help="model or simulated."),
    noisy: bool = typer.Option(False, "--noisy", help="Poisson noise on the model oracle."),
    max_rounds: int = typer.Option(10, "--max-rounds", help="Cap on alternating scan rounds."),
) -> None:
    """Search for the optimal polarizer angles and write scan traces."""
    if oracle not in ("model", "simulated"):
        raise typer.BadParameter("--oracle must be 'model' or 'simulated'")
    cfg = _load_config_or_exit(config, preset, seed=seed, out_dir=out_dir)
    target = Path(cfg.output_dir) if cfg.output_dir else Path("bellbench-out")
    try:
        report = ApplicationCoordinator(cfg, _logging(target)).optimize(
            dwell=dwell, oracle_kind=oracle, noisy=noisy, max_rounds=max_rounds, out_dir=target)
    except BellBenchError as e:
        _fail(e)

    a = report.angles
    console.print("--- Optimized angles ---", style="bold blue")
    console.print(f"a0 = {a.a0:.1f}°  b0 = {a.b0:.1f}°  a1 = {a.a1:.1f}°  b1 = {a.b1:.1f}°  "
                  f"({a.iterations} rounds)")
    console.print(f"S at found angles    : {report.s_found:.5f}")
    console.print(f"S at canonical angles: {report.s_canonical:.5f}")
    console.print(f"✅ Angles written to [cyan]{report.angles_path}[/cyan]", style="bold green")

# ---------------------------------------------------------------------------
# bounds
# ---------------------------------------------------------------------------

@app.command()
def bounds(
    behavior: Optional[Path] = typer.Argument(None, help="Behavior table JSON ({'p': [[[[...]]]]})."),
    builtin: Optional[str] = typer.Option(None, "--builtin", help="pr, local, quantum or uniform."),
    as_json: bool = typer.Option(False, "--json", help="Print the report as JSON."),
) -> None:
    """CHSH value, no-signaling verdict and distance to the bounds."""
    if (behavior is None) == (builtin is None):
        raise typer.BadParameter("give either a behavior JSON file or --builtin")
    try:
        table = builtin_behavior(builtin) if builtin is not None else create_file_adapter().read_behavior(behavior)
    except BellBenchError as e:
        _fail(e)
    report = BoundsService().evaluate(table)

    if as_json:
        console.print_json(json.dumps(report.to_dict()))
        return
    console.print(f"S = [bold]{report.chsh:.12g}[/bold]")
    verdict = "✅ no-signaling" if report.no_signaling else "❌ signaling"
    console.print(f"{verdict} (max violation {report.max_violation:.3g})")
    for name, gap in report.gaps.items():
        console.print(f"  {name:<10} bound - |S| = {gap:+.6f}")

# ---------------------------------------------------------------------------
# budget
# ---------------------------------------------------------------------------

@app.command()
def budget(
    records: Optional[Path] = typer.Option(None, "--records", "-r", help="Records CSV; expected counts if omitted."),
    config: Optional[Path] = CONFIG_OPTION,
    preset: Optional[str] = PRESET_OPTION,
    sets: Optional[int] = SETS_OPTION,
) -> None:
    """Print the error budget."""
    cfg = _load_config_or_exit(config, preset, sets=sets)
    try:
        result = ApplicationCoordinator(cfg).budget(records)
    except BellBenchError as e:
        _fail(e)
    _print_budget(result)


@app.command()
def version() -> None:
    """Print the version."""
    console.print(f"bellbench {__version__}")

# ---------------------------------------------------------------------------


def main() -> None:
    app()


if __name__ == "__main__":
    main()
