"""Command-line entry point for the chaoslab experiments.

Every subcommand reads a TOML experiment file, runs, writes its results to
the output directory and exits with 0 (all checks pass), 1 (a check failed;
the failures are printed to stdout as JSON) or 2 (configuration error, no
files written).
"""


import json
import logging
from pathlib import Path
from typing import List, Optional

import typer

from chaoslab.dashboards.summary import SummaryDashboard
from chaoslab.experiments.checks import failures
from chaoslab.experiments.config import load_config
from chaoslab.experiments.outputs import RunManifest, jsonable, write_experiment, write_manifest, write_summary
from chaoslab.experiments.runner import EXPERIMENTS
from chaoslab.utils.config import BLOCK_SIZE, LOG_FILE, LOG_LEVEL, OUTPUT_DIR, threads_from_env
from chaoslab.utils.error_handling import ConfigError, DomainError, format_user_error, setup_global_error_handler
from chaoslab.utils.logger_config import setup_logging
from chaoslab.utils.parallel import resolve_threads

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_FAILED, EXIT_CONFIG = 0, 1, 2
ALL_ORDER = ["selftest", "bounds", "breuer-major", "neural-net", "spde"]

app = typer.Typer(help="Wiener chaos and Stein bound experiments.", add_completion=False)

CONFIG = typer.Option(..., "--config", "-c", help="TOML experiment file.")
SEED = typer.Option(None, "--seed", help="Override the seed from the config file.")
THREADS = typer.Option(None, "--threads", help="Worker threads (integer or 'auto').")
OUT = typer.Option(None, "--out", help="Output directory.")


def choose_threads(flag: Optional[str], config_value) -> int:
    """``--threads`` beats ``CHAOSLAB_THREADS``, which beats the config file."""
    if flag is not None:
        return resolve_threads(flag)
    env = threads_from_env()
    if env:
        return resolve_threads(env)
    return resolve_threads(config_value)


def execute(names: List[str], config_path: Path, seed: Optional[int], threads: Optional[str],
            out: Optional[Path]) -> int:
    """Run experiments in order and return the process exit code."""
    try:
        config = load_config(config_path, seed=seed)
        n_threads = choose_threads(threads, config.threads)
        out_dir = Path(out or config.output_dir or OUTPUT_DIR)
        out_dir.mkdir(parents=True, exist_ok=True)
    except (ConfigError, DomainError, ValueError) as exc:
        typer.echo(format_user_error(exc, "configuration"), err=True)
        return EXIT_CONFIG
    except OSError as exc:
        typer.echo(f"configuration: output directory is not writable ({exc})", err=True)
        return EXIT_CONFIG

    manifest = RunManifest.start(config, n_threads)
    dashboard = SummaryDashboard()
    results = []
    for name in names:
        logger.info("running %s (seed %d, %d threads)", name, config.seed, n_threads)
        result = EXPERIMENTS[name](config, n_threads, BLOCK_SIZE)
        manifest.outputs[name] = write_experiment(result, out_dir)
        dashboard.add_result(result)
        results.append(result)
    manifest.outputs["summary"] = [write_summary(results, manifest, out_dir).name]
    write_manifest(manifest, out_dir)
    dashboard.render()

    failed = [dict(item, experiment=r.name) for r in results for item in failures(r.checks)]
    if failed:
        typer.echo(json.dumps({"failures": failed}, sort_keys=True, default=jsonable))
        return EXIT_FAILED
    return EXIT_OK


@app.command()
def selftest(config: Path = CONFIG, seed: Optional[int] = SEED, threads: Optional[str] = THREADS,
             out: Optional[Path] = OUT):
    """Chaos calculus identities and Monte Carlo cross-checks."""
    raise typer.Exit(execute(["selftest"], config, seed, threads, out))


@app.command()
def bounds(config: Path = CONFIG, seed: Optional[int] = SEED, threads: Optional[str] = THREADS,
           out: Optional[Path] = OUT):
    """Stein-type bounds on random chaos functionals."""
    raise typer.Exit(execute(["bounds"], config, seed, threads, out))


@app.command("breuer-major")
def breuer_major(config: Path = CONFIG, seed: Optional[int] = SEED, threads: Optional[str] = THREADS,
                 out: Optional[Path] = OUT):
    """Functional Breuer–Major theorem for moving-average processes."""
    raise typer.Exit(execute(["breuer-major"], config, seed, threads, out))


@app.command("neural-net")
def neural_net(config: Path = CONFIG, seed: Optional[int] = SEED, threads: Optional[str] = THREADS,
               out: Optional[Path] = OUT):
    """Wide shallow Gaussian networks."""
    raise typer.Exit(execute(["neural-net"], config, seed, threads, out))


@app.command()
def spde(config: Path = CONFIG, seed: Optional[int] = SEED, threads: Optional[str] = THREADS,
         out: Optional[Path] = OUT):
    """Spatial averages of the parabolic Anderson model."""
    raise typer.Exit(execute(["spde"], config, seed, threads, out))


@app.command("all")
def run_all(config: Path = CONFIG, seed: Optional[int] = SEED, threads: Optional[str] = THREADS,
            out: Optional[Path] = OUT):
    """Every experiment, in a fixed order."""
    raise typer.Exit(execute(ALL_ORDER, config, seed, threads, out))


def main():
    setup_global_error_handler()
    setup_logging("chaoslab", LOG_LEVEL, LOG_FILE or None)
    app()


if __name__ == "__main__":
    main()
