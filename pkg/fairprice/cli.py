"""fairprice command-line interface: one JSON run config per invocation."""
import json
import logging
import sys
from typing import Any, Callable, Dict

import click
from pydantic import ValidationError

from fairprice.config import settings
from fairprice.core.errors import FairPriceError
from fairprice.pipeline import orchestrator
from fairprice.pipeline.runconfig import RunConfig, load_run_config
from fairprice.utils.monitor import set_thread_cap

logger = logging.getLogger(__name__)


def configure_logging(level: str) -> None:
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
        force=True,
    )


def fail(error: Exception) -> None:
    line = json.dumps({"error": type(error).__name__, "message": " ".join(str(error).split())})
    click.echo(line, err=True)
    sys.exit(1)


def run_command(ctx: click.Context, command: Callable[..., Dict[str, Any]], **kwargs) -> None:
    try:
        config: RunConfig = load_run_config(ctx.obj["config"])
        result = command(config, **kwargs)
    except (FairPriceError, ValidationError) as e:
        logger.debug("command failed", exc_info=True)
        fail(e)
    except (OSError, ValueError) as e:
        fail(e)
    click.echo(json.dumps(result, sort_keys=True))


@click.group()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True, dir_okay=False),
              help="Run configuration (JSON).")
@click.option("--threads", type=int, default=None, help="Cap on worker threads.")
@click.option("--svg", is_flag=True, default=False, help="Also render SVG plots.")
@click.option("--log-level", default=None, help="Overrides FAIRPRICE_LOG_LEVEL.")
@click.pass_context
def main(ctx: click.Context, config_path: str, threads, svg: bool, log_level) -> None:
    configure_logging(log_level or settings.log_level)
    try:
        set_thread_cap(threads)
    except ValueError as e:
        fail(e)
    ctx.obj = {"config": config_path, "svg": svg}


@main.command()
@click.pass_context
def synth(ctx: click.Context) -> None:
    """Generate the synthetic portfolio described by `generator`."""
    run_command(ctx, orchestrator.cmd_synth)


@main.command()
@click.pass_context
def train(ctx: click.Context) -> None:
    """Fit the configured fair-model kinds."""
    run_command(ctx, orchestrator.cmd_train)


@main.command()
@click.pass_context
def evaluate(ctx: click.Context) -> None:
    """Fairness reports, scatter and ITE exports for every trained model."""
    run_command(ctx, orchestrator.cmd_evaluate, svg=ctx.obj["svg"])


@main.command()
@click.pass_context
def analytics(ctx: click.Context) -> None:
    """Solidarity tables and double-lift charts on the test split."""
    run_command(ctx, orchestrator.cmd_analytics)


@main.command()
@click.pass_context
def ensemble(ctx: click.Context) -> None:
    """Evolve the gated MO/MSCM ensemble and pick a solution with TOPSIS."""
    run_command(ctx, orchestrator.cmd_ensemble, svg=ctx.obj["svg"])


@main.command()
@click.pass_context
def report(ctx: click.Context) -> None:
    """Verify the run directory and write summary.json / summary.md."""
    run_command(ctx, orchestrator.cmd_report)


if __name__ == "__main__":
    main()
