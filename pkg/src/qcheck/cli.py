"""Command line driver.

Exit codes: 0 analysis completed (any verdict), 2 input or parse error,
3 solver error or timeout, 4 usage error.
"""
from __future__ import annotations

import sys
import time
from pathlib import Path

import click

from . import frontends, generator
from .logic import Checker, Verdict
from .projection import ProjectionError, project
from .smt import SolverError, SolverHandle

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_SOLVER = 3
EXIT_USAGE = 4


@click.group()
def cli() -> None:
    """Bounded model checking of QoS properties over communicating machines."""


def _analysis_options(f):
    f = click.option("--unfoldings", "-u", type=int, default=None,
                     help="Star unfolding bound inside until indices (default: k).")(f)
    f = click.option("--show-model", is_flag=True, help="Print the witness run, if any.")(f)
    f = click.option("--verbose", is_flag=True,
                     help="Print the run count of each explored length.")(f)
    f = click.option("--solver", default=None,
                     help="Solver command (default: $QCHECK_SOLVER, then 'z3 -in').")(f)
    f = click.option("--timeout", type=float, default=30.0, show_default=True,
                     help="Per-query solver timeout in seconds.")(f)
    f = click.option("--csv", "csv_path", type=click.Path(), default=None,
                     help="Append one statistics row to this CSV file.")(f)
    return f


def _run_analysis(
    mode: str,
    system_path: str,
    prop_path: str,
    k: int,
    unfoldings: int | None,
    show_model: bool,
    verbose: bool,
    solver: str | None,
    timeout: float,
    csv_path: str | None,
) -> None:
    if k < 0:
        raise click.UsageError("bound k must be >= 0")
    if unfoldings is not None and unfoldings < 0:
        raise click.UsageError("unfoldings must be >= 0")
    sys_text = Path(system_path).read_text(encoding="utf-8")
    prop_text = Path(prop_path).read_text(encoding="utf-8")
    system = frontends.parse_qosfsa(sys_text, system_path)
    formula = frontends.parse_ql(prop_text, prop_path)

    progress = None
    if verbose:
        def progress(length: int, count: int) -> None:
            click.echo(f"length {length}: {count} runs")

    started = time.monotonic()
    with SolverHandle(solver, timeout=timeout) as handle:
        checker = Checker(system, handle, progress=progress)
        if mode == "satisfiability":
            verdict = checker.q_sat(formula, k, unfoldings)
        else:
            verdict = checker.q_valid(formula, k, unfoldings)
    elapsed_ms = (time.monotonic() - started) * 1000.0

    messages = {
        "model": "sat",
        "no_model": f"no model found within bound k={k}",
        "counterexample": "counterexample found",
        "no_counterexample": f"no counterexample found within bound k={k}",
    }
    click.echo(messages[verdict.outcome])
    if show_model and verdict.witness is not None:
        for action, _ in verdict.witness.steps:
            click.echo(str(action))
        click.echo(f"final: {verdict.witness.last.pretty(system)}")
    if csv_path:
        _append_csv(csv_path, verdict, elapsed_ms)


def _append_csv(path: str, verdict: Verdict, elapsed_ms: float) -> None:
    p = Path(path)
    header = "k,u,runs,queries,cache_hits,ms,verdict\n"
    row = (
        f"{verdict.k},{verdict.u},{verdict.stats.runs},{verdict.stats.queries},"
        f"{verdict.stats.cache_hits},{elapsed_ms:.1f},{verdict.outcome}\n"
    )
    try:
        fresh = not p.exists() or p.stat().st_size == 0
        with p.open("a", encoding="utf-8") as fh:
            if fresh:
                fh.write(header)
            fh.write(row)
    except OSError as e:
        raise click.FileError(path, str(e))


@cli.command()
@click.argument("system_path", metavar="SYSTEM.qosfsa")
@click.argument("prop_path", metavar="PROP.ql")
@click.argument("k", type=int)
@_analysis_options
def satisfiability(system_path, prop_path, k, unfoldings, show_model, verbose,
                   solver, timeout, csv_path) -> None:
    """Search for a run of length <= K satisfying the property."""
    _run_analysis("satisfiability", system_path, prop_path, k, unfoldings,
                  show_model, verbose, solver, timeout, csv_path)


@cli.command()
@click.argument("system_path", metavar="SYSTEM.qosfsa")
@click.argument("prop_path", metavar="PROP.ql")
@click.argument("k", type=int)
@_analysis_options
def validity(system_path, prop_path, k, unfoldings, show_model, verbose,
             solver, timeout, csv_path) -> None:
    """Search for a counterexample: a run satisfying the negated property."""
    _run_analysis("validity", system_path, prop_path, k, unfoldings,
                  show_model, verbose, solver, timeout, csv_path)


@cli.command(name="project")
@click.argument("qosgc_path", metavar="IN.qosgc")
@click.option("-o", "output", required=True, type=click.Path(),
              help="Output .qosfsa path.")
def project_cmd(qosgc_path: str, output: str) -> None:
    """Project an annotated g-choreography onto per-participant machines."""
    text = Path(qosgc_path).read_text(encoding="utf-8")
    qg = frontends.parse_qosgc(text, qosgc_path)
    system = project(qg)
    Path(output).write_text(frontends.serialize_qosfsa(system), encoding="utf-8")
    click.echo(f"wrote {output}")


@cli.group()
def gen() -> None:
    """Benchmark generators."""


@gen.command(name="nested-choices")
@click.argument("n", type=int)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("-o", "outdir", required=True, type=click.Path(), help="Output directory.")
def gen_nested_choices_cmd(n: int, seed: int, outdir: str) -> None:
    """Generate the depth-N alternating-choice system and its pinned formula."""
    try:
        qg, formula, k = generator.gen_nested_choices(n, seed)
    except ValueError as e:
        raise click.UsageError(str(e))
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    base = f"nested{n}_seed{seed}"
    (out / f"{base}.qosgc").write_text(frontends.serialize_qosgc(qg), encoding="utf-8")
    (out / f"{base}.ql").write_text(frontends.serialize_ql(formula), encoding="utf-8")
    click.echo(f"wrote {out / (base + '.qosgc')} and {out / (base + '.ql')} (bound k={k})")


def main(argv: list[str] | None = None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
        return EXIT_OK
    except click.UsageError as e:
        click.echo(f"usage error: {e.format_message()}", err=True)
        return EXIT_USAGE
    except click.ClickException as e:
        click.echo(f"error: {e.format_message()}", err=True)
        return EXIT_INPUT
    except frontends.ParseError as e:
        click.echo(f"parse error: {e}", err=True)
        return EXIT_INPUT
    except ProjectionError as e:
        click.echo(f"projection error: {e}", err=True)
        return EXIT_INPUT
    except FileNotFoundError as e:
        click.echo(f"input error: {e}", err=True)
        return EXIT_INPUT
    except SolverError as e:
        click.echo(f"solver error: {e}", err=True)
        return EXIT_SOLVER
    except click.exceptions.Exit as e:
        return int(e.exit_code)


def entry() -> None:
    sys.exit(main())
