"""Command line: replay traces, generate traces, run the self test."""

from __future__ import annotations

import sys
from fractions import Fraction

import click

from .harness import DEFAULT_ORACLE_CAP, TraceError, failing, format_trace, generate, metrics_csv, parse_trace, replay, selftest
from .pipeline import NO_ROUNDING, ROUNDED


@click.group()
def main():
    """Dynamic scheduling on related machines with bounded migration."""


@main.command("replay")
@click.argument("trace", type=click.Path(exists=True, dir_okay=False))
@click.option("--mode", type=click.Choice([ROUNDED, NO_ROUNDING]), default=ROUNDED, show_default=True)
@click.option("--oracle", is_flag=True, help="Compare against the exact optimum when few jobs are live.")
@click.option("--oracle-cap", type=int, default=DEFAULT_ORACLE_CAP, show_default=True)
@click.option("--csv", "csv_path", type=click.Path(dir_okay=False), help="Write per-step metrics here.")
def replay_cmd(trace, mode, oracle, oracle_cap, csv_path):
    """Replay TRACE and check every invariant after every event."""
    with open(trace, encoding="utf-8") as fh:
        text = fh.read()
    try:
        parsed = parse_trace(text)
        rows, pipe = replay(parsed, mode=mode, oracle=oracle, oracle_cap=oracle_cap)
    except (TraceError, ValueError, LookupError, RuntimeError) as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(2)
    out = metrics_csv(rows, oracle)
    if csv_path:
        with open(csv_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(out)
    bad = failing(rows)
    ratios = [r.ratio for r in rows if r.ratio is not None]
    total = sum((r.migration for r in rows), Fraction(0))
    line = f"steps {len(rows)}  failed verdicts {len(bad)}  total migration {total}"
    if ratios:
        line += f"  ratio range {min(ratios)}..{max(ratios)}"
    click.echo(line)
    for step, name in bad[:20]:
        click.echo(f"  step {step}: {name} failed")
    sys.exit(0 if not bad else 1)


@main.command("gen")
@click.option("--seed", type=int, required=True)
@click.option("--machines", type=int, required=True)
@click.option("--steps", type=int, required=True)
@click.option("--pmax", type=str, required=True)
@click.option("--epsilon", type=str, required=True, help="As a/b, with b/a integral.")
@click.option("--small-prob", type=float, default=0.0, show_default=True)
@click.option("--objective", type=click.Choice(["cmax", "cmin"]), default="cmax", show_default=True)
def gen_cmd(seed, machines, steps, pmax, epsilon, small_prob, objective):
    """Print a random trace."""
    try:
        trace = generate(seed, machines, steps, Fraction(pmax), Fraction(epsilon), small_prob, objective)
    except ValueError as e:
        raise click.BadParameter(str(e)) from None
    click.echo(format_trace(trace), nl=False)


@main.command("selftest")
def selftest_cmd():
    """Replay the built-in traces with the oracle and report each."""
    sys.exit(0 if selftest(click.echo) else 1)


if __name__ == "__main__":
    main()
