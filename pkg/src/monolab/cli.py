"""Command-line front end.

Every command is a thin wrapper around library calls.  Randomized commands
require ``--seed``.  Exit codes: 0 success, 1 usage, 2 capacity, 3 self-check
failure.
"""

from __future__ import annotations

import csv
import io
import json
import os
import sys
import tempfile
import time
from fractions import Fraction
from pathlib import Path

import click
import numpy as np

from . import __version__
from .capture import QuerySet, analyze, greedy_capture_set, query_lower_bound
from .distance import DistanceCertificate, FunctionTable, distance_to_monotone
from .errors import CapacityError, DomainError
from .family import FamilyParams, HardFunction, dump_csv, format_epsilon, parse_epsilon, sample, support
from .hypergrid import DomainParams
from .testers import (
    derive_non_adaptive,
    exact_error,
    monte_carlo_error,
    optimal_distinguisher,
    pair_tester,
    random_tree,
    tree_depth,
    tree_from_json,
    tree_tester,
)

SCHEMA_VERSION = 1
SIMULATE_COLUMNS = ["budget", "exactError", "mcError", "ciLow", "ciHigh", "seed"]

EXIT_USAGE = 1
EXIT_CAPACITY = 2
EXIT_SELF_CHECK = 3


class SelfCheckFailed(click.ClickException):
    exit_code = EXIT_SELF_CHECK


def _frac(q: Fraction) -> str:
    return f"{q.numerator}/{q.denominator}"


def _family(m, epsilon) -> FamilyParams:
    if m is None or epsilon is None:
        raise click.UsageError("--m and --epsilon are required")
    try:
        return FamilyParams(m, parse_epsilon(epsilon))
    except DomainError as exc:
        raise click.UsageError(str(exc))


def _grid(n, d) -> DomainParams:
    try:
        return DomainParams(n, d)
    except DomainError as exc:
        raise click.UsageError(str(exc))


def _write(text: str, out) -> None:
    if out is None:
        click.echo(text, nl=False)
        return
    path = Path(out)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    with os.fdopen(fd, "w", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _record(command: str, config: dict, results, started: float) -> str:
    doc = {
        "schemaVersion": SCHEMA_VERSION,
        "tool": f"monolab {__version__}",
        "command": command,
        "config": config,
        "results": results,
        "timings": {"seconds": round(time.perf_counter() - started, 6)},
    }
    return json.dumps(doc, indent=2) + "\n"


@click.group()
@click.version_option(__version__, prog_name="monolab")
def cli():
    """Monotonicity-testing lab: hard functions, exact distances, capture bounds, testers."""


@cli.command()
@click.option("--m", type=int, required=True, help="Cube dimension.")
@click.option("--epsilon", required=True, help="Farness, as 1/2^a.")
@click.option("--all", "enumerate_all", is_flag=True, help="Emit the whole support with exact masses.")
@click.option("--seed", type=int, help="Seed for drawing one function (required without --all).")
@click.option("--out", type=click.Path(), help="Output file (JSON), or directory for --format csv.")
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default="json", show_default=True)
def gen(m, epsilon, enumerate_all, seed, out, fmt):
    """Sample or enumerate hard functions.

    JSON output lists descriptors {"m", "epsilon", "kind"}.  With --format csv
    a bitstring,value table is written per function (m <= 16).
    """
    started = time.perf_counter()
    p = _family(m, epsilon)
    if enumerate_all:
        entries = [(h, mass) for h, mass in support(p)]
    else:
        if seed is None:
            raise click.UsageError("--seed is required unless --all is given")
        entries = [(sample(p, np.random.default_rng(seed)), None)]
    if fmt == "csv":
        try:
            tables = [(h, dump_csv(h)) for h, _ in entries]
        except CapacityError as exc:
            raise click.UsageError(str(exc))
        if len(tables) == 1:
            _write(tables[0][1], out)
            return
        if out is None:
            raise click.UsageError("--out DIR is required for several CSV tables")
        for h, text in tables:
            _write(text, Path(out) / f"{'base' if h.is_base else f'g_{h.j}_{h.k}'}.csv")
        return
    functions = []
    for h, mass in entries:
        desc = h.to_descriptor()
        if mass is not None:
            desc["mass"] = _frac(mass)
        functions.append(desc)
    config = {"m": m, "epsilon": format_epsilon(p.epsilon), "all": enumerate_all, "seed": seed}
    _write(_record("gen", config, {"functions": functions}, started), out)


def _load_functions(path: Path, n, d):
    """Yield ``(label, FunctionTable)`` from a CSV table or JSON descriptor file."""
    text = path.read_text()
    if path.suffix.lower() == ".csv":
        return [(path.name, FunctionTable.read_csv(text))]
    doc = json.loads(text)
    if "results" in doc:
        doc = doc["results"]
    descs = doc["functions"] if "functions" in doc else [doc]
    lift = _grid(n, d) if n is not None or d is not None else None
    out = []
    for desc in descs:
        h = HardFunction.from_descriptor(desc)
        out.append((str(h), FunctionTable.from_hard_function(h, lift)))
    return out


@cli.command()
@click.argument("function_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--n", type=int, help="Lift descriptors to [n]^d before measuring.")
@click.option("--d", type=int)
@click.option("--certificate", type=click.Path(exists=True, dir_okay=False),
              help="Check this certificate file instead of computing one.")
@click.option("--out", type=click.Path())
def distance(function_file, n, d, certificate, out):
    """Exact distance to monotonicity with a cover/matching certificate.

    Exits 0 iff every certificate passes its self-check, 3 otherwise.
    """
    started = time.perf_counter()
    try:
        tables = _load_functions(Path(function_file), n, d)
    except (DomainError, ValueError, KeyError) as exc:
        raise click.UsageError(f"cannot parse {function_file}: {exc}")
    if certificate is not None:
        doc = json.loads(Path(certificate).read_text())
        certs = doc["results"]["certificates"] if "results" in doc else [doc]
        if len(certs) != len(tables):
            raise SelfCheckFailed("certificate count does not match the functions")
        for (label, table), cdoc in zip(tables, certs):
            try:
                cert = DistanceCertificate.from_json(cdoc, table.domain)
            except DomainError as exc:
                raise SelfCheckFailed(f"{label}: {exc}")
            if not cert.check(table):
                raise SelfCheckFailed(f"{label}: certificate fails its self-check")
        click.echo(f"ok: {len(certs)} certificate(s) verified")
        return
    results = []
    failed = []
    for label, table in tables:
        cert = distance_to_monotone(table)
        entry = {"function": label, **cert.to_json(table.domain), "selfCheck": cert.check(table)}
        if not entry["selfCheck"]:
            failed.append(label)
        results.append(entry)
    config = {"file": Path(function_file).name, "n": n, "d": d}
    _write(_record("distance", config, {"certificates": results}, started), out)
    if failed:
        raise SelfCheckFailed(f"self-check failed for {', '.join(failed)}")


@cli.command()
@click.argument("queryset_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--m", type=int, required=True)
@click.option("--epsilon", required=True)
@click.option("--out", type=click.Path())
def capture(queryset_file, m, epsilon, out):
    """Capture report and error floor for a query set (one bitstring per line)."""
    started = time.perf_counter()
    p = _family(m, epsilon)
    try:
        X = QuerySet.parse(Path(queryset_file).read_text())
    except DomainError as exc:
        raise click.UsageError(str(exc))
    if X and X.m != p.m:
        raise click.UsageError(f"query points have {X.m} bits but --m is {p.m}")
    report = analyze(X, p)
    config = {"file": Path(queryset_file).name, "m": m, "epsilon": format_epsilon(p.epsilon)}
    _write(_record("capture", config, report.to_json(), started), out)


def _parse_budgets(text: str):
    budgets = []
    for part in text.split(","):
        part = part.strip()
        if "-" in part:
            lo, hi = part.split("-")
            budgets.extend(range(int(lo), int(hi) + 1))
        elif part:
            budgets.append(int(part))
    return budgets


@cli.command()
@click.option("--tester", type=click.Choice(["pair", "greedy", "random-tree", "tree"]), required=True)
@click.option("--m", type=int, help="Cube dimension (derived from --n/--d for the pair tester).")
@click.option("--n", type=int)
@click.option("--d", type=int)
@click.option("--epsilon", required=True)
@click.option("--budget", "budgets", default="1-12", show_default=True,
              help="Budgets to sweep, e.g. '1-12' or '1,2,4'.")
@click.option("--tree", "tree_file", type=click.Path(exists=True, dir_okay=False),
              help="Comparison-tree JSON for --tester tree.")
@click.option("--trials", type=int, default=1000, show_default=True)
@click.option("--seed", type=int, required=True)
@click.option("--out", type=click.Path())
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv", show_default=True)
def simulate(tester, m, n, d, epsilon, budgets, tree_file, trials, seed, out, fmt):
    """Sweep query budgets against the hard distribution.

    \b
    CSV columns: budget, exactError, mcError, ciLow, ciHigh, seed
      exactError  exact error over the support (empty for the pair tester)
      mcError     Monte Carlo error over --trials draws
      ciLow/High  95% Wilson interval of mcError
    Testers: pair (on the lifted grid, budget = sampled pairs), greedy
    (best distinguisher on a capture-maximizing query set), random-tree
    (random comparison tree of depth = budget), tree (the --tree file).
    """
    started = time.perf_counter()
    lift = None
    if tester == "pair":
        if n is None or d is None:
            raise click.UsageError("the pair tester needs --n and --d")
        lift = _grid(n, d)
        if m is not None and m != lift.m:
            raise click.UsageError(f"--m {m} disagrees with d*log2(n) = {lift.m}")
        m = lift.m
    p = _family(m, epsilon)
    try:
        sweep = _parse_budgets(budgets)
    except ValueError:
        raise click.UsageError(f"bad --budget {budgets!r}")
    rows = []
    if tester == "tree":
        if tree_file is None:
            raise click.UsageError("--tester tree needs --tree FILE")
        tree = tree_from_json(json.loads(Path(tree_file).read_text()))
        sweep = [tree_depth(tree)]
    for b in sweep:
        exact = None
        if tester == "pair":
            def run(oracle, rng, b=b):
                return pair_tester(oracle, lift, p.epsilon, rng, budget=b)
        elif tester == "greedy":
            dist, exact = optimal_distinguisher(greedy_capture_set(p, b), p)
            run = lambda oracle, rng, dist=dist: dist.run(oracle)
        else:
            if tester == "random-tree":
                tree = random_tree(p, b, np.random.default_rng([seed, b]))
            exact = exact_error(tree, p)
            run = tree_tester(tree)
        est = monte_carlo_error(run, p, trials, seed, lift=lift)
        rows.append({
            "budget": b,
            "exactError": "" if exact is None else _frac(exact),
            "mcError": f"{est.error:.6f}",
            "ciLow": f"{est.ci_low:.6f}",
            "ciHigh": f"{est.ci_high:.6f}",
            "seed": seed,
        })
    if fmt == "json":
        config = {"tester": tester, "m": m, "n": n, "d": d, "epsilon": format_epsilon(p.epsilon),
                  "budgets": sweep, "trials": trials, "seed": seed}
        _write(_record("simulate", config, {"rows": rows}, started), out)
        return
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=SIMULATE_COLUMNS, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    _write(buf.getvalue(), out)


@cli.command()
@click.option("--n", type=int, required=True)
@click.option("--d", type=int, required=True)
@click.option("--epsilon", required=True)
@click.option("--format", "fmt", type=click.Choice(["text", "json"]), default="text", show_default=True)
def bound(n, d, epsilon, fmt):
    """Query lower bound: displayed formula and the m'/(8 eps) threshold.

    The two differ by 1/(8 eps) because m' = d log2 n + 1 - log2(1/eps).
    """
    try:
        qb = query_lower_bound(n, d, parse_epsilon(epsilon))
    except DomainError as exc:
        raise click.UsageError(str(exc))
    if fmt == "json":
        click.echo(json.dumps({
            "schemaVersion": SCHEMA_VERSION,
            "display": _frac(qb.display),
            "threshold": _frac(qb.threshold),
            "mPrime": qb.m_prime,
            "gap": _frac(qb.gap),
        }))
        return
    click.echo(f"display (d log n - log 1/eps)/(8 eps): {_frac(qb.display)}")
    click.echo(f"threshold m'/(8 eps): {_frac(qb.threshold)}  (m' = {qb.m_prime})")
    click.echo(f"note: the two differ by 1/(8 eps) = {_frac(qb.gap)}")


@cli.command()
@click.argument("tree_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--m", type=int, required=True)
@click.option("--epsilon", required=True)
@click.option("--out", type=click.Path())
def transform(tree_file, m, epsilon, out):
    """Collapse a comparison tree to its non-adaptive base-consistent path."""
    started = time.perf_counter()
    p = _family(m, epsilon)
    try:
        tree = tree_from_json(json.loads(Path(tree_file).read_text()))
        derived = derive_non_adaptive(tree, p)
    except (DomainError, ValueError) as exc:
        raise click.UsageError(str(exc))
    results = {
        "distinguisher": derived.to_json(),
        "treeExactError": _frac(exact_error(tree, p)),
        "derivedExactError": _frac(exact_error(derived, p)),
    }
    config = {"file": Path(tree_file).name, "m": m, "epsilon": format_epsilon(p.epsilon)}
    _write(_record("transform", config, results, started), out)


def main(argv=None) -> int:
    try:
        cli.main(args=argv, prog_name="monolab", standalone_mode=False)
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return EXIT_USAGE
    except SelfCheckFailed as exc:
        exc.show()
        return EXIT_SELF_CHECK
    except click.ClickException as exc:
        exc.show()
        return EXIT_USAGE
    except CapacityError as exc:
        click.echo(f"capacity error: {exc}", err=True)
        return EXIT_CAPACITY
    except DomainError as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_USAGE
    return 0


if __name__ == "__main__":
    sys.exit(main())
