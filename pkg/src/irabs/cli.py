"""Command-line frontend: validate, abstract, solve, eval and experiment.

Exit codes: 0 success, 1 usage error, 2 validation failure, 3 internal limit
exceeded (such as the exact clustering size guard).
"""
from __future__ import annotations

import sys
from fractions import Fraction
from pathlib import Path

import click

from .abstraction import (
    SlapTooLarge,
    build_abstraction,
    combine_maps,
    exact_cluster,
    gonzalez_cluster,
    group_instance,
    with_optimized_deltas,
)
from .bounds import strategy_agnostic_bound, theorem2_bound
from .cfr import CfrSolver, lift_strategy
from .crswf import AbstractionMap, CrswfError, refinement_problem, verify_crswf
from .efg_core import GameError, GameTree, StrategyProfile, emit_game, full_game_regrets, parse_game
from .efg_core.fileformat import parse_rational
from .experiments import (
    DEFAULT_C_GRID,
    bounds_csv,
    cdrp_convergence,
    convergence_csv,
    drp_bound_curve,
    fmt,
)
from .games import DrpSpec, drp_bottom_groups, make_cdrp, make_drp, make_figure1_game

EXIT_USAGE, EXIT_INVALID, EXIT_LIMIT = 1, 2, 3


class ValidationFailure(click.ClickException):
    exit_code = EXIT_INVALID


class LimitExceeded(click.ClickException):
    exit_code = EXIT_LIMIT


# ------------------------------------------------------------------ helpers
def load_game(spec: str) -> GameTree:
    """A game file path, or one of drp[:sides], cdrp:sides:c, figure1."""
    path = Path(spec)
    if path.exists():
        try:
            return parse_game(path.read_text())
        except GameError as exc:
            raise ValidationFailure(f"{spec}: {exc}") from exc
    head, *rest = spec.split(":")
    try:
        if head == "drp":
            return make_drp(DrpSpec(sides=int(rest[0]) if rest else 6))
        if head == "cdrp":
            sides = int(rest[0]) if rest else 4
            c = parse_rational(rest[1]) if len(rest) > 1 else Fraction(0)
            return make_cdrp(DrpSpec(sides=sides, c=c))
        if head == "figure1":
            return make_figure1_game()[0]
    except (ValueError, IndexError) as exc:
        raise click.UsageError(f"bad game spec {spec!r}: {exc}") from exc
    except GameError as exc:
        raise ValidationFailure(str(exc)) from exc
    raise click.UsageError(f"no such game file or generator: {spec!r}")


def load_map(path: str | None, game: GameTree, default_delta: str = "choose") -> AbstractionMap:
    if path is None:
        return AbstractionMap.identity()
    try:
        amap = AbstractionMap.from_text(Path(path).read_text(), default_delta)
    except CrswfError as exc:
        raise ValidationFailure(f"{path}: {exc}") from exc
    problem = refinement_problem(game, amap)
    if problem:
        raise ValidationFailure(problem)
    return amap


def read_groups(path: str) -> dict[str, tuple[list[str], list[list[str]]]]:
    """Lines ``<group> <candidate> <set> [<set> ...]``; slots align by position."""
    groups: dict[str, tuple[list[str], list[list[str]]]] = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        tok = line.split("#", 1)[0].split()
        if not tok:
            continue
        if len(tok) < 3:
            raise click.UsageError(f"{path}:{lineno}: expected '<group> <candidate> <set> ...'")
        names, members = groups.setdefault(tok[0], ([], []))
        names.append(tok[1])
        members.append(tok[2:])
    return groups


def read_config(path: str) -> dict[str, str]:
    cfg = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        if not sep:
            raise click.UsageError(f"{path}:{lineno}: expected key=value")
        cfg[key.strip().replace("-", "_")] = val.strip()
    return cfg


def write_out(text: str, out: str | None) -> None:
    if out is None:
        click.echo(text, nl=False)
    else:
        Path(out).write_text(text)


# ------------------------------------------------------------------ commands
@click.group()
@click.option("--config", type=click.Path(exists=True, dir_okay=False),
              help="key=value file supplying defaults for the subcommand's options.")
@click.pass_context
def cli(ctx: click.Context, config: str | None):
    """Imperfect-recall abstraction with solution-quality bounds."""
    if config is None:
        return
    cfg = read_config(config)
    sub = ctx.invoked_subcommand
    cmd = cli.commands.get(sub) if sub else None
    if cmd is not None:
        known = {p.name for p in cmd.params}
        unknown = sorted(set(cfg) - known)
        if unknown:
            raise click.UsageError(f"unknown config keys for {sub}: {', '.join(unknown)}")
        ctx.default_map = {sub: cfg}


@cli.command()
@click.argument("game")
@click.argument("map_file", required=False)
@click.option("--delta", type=click.Choice(["choose", "one"]), default="choose", show_default=True,
              help="Scaling for pairs without an explicit delta line.")
def validate(game, map_file, delta):
    """Check a map is a CRSWF abstraction of GAME and print its errors."""
    g = load_game(game)
    amap = load_map(map_file, g, delta)
    try:
        report = verify_crswf(g, amap)
    except CrswfError as exc:
        raise ValidationFailure(str(exc)) from exc
    click.echo("set,partner,delta,transition,reward,distribution")
    for a, b, d, t, r, dist in report.summary_rows():
        click.echo(f"{a},{b},{fmt(d)},{fmt(t)},{fmt(r)},{fmt(dist)}")
    res = strategy_agnostic_bound(g, report)
    for p, v in res.per_player.items():
        click.echo(f"bound_p{p}={fmt(v)}")
    click.echo(f"bound={fmt(res.epsilon)}")


@cli.command()
@click.argument("game")
@click.option("--level", type=click.Choice(["bottom"]), default="bottom", show_default=True)
@click.option("--groups", "groups_file", type=click.Path(exists=True, dir_okay=False),
              help="Candidate groups for game files; DRP games derive them.")
@click.option("--k", type=click.IntRange(min=1), required=True, help="Clusters per group.")
@click.option("--method", type=click.Choice(["gonzalez", "exact"]), default="exact", show_default=True)
@click.option("--objective", type=click.Choice(["diameter", "weighted"]), default="weighted", show_default=True)
@click.option("--delta", "delta_mode", type=click.Choice(["fixed", "optimized"]), default="fixed",
              show_default=True, help="δ = 1, or per-pair bound-minimizing δ (exact method only).")
@click.option("--out", type=click.Path(dir_okay=False), help="Map file (stdout if omitted).")
def abstract(game, level, groups_file, k, method, objective, delta_mode, out):
    """Cluster one level of GAME and write the abstraction map."""
    if delta_mode == "optimized" and method != "exact":
        raise click.UsageError("--delta optimized needs --method exact (no metric guarantee)")
    g = load_game(game)
    if groups_file:
        groups = read_groups(groups_file)
    else:
        groups = {}
        for p in g.players:
            try:
                cands, members = drp_bottom_groups(g, p)
            except (GameError, IndexError, ValueError) as exc:
                raise click.UsageError(f"--groups is required for this game ({exc})") from exc
            if cands:
                groups[f"p{p}"] = ([".".join(map(str, c)) for c in cands], members)
        if not groups:
            raise click.UsageError("--groups is required for this game")
    maps = []
    try:
        for name, (names, members) in groups.items():
            inst = group_instance(g, names, members, objective, delta_mode)
            kk = min(k, inst.size)
            cl = exact_cluster(inst, kk) if method == "exact" else gonzalez_cluster(inst, kk)
            click.echo(f"{name}: objective={fmt(cl.objective)}", err=True)
            maps.append(build_abstraction(members, cl, prefix=name))
        amap = combine_maps(*maps)
        if delta_mode == "optimized":
            amap = with_optimized_deltas(g, amap)
    except SlapTooLarge as exc:
        raise LimitExceeded(str(exc)) from exc
    except CrswfError as exc:
        raise ValidationFailure(str(exc)) from exc
    write_out(amap.to_text(), out)


@cli.command()
@click.argument("game")
@click.argument("map_file", required=False)
@click.option("--iterations", type=click.IntRange(min=1), default=10_000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), help="Strategy CSV (stdout if omitted).")
def solve(game, map_file, iterations, seed, out):
    """Run CFR on the abstraction and write the lifted average strategy."""
    g = load_game(game)
    amap = load_map(map_file, g)
    solver = CfrSolver(amap.abstract_game(g), seed)
    solver.iterate(iterations)
    lifted = lift_strategy(solver.average(), amap, g)
    write_out(lifted.to_csv(g), out)


@cli.command("eval")
@click.argument("game")
@click.argument("strategy", type=click.Path(exists=True, dir_okay=False))
@click.argument("map_file", required=False)
def evaluate(game, strategy, map_file):
    """Full-game regret of a strategy, plus the Theorem 2 bound given a map."""
    g = load_game(game)
    try:
        sigma = StrategyProfile.from_csv(g, Path(strategy).read_text())
    except GameError as exc:
        raise ValidationFailure(str(exc)) from exc
    reg = full_game_regrets(g, sigma)
    for p, v in reg.items():
        click.echo(f"regret_p{p}={fmt(v)}")
    click.echo(f"regret_sum={fmt(sum(reg.values()))}")
    if map_file:
        amap = load_map(map_file, g)
        try:
            res = theorem2_bound(g, verify_crswf(g, amap), sigma)
        except CrswfError as exc:
            raise ValidationFailure(str(exc)) from exc
        click.echo(f"theorem2_sum={fmt(res.total)}")


@cli.command()
@click.option("--which", type=click.Choice(["bounds", "convergence", "all"]), default="all", show_default=True)
@click.option("--sides", type=click.IntRange(min=2), default=None, help="Die sides (6 for bounds, 4 for convergence).")
@click.option("--c", "cs", default=",".join(str(c) for c in DEFAULT_C_GRID), show_default=True,
              help="Comma-separated correlation grid (rationals).")
@click.option("--k-min", type=click.IntRange(min=1), default=1, show_default=True)
@click.option("--k-max", type=click.IntRange(min=1), default=12, show_default=True)
@click.option("--k", "k_conv", type=click.IntRange(min=1), default=None,
              help="Clusters per player for the convergence runs (default 2·sides−1).")
@click.option("--method", type=click.Choice(["gonzalez", "exact"]), default="exact", show_default=True)
@click.option("--objective", type=click.Choice(["diameter", "weighted"]), default="weighted", show_default=True)
@click.option("--iterations", type=click.IntRange(min=1), default=100_000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(file_okay=False), default=".", show_default=True)
def experiment(which, sides, cs, k_min, k_max, k_conv, method, objective, iterations, seed, out):
    """Write bounds.csv (DRP bound curve) and/or convergence.csv (CDRP runs)."""
    try:
        grid = [parse_rational(c.strip()) for c in str(cs).split(",") if c.strip()]
    except ValueError as exc:
        raise click.UsageError(f"bad --c: {exc}") from exc
    if k_min > k_max:
        raise click.UsageError("--k-min exceeds --k-max")
    outdir = Path(out)
    outdir.mkdir(parents=True, exist_ok=True)
    try:
        if which in ("bounds", "all"):
            rows = drp_bound_curve(sides or 6, range(k_min, k_max + 1), method, objective)
            (outdir / "bounds.csv").write_text(bounds_csv(rows))
            click.echo(f"wrote {outdir / 'bounds.csv'}")
        if which in ("convergence", "all"):
            rows = cdrp_convergence(grid, sides=sides or 4, iterations=iterations, k=k_conv,
                                    seed=seed, method=method)
            (outdir / "convergence.csv").write_text(convergence_csv(rows))
            click.echo(f"wrote {outdir / 'convergence.csv'}")
    except SlapTooLarge as exc:
        raise LimitExceeded(str(exc)) from exc
    except (CrswfError, GameError) as exc:
        raise ValidationFailure(str(exc)) from exc


@cli.command()
@click.argument("game")
@click.option("--out", type=click.Path(dir_okay=False))
def emit(game, out):
    """Write a generated game in the text game format."""
    write_out(emit_game(load_game(game)), out)


def main(argv: list[str] | None = None) -> int:
    try:
        cli.main(args=argv, prog_name="irabs", standalone_mode=False)
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return EXIT_USAGE
    except click.UsageError as exc:
        exc.show()
        return EXIT_USAGE
    except click.ClickException as exc:
        exc.show()
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
