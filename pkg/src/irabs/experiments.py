"""Reproductions of the DRP bound curve and the CDRP convergence runs as CSV rows."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .abstraction import (
    SlapInstance,
    build_abstraction,
    combine_maps,
    exact_cluster,
    gonzalez_cluster,
    group_instance,
)
from .bounds import strategy_agnostic_bound
from .cfr import CfrSolver, lift_strategy
from .crswf import AbstractionMap, verify_crswf
from .efg_core import GameTree, full_game_regrets
from .games import DrpSpec, drp_bottom_groups, make_cdrp, make_drp

BOUNDS_HEADER = ["k", "objective", "bound", "bound_p1", "bound_p2"]
CONVERGENCE_HEADER = ["c", "iteration", "regret_sum", "theorem2_line"]
DEFAULT_C_GRID = tuple(Fraction(j, 100) for j in range(8))


def fmt(x: float) -> str:
    """17 significant digits, enough to round-trip a float64."""
    return format(float(x), ".17g")


def to_csv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) if isinstance(v, float) else str(v) for v in row])
    return buf.getvalue()


def log_checkpoints(total: int, per_decade: int = 4) -> list[int]:
    pts = {total}
    j = 0
    while (t := int(round(10 ** (j / per_decade)))) < total:
        pts.add(t)
        j += 1
    return sorted(pts)


# ------------------------------------------------------------ abstractions
def bottom_instances(game: GameTree, objective: str = "weighted") -> dict[int, SlapInstance]:
    """One SLAP per player over the final-round roll combinations."""
    out = {}
    for p in game.players:
        cands, members = drp_bottom_groups(game, p)
        names = [".".join(map(str, c)) for c in cands]
        out[p] = group_instance(game, names, members, objective)
    return out


def abstraction_for(insts: dict[int, SlapInstance], k: int, method: str = "exact"
                    ) -> tuple[AbstractionMap, dict[int, float]]:
    maps, objs = [], {}
    for p, inst in insts.items():
        kk = min(k, inst.size)
        cl = exact_cluster(inst, kk) if method == "exact" else gonzalez_cluster(inst, kk)
        objs[p] = cl.objective
        maps.append(build_abstraction(inst.members, cl, prefix=f"p{p}"))
    return combine_maps(*maps), objs


# -------------------------------------------------------- bound curve
@dataclass
class BoundRow:
    k: int
    objective: float
    bound: float
    bound_p1: float
    bound_p2: float

    def cells(self) -> tuple:
        return (self.k, self.objective, self.bound, self.bound_p1, self.bound_p2)


def drp_bound_curve(sides: int = 6, ks: Iterable[int] = range(1, 13), method: str = "exact",
                    objective: str = "weighted", game: GameTree | None = None) -> list[BoundRow]:
    """Per k: summed clustering objective and the strategy-agnostic Theorem 2 bound.

    ``bound`` is ε = max_i ε_i; the per-player values follow.
    """
    game = game if game is not None else make_drp(DrpSpec(sides=sides))
    insts = bottom_instances(game, objective)
    rows = []
    for k in ks:
        amap, objs = abstraction_for(insts, k, method)
        res = strategy_agnostic_bound(game, verify_crswf(game, amap))
        rows.append(BoundRow(k, float(sum(objs.values())), res.epsilon,
                             res.per_player[1], res.per_player[2]))
    return rows


# -------------------------------------------------------- convergence
@dataclass
class ConvergenceRow:
    c: Fraction
    iteration: int
    regret_sum: float
    line: float

    def cells(self) -> tuple:
        return (str(self.c), self.iteration, self.regret_sum, self.line)


def cdrp_series(c: Fraction, sides: int = 4, iterations: int = 100_000, k: int | None = None,
                seed: int = 0, method: str = "exact") -> list[ConvergenceRow]:
    """CFR on the bound-minimizing final-round abstraction of CDRP(c).

    k defaults to 2·sides − 1 per player, the number of distinct roll sums,
    which makes the c = 0 abstraction lossless. The line is ε₁ + ε₂ of the
    strategy-agnostic bound, comparable with the plotted r₁ + r₂.
    """
    game = make_cdrp(DrpSpec(sides=sides, c=Fraction(c)))
    k = 2 * sides - 1 if k is None else k
    amap, _ = abstraction_for(bottom_instances(game), k, method)
    line = strategy_agnostic_bound(game, verify_crswf(game, amap)).total
    abstract = amap.abstract_game(game)
    solver = CfrSolver(abstract, seed)
    rows = []
    done = 0
    for t in log_checkpoints(iterations):
        solver.iterate(t - done)
        done = t
        lifted = lift_strategy(solver.average(), amap, game)
        reg = full_game_regrets(game, lifted)
        rows.append(ConvergenceRow(Fraction(c), t, float(sum(reg.values())), float(line)))
    return rows


def cdrp_convergence(cs: Iterable[Fraction] = DEFAULT_C_GRID, **kw) -> list[ConvergenceRow]:
    rows: list[ConvergenceRow] = []
    for c in cs:
        rows.extend(cdrp_series(Fraction(c), **kw))
    return rows


def bounds_csv(rows: Iterable[BoundRow]) -> str:
    return to_csv(BOUNDS_HEADER, (r.cells() for r in rows))


def convergence_csv(rows: Iterable[ConvergenceRow]) -> str:
    return to_csv(CONVERGENCE_HEADER, (r.cells() for r in rows))
