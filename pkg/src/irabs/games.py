"""Benchmark games: the Figure 1 fragment, (correlated) die-roll poker, random games."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .crswf import AbstractionMap
from .efg_core import CHANCE, LEAF, GameError, GameTree, RawNode, build_game


# ---------------------------------------------------------------- Figure 1
def make_figure1_game() -> tuple[GameTree, AbstractionMap]:
    """The two Figure 1 subtrees joined under a uniform chance root.

    Player 2 utility is 10 minus player 1's, so the game is constant-sum.
    """
    half = Fraction(1, 2)
    nodes: list[RawNode] = []

    def leaf(nid, u1):
        nodes.append(RawNode(nid, LEAF, utils=(Fraction(u1), Fraction(10 - u1))))
        return nid

    def p1(nid, iid, labels, payoffs):
        kids = [leaf(f"{nid}{lab}", u) for lab, u in zip(labels, payoffs)]
        nodes.append(RawNode(nid, 1, iid, list(labels), kids))
        return nid

    def nature(nid, probs, kids):
        nodes.append(RawNode(nid, CHANCE, None, [f"o{k + 1}" for k in range(len(kids))], kids,
                             [Fraction(p) for p in probs]))
        return nid

    # left subtree
    n1 = p1("n1", "P1.La", "lr", (10, 0))
    n2 = p1("n2", "P1.La", "lr", (0, 10))
    n3 = p1("n3", "P1.Lb", "LR", (10, 0))
    n4 = p1("n4", "P1.Lb", "LR", (0, 9))
    la = nature("La", (half, half), [n1, n2])
    lb = nature("Lb", (half, half), [n3, n4])
    nodes.append(RawNode("left", 2, "P2.L", ["a", "b"], [la, lb]))
    # right subtree; the upper-case actions of the figure share labels with the
    # left so the merged sets have identical action labels
    n5 = p1("n5", "P1.Ra", "lr", (10, 0))
    n6 = p1("n6", "P1.Ra", "lr", (0, 10))
    n7 = p1("n7", "P1.Rb", "LR", (10, 0))
    n8 = p1("n8", "P1.Rb", "LR", (0, 10))
    ra = nature("Ra", (Fraction(2, 5), Fraction(3, 5)), [n5, n6])
    rb = nature("Rb", (half, half), [n7, n8])
    nodes.append(RawNode("right", 2, "P2.R", ["a", "b"], [ra, rb]))
    nodes.append(RawNode("root", CHANCE, None, ["L", "R"], ["left", "right"], [half, half]))
    game = build_game("figure1", 2, nodes)
    amap = AbstractionMap(
        {"P2": ("P2.L", "P2.R"), "P1.a": ("P1.La", "P1.Ra"), "P1.b": ("P1.Lb", "P1.Rb")},
        deltas={},
        default_delta="one",
    )
    return game, amap


# ------------------------------------------------------------ die-roll poker
@dataclass(frozen=True)
class DrpSpec:
    sides: int = 6
    c: Fraction = Fraction(0)
    raise_sizes: tuple[int, int] = (2, 4)
    ante: int = 1
    max_raises: int = 2

    def __post_init__(self):
        object.__setattr__(self, "c", Fraction(self.c))
        if self.sides < 2:
            raise GameError("need at least two die sides")
        if self.c < 0:
            raise GameError("correlation must be non-negative")

    @property
    def max_commitment(self) -> int:
        return self.ante + self.max_raises * sum(self.raise_sizes)


def roll_distribution(sides: int, c: Fraction) -> dict[tuple[int, int], Fraction]:
    """Joint distribution of one round's rolls (v1, v2).

    Off-diagonal pairs get max(0, 1/sides² − c·|v1−v2|); each diagonal pair takes
    the remaining mass of its row, so both marginals stay uniform and the table
    sums to exactly one.
    """
    c = Fraction(c)
    base = Fraction(1, sides * sides)
    probs: dict[tuple[int, int], Fraction] = {}
    for v in range(1, sides + 1):
        off = {w: max(Fraction(0), base - c * abs(v - w)) for w in range(1, sides + 1) if w != v}
        diag = Fraction(1, sides) - sum(off.values(), Fraction(0))
        if diag < 0:
            raise GameError(f"correlation {c} gives a negative probability")
        for w in range(1, sides + 1):
            probs[(v, w)] = diag if w == v else off[w]
    return probs


def make_drp(spec: DrpSpec | int = 6) -> GameTree:
    """Two-round die-roll poker; zero-sum payoffs shifted to be non-negative."""
    if isinstance(spec, int):
        spec = DrpSpec(sides=spec)
    dist = roll_distribution(spec.sides, spec.c)
    outcomes = sorted(dist)
    nodes: list[RawNode] = []

    def label(v, w):
        return f"{v}-{w}"

    def chance(nid, prefix_r1, hist, commit, rnd):
        kids = []
        for v, w in outcomes:
            rolls = prefix_r1 + [(v, w)]
            kid = f"{nid}.{label(v, w)}"
            decision(kid, rolls, hist, commit, rnd, 1, 0, "")
            kids.append(kid)
        nodes.append(RawNode(nid, CHANCE, None, [label(v, w) for v, w in outcomes], kids,
                             [dist[o] for o in outcomes]))

    def own(rolls, player):
        return ".".join(str(r[player - 1]) for r in rolls)

    def decision(nid, rolls, prev_hist, commit, rnd, to_act, raises, hist):
        size = spec.raise_sizes[rnd - 1]
        facing = commit[to_act - 1] < commit[2 - to_act]
        acts = (["f", "c"] if facing else ["c"]) + (["r"] if raises < spec.max_raises else [])
        full = "/".join(prev_hist + [hist])
        iid = f"P{to_act}:{own(rolls, to_act)}:{full}"
        kids = []
        for a in acts:
            kid = f"{nid}.{a}"
            kids.append(kid)
            h = hist + a
            if a == "f":
                win = commit[to_act - 1]
                u1 = Fraction(-win if to_act == 1 else win)
                nodes.append(RawNode(kid, LEAF, utils=(u1, -u1)))
            elif a == "c":
                c = (max(commit), max(commit))
                if hist:
                    if rnd == 1:
                        chance(kid, rolls, prev_hist + [h], c, 2)
                    else:
                        s1 = sum(r[0] for r in rolls)
                        s2 = sum(r[1] for r in rolls)
                        u1 = Fraction(c[0] * ((s1 > s2) - (s1 < s2)))
                        nodes.append(RawNode(kid, LEAF, utils=(u1, -u1)))
                else:
                    decision(kid, rolls, prev_hist, c, rnd, 3 - to_act, raises, h)
            else:
                c = list(commit)
                c[to_act - 1] = commit[2 - to_act] + size
                decision(kid, rolls, prev_hist, tuple(c), rnd, 3 - to_act, raises + 1, h)
        nodes.append(RawNode(nid, to_act, iid, acts, kids))

    name = f"drp{spec.sides}" if spec.c == 0 else f"cdrp{spec.sides}_c{spec.c}"
    chance("d", [], [], (spec.ante, spec.ante), 1)
    return build_game(name, 2, nodes)


def make_cdrp(spec: DrpSpec) -> GameTree:
    """Correlated die-roll poker; rounds are independent, each with the correlated table.

    With c = 0 this is exactly make_drp.
    """
    return make_drp(spec)


def drp_bottom_groups(game: GameTree, player: int) -> tuple[list[tuple[int, ...]], list[list[str]]]:
    """Round-2 information sets of ``player`` grouped by the player's roll pair.

    Returns the roll pairs (candidates) and, for each, the list of its
    information sets aligned by betting history.
    """
    by_roll: dict[tuple[int, ...], dict[str, str]] = {}
    for iid in game.infosets_of(player):
        if not iid.startswith("P"):
            continue
        tag, rolls, hist = iid.split(":")
        if "/" not in hist:
            continue
        key = tuple(int(x) for x in rolls.split("."))
        by_roll.setdefault(key, {})[hist] = iid
    cands = sorted(by_roll)
    hists = sorted(by_roll[cands[0]])
    return cands, [[by_roll[c][h] for h in hists] for c in cands]


# ------------------------------------------------------------- random games
@dataclass
class RandomGame:
    game: GameTree
    groups: list[list[str]]


def make_random_game(seed: int, branching: int = 3, utility_radius: Fraction = Fraction(0),
                     prob_radius: Fraction = Fraction(0), constant_sum: bool = False) -> RandomGame:
    """Random two-player perfect-recall game with mergeable information-set groups.

    Shape (depth 5 plus leaves): player-1 root, a joint deal (c, h), player 2
    sees h, player 1 sees c and player 2's action, then a cloned template.
    Player-1 sets differing only in c and player-2 template sets differing only
    in h form the groups; their subtrees share shape and differ by perturbations
    of utilities and nature probabilities bounded by the given radii. With
    ``constant_sum`` player 2 receives 10 minus player 1's payoff; the random
    stream is the same either way.
    """
    if not 2 <= branching <= 3:
        raise GameError("branching must be 2 or 3")
    rng = np.random.default_rng(seed)
    ur, pr = Fraction(utility_radius), Fraction(prob_radius)

    def count():
        return int(rng.integers(2, branching + 1))

    def jitter(radius):
        return Fraction(int(rng.integers(-100, 101)), 100) * radius

    def perturbed_dist(base):
        vals = [max(Fraction(1, 100), b + jitter(pr)) for b in base]
        tot = sum(vals)
        return [v / tot for v in vals]

    def random_dist(n):
        w = [Fraction(int(rng.integers(1, 10))) for _ in range(n)]
        return [x / sum(w) for x in w]

    nodes: list[RawNode] = []
    groups: dict[str, list[str]] = {}
    na = count()
    acts_a = [f"a{k}" for k in range(na)]
    root_kids = []
    for a in acts_a:
        nc, nh, nb = count(), count(), count()
        pc = random_dist(nc)
        ph = random_dist(nh)
        ph_c = [perturbed_dist(ph) for _ in range(nc)]
        # template per b: list of (action, kind, arity)
        templates = {}
        for b in range(nb):
            t = []
            for k in range(count()):
                kind = ["leaf", "chance", "p2"][int(rng.integers(0, 3))]
                t.append((f"x{k}", kind, 1 if kind == "leaf" else count()))
            templates[b] = t
        # base parameters per template leaf, perturbed independently at every clone
        base = {}
        for b in range(nb):
            for act, kind, arity in templates[b]:
                u = [[Fraction(int(rng.integers(0, 11))) for _ in range(2)] for _ in range(arity)]
                p = random_dist(arity) if kind == "chance" else None
                base[(b, act)] = (u, p)
        deal = f"{a}"
        deal_kids, deal_labels, deal_probs = [], [], []
        for c in range(nc):
            for h in range(nh):
                node_q = f"{a}.c{c}h{h}"
                deal_kids.append(node_q)
                deal_labels.append(f"c{c}h{h}")
                deal_probs.append(pc[c] * ph_c[c][h])
                q_kids = []
                for b in range(nb):
                    node_g = f"{node_q}.b{b}"
                    q_kids.append(node_g)
                    g_iid = f"G:{a}:c{c}:b{b}"
                    groups.setdefault(f"G:{a}:b{b}", [])
                    if g_iid not in groups[f"G:{a}:b{b}"]:
                        groups[f"G:{a}:b{b}"].append(g_iid)
                    g_kids = []
                    for act, kind, arity in templates[b]:
                        u, p = base[(b, act)]
                        uc = [[max(Fraction(0), x + jitter(ur)) for x in pair] for pair in u]
                        if constant_sum:
                            uc = [[pair[0], 10 - pair[0]] for pair in uc]
                        kid = f"{node_g}.{act}"
                        g_kids.append(kid)
                        if kind == "leaf":
                            nodes.append(RawNode(kid, LEAF, utils=tuple(uc[0])))
                            continue
                        sub = []
                        for j in range(arity):
                            lid = f"{kid}.y{j}"
                            nodes.append(RawNode(lid, LEAF, utils=tuple(uc[j])))
                            sub.append(lid)
                        labels = [f"y{j}" for j in range(arity)]
                        if kind == "chance":
                            nodes.append(RawNode(kid, CHANCE, None, labels, sub, perturbed_dist(p)))
                        else:
                            t_iid = f"T:{a}:h{h}:b{b}:{act}"
                            gkey = f"T:{a}:b{b}:{act}"
                            groups.setdefault(gkey, [])
                            if t_iid not in groups[gkey]:
                                groups[gkey].append(t_iid)
                            nodes.append(RawNode(kid, 2, t_iid, labels, sub))
                    nodes.append(RawNode(node_g, 1, g_iid, [act for act, _, _ in templates[b]], g_kids))
                nodes.append(RawNode(node_q, 2, f"Q:{a}:h{h}", [f"b{b}" for b in range(nb)], q_kids))
        nodes.append(RawNode(deal, CHANCE, None, deal_labels, deal_kids, deal_probs))
        root_kids.append(deal)
    nodes.append(RawNode("root", 1, "R", acts_a, root_kids))
    game = build_game(f"random{seed}", 2, nodes)
    return RandomGame(game, [g for g in groups.values() if len(g) > 1])
