"""Line-oriented text format for games.

    game <name> players=<N> [shift=<q1>,<q2>,...]
    node <id> owner=<p<k>|chance> [infoset=<iid>] [dummy]
    edge <parent-id> <action-label> <child-id> [prob=<num>/<den>]
    leaf <id> utils=<q1>,<q2>,...

'#' starts a comment. Rationals are written ``a/b`` or as integers.
"""
from __future__ import annotations

from fractions import Fraction

from .model import CHANCE, LEAF, GameError, GameTree, RawNode, build_game


class GameFormatError(GameError):
    def __init__(self, lineno: int, msg: str):
        super().__init__(f"line {lineno}: {msg}")
        self.lineno = lineno


def parse_rational(tok: str) -> Fraction:
    try:
        return Fraction(tok)
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"bad rational {tok!r}") from exc


def format_rational(q: Fraction) -> str:
    q = Fraction(q)
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def _kv(tokens: list[str], lineno: int) -> tuple[dict[str, str], set[str]]:
    kv: dict[str, str] = {}
    flags: set[str] = set()
    for tok in tokens:
        if "=" in tok:
            k, v = tok.split("=", 1)
            if not k or not v:
                raise GameFormatError(lineno, f"malformed field {tok!r}")
            kv[k] = v
        else:
            flags.add(tok)
    return kv, flags


def parse_game(text: str) -> GameTree:
    """Parse a game document and return the normalized tree."""
    name = None
    num_players = 0
    shift = None
    nodes: dict[str, RawNode] = {}
    edges: list[tuple[int, str, str, str, str | None]] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        kind = tok[0]
        try:
            if kind == "game":
                if name is not None:
                    raise GameFormatError(lineno, "duplicate game header")
                if len(tok) < 3:
                    raise GameFormatError(lineno, "expected 'game <name> players=<N>'")
                kv, flags = _kv(tok[2:], lineno)
                if flags or "players" not in kv:
                    raise GameFormatError(lineno, "expected 'game <name> players=<N>'")
                name = tok[1]
                num_players = int(kv["players"])
                if num_players < 1:
                    raise GameFormatError(lineno, "players must be positive")
                if "shift" in kv:
                    shift = [parse_rational(x) for x in kv["shift"].split(",")]
            elif kind == "node":
                if len(tok) < 3:
                    raise GameFormatError(lineno, "expected 'node <id> owner=...'")
                nid = tok[1]
                kv, flags = _kv(tok[2:], lineno)
                if flags - {"dummy"}:
                    raise GameFormatError(lineno, f"unknown flag(s) {sorted(flags - {'dummy'})}")
                own = kv.get("owner")
                if own == "chance":
                    owner = CHANCE
                elif own is not None and own.startswith("p") and own[1:].isdigit():
                    owner = int(own[1:])
                else:
                    raise GameFormatError(lineno, f"bad owner {own!r}")
                iid = kv.get("infoset")
                if owner != CHANCE and iid is None:
                    raise GameFormatError(lineno, "player node needs infoset=")
                if nid in nodes:
                    raise GameFormatError(lineno, f"duplicate node id {nid!r}")
                nodes[nid] = RawNode(nid, owner, iid if owner != CHANCE else None,
                                     dummy="dummy" in flags)
            elif kind == "leaf":
                if len(tok) != 3 or not tok[2].startswith("utils="):
                    raise GameFormatError(lineno, "expected 'leaf <id> utils=<q1>,...'")
                nid = tok[1]
                if nid in nodes:
                    raise GameFormatError(lineno, f"duplicate node id {nid!r}")
                utils = tuple(parse_rational(x) for x in tok[2][len("utils="):].split(","))
                nodes[nid] = RawNode(nid, LEAF, utils=utils)
            elif kind == "edge":
                if len(tok) not in (4, 5):
                    raise GameFormatError(lineno, "expected 'edge <parent> <label> <child> [prob=a/b]'")
                prob = None
                if len(tok) == 5:
                    if not tok[4].startswith("prob="):
                        raise GameFormatError(lineno, f"unexpected token {tok[4]!r}")
                    prob = tok[4][len("prob="):]
                edges.append((lineno, tok[1], tok[2], tok[3], prob))
            else:
                raise GameFormatError(lineno, f"unknown directive {kind!r}")
        except ValueError as exc:
            if isinstance(exc, GameFormatError):
                raise
            raise GameFormatError(lineno, str(exc)) from exc
    if name is None:
        raise GameFormatError(1, "missing game header")
    for lineno, par, label, child, prob in edges:
        if par not in nodes:
            raise GameFormatError(lineno, f"dangling node reference {par!r}")
        if child not in nodes:
            raise GameFormatError(lineno, f"dangling node reference {child!r}")
        raw = nodes[par]
        if raw.owner == LEAF:
            raise GameFormatError(lineno, f"edge out of leaf {par!r}")
        if raw.owner == CHANCE:
            if prob is None:
                raise GameFormatError(lineno, "edge out of a chance node needs prob=")
            try:
                raw.probs.append(parse_rational(prob))
            except ValueError as exc:
                raise GameFormatError(lineno, str(exc)) from exc
        elif prob is not None:
            raise GameFormatError(lineno, "prob= only allowed on chance edges")
        raw.actions.append(label)
        raw.children.append(child)
    for raw in nodes.values():
        if raw.owner > num_players:
            raise GameError(f"node {raw.id!r} owned by p{raw.owner} but game has {num_players} players")
    return build_game(name, num_players, list(nodes.values()), shift=shift)


def emit_game(tree: GameTree) -> str:
    """Serialize a tree; parse_game(emit_game(t)) == t."""
    head = f"game {tree.name} players={tree.num_players}"
    if any(tree.shift):
        head += " shift=" + ",".join(format_rational(s) for s in tree.shift)
    lines = [head]
    for n in range(tree.num_nodes):
        nid = tree.ids[n]
        own = tree.owners[n]
        if own == LEAF:
            lines.append(f"leaf {nid} utils=" + ",".join(format_rational(u) for u in tree.utilities[n]))
            continue
        line = f"node {nid} owner=" + ("chance" if own == CHANCE else f"p{own} infoset={tree.infosets[n]}")
        if tree.dummy[n]:
            line += " dummy"
        lines.append(line)
        for a, (label, c) in enumerate(zip(tree.actions[n], tree.children[n])):
            e = f"edge {nid} {label} {tree.ids[c]}"
            if own == CHANCE:
                e += f" prob={format_rational(tree.probs[n][a])}"
            lines.append(e)
    return "\n".join(lines) + "\n"
