"""Extensive-form game model: tree, file format, reach, values, regrets."""
from .fileformat import GameFormatError, emit_game, format_rational, parse_game, parse_rational
from .model import CHANCE, LEAF, GameError, GameTree, RawNode, build_game, tree_to_raw
from .values import (
    InfosetValue,
    ReachTable,
    RegretReport,
    Schedule,
    StrategyProfile,
    best_response,
    compute_reach,
    counterfactual_value,
    edge_probs,
    full_game_regrets,
    immediate_regrets,
    imperfect_value,
    is_perfect_recall,
    node_values,
    own_signatures,
    perfect_recall_sets,
    schedule,
)

__all__ = [
    "CHANCE", "LEAF", "GameError", "GameFormatError", "GameTree", "RawNode", "InfosetValue",
    "ReachTable", "RegretReport", "Schedule", "StrategyProfile", "best_response", "build_game",
    "compute_reach", "counterfactual_value", "edge_probs", "emit_game", "format_rational",
    "full_game_regrets", "immediate_regrets", "imperfect_value", "is_perfect_recall",
    "node_values", "own_signatures", "parse_game", "parse_rational", "perfect_recall_sets",
    "schedule", "tree_to_raw",
]
