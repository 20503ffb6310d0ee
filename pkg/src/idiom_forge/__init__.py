"""Exhaustive state-space search for SIMD instruction idioms."""

from .isa import (
    Form,
    Instruction,
    InstructionTemplate,
    Transition,
    apply_transition,
    instantiate,
    lane_independent,
    load_default_isa,
    parse_isa,
)
from .machine import GoalPattern, MachineState, Opaque, Packed, match_goal, opaque_start, state_key
from .query import Query, parse_cost_model, parse_query
from .report import Report, emit, run_query
from .search import (
    CapacityExceeded,
    SearchBudget,
    SearchStats,
    Sequence,
    bfs_search,
    cost_search,
    dedup_renames,
    ids_search,
)
from .terms import App, IntLit, Operator, Sym, WILD, fold_binop, match_term, normalize_ac, parse_term, print_term
from .verify import run_concrete, verify_sequence

__all__ = [
    "App", "CapacityExceeded", "Form", "GoalPattern", "Instruction", "InstructionTemplate",
    "IntLit", "MachineState", "Opaque", "Operator", "Packed", "Query", "Report", "SearchBudget",
    "SearchStats", "Sequence", "Sym", "Transition", "WILD", "apply_transition", "bfs_search",
    "cost_search", "dedup_renames", "emit", "fold_binop", "ids_search", "instantiate",
    "lane_independent", "load_default_isa", "match_goal", "match_term", "normalize_ac",
    "opaque_start", "parse_cost_model", "parse_isa", "parse_query", "parse_term", "print_term",
    "run_concrete", "run_query", "state_key", "verify_sequence",
]
