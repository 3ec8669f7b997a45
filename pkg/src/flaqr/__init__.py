"""FLAQR: information flow control for confidentiality, integrity and availability."""

from .blame import BlameConstraint, init_blame, lfl, run_with_blame
from .interp import FaultMode, FaultPlan, global_step, initial_config, run_to_completion
from .ni import BracketCtx, NIResult, ni_check
from .principals import acts_for, flows_to
from .quorum import QuorumSystem, guards, majority_bound, toleration_set
from .syntax import parse_expr, parse_principal, parse_program, parse_source, parse_type, show_expr, show_type
from .typecheck import FlaqrTypeError, TypingCtx, typecheck_config, typecheck_expr

__version__ = "0.1.0"

__all__ = [
    "BlameConstraint", "BracketCtx", "FaultMode", "FaultPlan", "FlaqrTypeError", "NIResult",
    "QuorumSystem", "TypingCtx", "acts_for", "flows_to", "global_step", "guards", "init_blame",
    "initial_config", "lfl", "majority_bound", "ni_check", "parse_expr", "parse_principal",
    "parse_program", "parse_source", "parse_type", "run_to_completion", "run_with_blame",
    "show_expr", "show_type", "toleration_set", "typecheck_config", "typecheck_expr",
]
