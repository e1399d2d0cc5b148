"""Confluence analyzer for CHR programs under the abstract semantics."""

from .syntax import Atom, Eq, ParseError, Program, Rule, parse_program, parse_state
from .state import CanonicalState, State, canonicalize, compose, equivalent
from .terms import Compound, Term, Var, apply, unify


def pretty(value) -> str:
    from .reports import pretty as _pretty

    return _pretty(value)


__all__ = [
    "Atom",
    "CanonicalState",
    "Compound",
    "Eq",
    "ParseError",
    "Program",
    "Rule",
    "State",
    "Term",
    "Var",
    "apply",
    "canonicalize",
    "compose",
    "equivalent",
    "parse_program",
    "parse_state",
    "pretty",
    "unify",
]
