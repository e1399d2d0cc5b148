"""Labeled transition relation and bounded derivation machinery.

A step fires a rule on a canonical state: the rule is renamed apart,
its head atoms are matched injectively onto distinct store positions
(binding rule variables only), guard equations must be syntactically
satisfied after matching, and the target adjoins the body. Propagation
rules re-fire on their own output; no token store is kept, so the
relation is faithfully the abstract one and derivations can loop.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Union

from .state import CanonicalState, State, canonicalize, equivalent
from .syntax import Atom, Program, Rule
from .terms import Subst, Term, Var, apply, fresh_mapping, match


class ReplayError(Exception):
    pass


@dataclass(frozen=True)
class LabeledStep:
    rule_name: str
    matched_kept: tuple[int, ...]
    matched_removed: tuple[int, ...]
    bindings: tuple[tuple[str, Term], ...]
    target: CanonicalState

    def unifier(self) -> Subst:
        return dict(self.bindings)


@dataclass(frozen=True)
class Derivation:
    source: CanonicalState
    steps: tuple[LabeledStep, ...] = ()

    def labels(self) -> list[str]:
        return [s.rule_name for s in self.steps]

    def final(self) -> CanonicalState:
        return self.steps[-1].target if self.steps else self.source

    def extend(self, step: LabeledStep) -> "Derivation":
        return Derivation(self.source, self.steps + (step,))


def _match_heads(
    heads: Sequence[Atom],
    store: Sequence[Atom],
    theta: Subst,
    used: tuple[int, ...],
) -> Iterable[tuple[tuple[int, ...], Subst]]:
    """All injective assignments of head occurrences to store positions."""
    if not heads:
        yield used, theta
        return
    head = heads[0]
    for i, atom in enumerate(store):
        if i in used or atom.pred != head.pred or len(atom.args) != len(head.args):
            continue
        extended = match(zip(head.args, atom.args), theta)
        if extended is None:
            continue
        yield from _match_heads(heads[1:], store, extended, used + (i,))


def _step_for(
    rule: Rule,
    renamed: Rule,
    rename: Subst,
    cst: CanonicalState,
    kept_pos: tuple[int, ...],
    removed_pos: tuple[int, ...],
    theta: Subst,
) -> LabeledStep:
    removed = set(removed_pos)
    atoms = [a for i, a in enumerate(cst.atoms) if i not in removed]
    atoms += [a.subst(theta) for a in renamed.user_body]
    builtins = cst.residuals + tuple(e.subst(theta) for e in renamed.builtin_body)
    target = canonicalize(State(tuple(atoms), builtins, cst.globals))
    bindings = []
    for v in rule.variables():
        image = rename.get(v, Var(v))
        bindings.append((v, apply(theta, image)))
    return LabeledStep(rule.name, kept_pos, removed_pos, tuple(bindings), target)


def applicable_steps(
    program: Program,
    state: Union[State, CanonicalState],
    allowed: Optional[Iterable[str]] = None,
) -> list[LabeledStep]:
    """Every (rule, injective head match) step from the canonical state.

    Duplicate store atoms yield distinct steps with equivalent targets;
    deduplication is the searcher's business. The inconsistent state is
    absorbing and reported as a fixpoint (no steps).
    """
    cst = canonicalize(state)
    if cst.bottom:
        return []
    allowed_set = set(allowed) if allowed is not None else None
    avoid = set()
    for a in cst.atoms:
        avoid.update(a.iter_vars())
    for e in cst.residuals:
        avoid.update(e.iter_vars())
    avoid |= cst.globals

    out: list[LabeledStep] = []
    for rule in program.rules:
        if allowed_set is not None and rule.name not in allowed_set:
            continue
        renaming = fresh_mapping(avoid, rule.variables())
        renamed = rule.subst(renaming)
        n_kept = len(renamed.kept)
        for pos, theta in _match_heads(renamed.kept + renamed.removed, cst.atoms, {}, ()):
            guard_ok = all(
                apply(theta, e.lhs) == apply(theta, e.rhs) for e in renamed.guard
            )
            if not guard_ok:
                continue
            out.append(
                _step_for(rule, renamed, renaming, cst, pos[:n_kept], pos[n_kept:], theta)
            )
    return out


def _reapply(program: Program, cst: CanonicalState, step: LabeledStep) -> CanonicalState:
    try:
        rule = program.rule(step.rule_name)
    except KeyError:
        raise ReplayError(f"unknown rule {step.rule_name!r}")
    if cst.bottom:
        raise ReplayError("no steps apply to the inconsistent state")
    avoid = set()
    for a in cst.atoms:
        avoid.update(a.iter_vars())
    for e in cst.residuals:
        avoid.update(e.iter_vars())
    avoid |= cst.globals
    renaming = fresh_mapping(avoid, rule.variables())
    renamed = rule.subst(renaming)
    positions = step.matched_kept + step.matched_removed
    heads = renamed.kept + renamed.removed
    if len(positions) != len(heads) or len(set(positions)) != len(positions):
        raise ReplayError(f"step of rule {rule.name!r} has malformed positions")
    theta: Optional[Subst] = {}
    for head, i in zip(heads, positions):
        if i >= len(cst.atoms):
            raise ReplayError(f"position {i} out of range for rule {rule.name!r}")
        atom = cst.atoms[i]
        if atom.pred != head.pred or len(atom.args) != len(head.args):
            raise ReplayError(f"rule {rule.name!r} no longer matches position {i}")
        theta = match(zip(head.args, atom.args), theta)
        if theta is None:
            raise ReplayError(f"rule {rule.name!r} no longer matches position {i}")
    for e in renamed.guard:
        if apply(theta, e.lhs) != apply(theta, e.rhs):
            raise ReplayError(f"guard of rule {rule.name!r} is not entailed")
    rebuilt = _step_for(
        rule, renamed, renaming, cst, step.matched_kept, step.matched_removed, theta
    )
    if not equivalent(rebuilt.target, step.target):
        raise ReplayError(f"step of rule {rule.name!r} reaches a different state")
    return rebuilt.target


def replay(program: Program, derivation: Derivation) -> CanonicalState:
    """Re-execute a derivation by rule name and match positions.

    Raises ReplayError when a step no longer applies or lands on a state
    that is not equivalent to the recorded one (corrupt certificate).
    """
    cur = canonicalize(derivation.source)
    for step in derivation.steps:
        cur = _reapply(program, cur, step)
    return cur


@dataclass
class ReachResult:
    entries: list[tuple[CanonicalState, Derivation]]
    depth_truncated: bool = False
    states_truncated: bool = False


def reachable(
    program: Program,
    state: Union[State, CanonicalState],
    allowed: Optional[Iterable[str]] = None,
    max_depth: int = 8,
    max_states: int = 2000,
) -> ReachResult:
    """Breadth-first closure of the step relation, deduplicated by equivalence."""
    start = canonicalize(state)
    result = ReachResult(entries=[(start, Derivation(start))])
    buckets: dict[tuple, list[int]] = {start.signature(): [0]}
    frontier = [0]
    depth = 0
    while frontier:
        if depth >= max_depth:
            result.depth_truncated = True
            break
        depth += 1
        next_frontier: list[int] = []
        for idx in frontier:
            cst, deriv = result.entries[idx]
            for step in applicable_steps(program, cst, allowed):
                sig = step.target.signature()
                known = buckets.setdefault(sig, [])
                if any(equivalent(step.target, result.entries[j][0]) for j in known):
                    continue
                if len(result.entries) >= max_states:
                    result.states_truncated = True
                    return result
                result.entries.append((step.target, deriv.extend(step)))
                known.append(len(result.entries) - 1)
                next_frontier.append(len(result.entries) - 1)
        frontier = next_frontier
    return result
