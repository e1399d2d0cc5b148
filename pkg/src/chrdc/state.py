"""CHR states, structural equivalence, and quantified conjunction.

A state is a user store (multiset of atoms), a built-in store
(conjunction of equations), and a set of global variables; every other
variable is local, read existentially. Equivalence is decided by
bringing states to a canonical form: the built-in store is solved by
unification, the solution is applied everywhere, the residual
constraints on globals are kept, live locals are renamed to a fixed
enumeration, and the store is sorted. Duplicate atoms can make the
local renaming ambiguous, so the equivalence check falls back to a
bijection search between local variables when canonical forms differ.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator, Mapping, Union

from .syntax import Atom, Eq, atom_text, eq_text
from .terms import FRESH_PREFIX, Compound, Subst, Term, Var, unify


@dataclass(frozen=True)
class State:
    atoms: tuple[Atom, ...]
    builtins: tuple[Eq, ...]
    globals: frozenset[str]

    def iter_vars(self) -> Iterator[str]:
        for a in self.atoms:
            yield from a.iter_vars()
        for e in self.builtins:
            yield from e.iter_vars()

    def free_vars(self) -> set[str]:
        return set(self.iter_vars())

    def all_vars(self) -> set[str]:
        return self.free_vars() | self.globals

    def subst(self, s: Mapping[str, Term]) -> "State":
        renamed_globals = []
        for g in self.globals:
            img = s.get(g)
            if img is None:
                renamed_globals.append(g)
            elif isinstance(img, Var):
                renamed_globals.append(img.name)
            else:
                raise ValueError("cannot substitute a global variable by a non-variable")
        return State(
            tuple(a.subst(s) for a in self.atoms),
            tuple(e.subst(s) for e in self.builtins),
            frozenset(renamed_globals),
        )


@dataclass(frozen=True)
class CanonicalState:
    """Normal form of a state; `bottom` marks the inconsistent class."""

    atoms: tuple[Atom, ...] = ()
    residuals: tuple[Eq, ...] = ()
    globals: frozenset[str] = frozenset()
    bottom: bool = False

    def locals(self) -> list[str]:
        seen: dict[str, None] = {}
        for a in self.atoms:
            for v in a.iter_vars():
                if v not in self.globals:
                    seen.setdefault(v)
        for e in self.residuals:
            for v in e.iter_vars():
                if v not in self.globals:
                    seen.setdefault(v)
        return list(seen)

    def as_state(self) -> State:
        if self.bottom:
            return State((), (Eq(Compound("0"), Compound("1")),), frozenset())
        return State(self.atoms, self.residuals, self.globals)

    def signature(self) -> tuple:
        """Hashable key that is invariant under renaming of locals."""
        if self.bottom:
            return ("<false>",)
        wild = {v: Var("_") for v in self.locals()}
        atoms = tuple(sorted(atom_text(a.subst(wild)) for a in self.atoms))
        eqs = tuple(sorted(eq_text(e.subst(wild)) for e in self.residuals))
        return (atoms, eqs, tuple(sorted(self.globals)))


INCONSISTENT = CanonicalState(bottom=True)

_LOCAL_PREFIX = "L"


def _orient(sigma: Subst, globals_: frozenset[str]) -> Subst:
    """Re-orient an mgu so variable classes use a canonical representative.

    Globals win over locals, ties go to the smaller name; this makes the
    solved form independent of the textual order of the input equations.
    """
    classes: dict[str, list[str]] = {}
    for v, t in sigma.items():
        if isinstance(t, Var):
            classes.setdefault(t.name, []).append(v)
    rename: Subst = {}
    for rep, members in classes.items():
        candidates = sorted(members + [rep])
        global_candidates = [c for c in candidates if c in globals_]
        chosen = global_candidates[0] if global_candidates else candidates[0]
        for c in candidates:
            if c != chosen:
                rename[c] = Var(chosen)
    out: Subst = {}
    for v, t in sigma.items():
        if not isinstance(t, Var):
            out[v] = _apply_rename(rename, t)
    for v, img in rename.items():
        out[v] = img
    return {v: t for v, t in out.items() if t != Var(v)}


def _apply_rename(rename: Subst, t: Term) -> Term:
    if isinstance(t, Var):
        r = rename.get(t.name)
        return r if r is not None else t
    if not t.args:
        return t
    return Compound(t.functor, tuple(_apply_rename(rename, a) for a in t.args))


def _term_key(t: Term, wild: bool) -> tuple:
    if isinstance(t, Var):
        return (0, "" if wild else t.name)
    return (1, t.functor, len(t.args), tuple(_term_key(a, wild) for a in t.args))


def _atom_key(a: Atom, wild: bool) -> tuple:
    return (a.pred, len(a.args), tuple(_term_key(x, wild) for x in a.args))


def canonicalize(s: Union[State, CanonicalState]) -> CanonicalState:
    if isinstance(s, CanonicalState):
        s = s.as_state()
    sigma = unify([(e.lhs, e.rhs) for e in s.builtins])
    if sigma is None:
        return INCONSISTENT
    sigma = _orient(sigma, s.globals)
    atoms = [a.subst(sigma) for a in s.atoms]
    residuals = [
        Eq(Var(g), sigma[g]) for g in sorted(s.globals) if g in sigma
    ]

    alive: set[str] = set()
    for a in atoms:
        alive.update(a.iter_vars())
    for e in residuals:
        alive.update(e.iter_vars())
    globs = frozenset(g for g in s.globals if g in alive)

    # First pass: order atoms with locals treated as equal, then assign
    # canonical local names by first occurrence in that order.
    def presort_key(a: Atom) -> tuple:
        return (_atom_key(a, wild=True), _atom_key(a, wild=False))

    atoms.sort(key=presort_key)
    renaming: Subst = {}
    counter = 0
    def fresh_local() -> str:
        nonlocal counter
        while True:
            cand = f"{_LOCAL_PREFIX}{counter}"
            counter += 1
            if cand not in globs:
                return cand
    for a in atoms:
        for v in a.iter_vars():
            if v not in globs and v not in renaming:
                renaming[v] = Var(fresh_local())
    for e in residuals:
        for v in e.iter_vars():
            if v not in globs and v not in renaming:
                renaming[v] = Var(fresh_local())

    atoms = [a.subst(renaming) for a in atoms]
    atoms.sort(key=lambda a: _atom_key(a, wild=False))
    residuals = [e.subst(renaming) for e in residuals]
    residuals.sort(key=lambda e: (_term_key(e.lhs, False), _term_key(e.rhs, False)))
    return CanonicalState(tuple(atoms), tuple(residuals), globs)


def _forms_match(c1: CanonicalState, c2: CanonicalState, mapping: Subst) -> bool:
    atoms = sorted((a.subst(mapping) for a in c2.atoms), key=lambda a: _atom_key(a, False))
    if tuple(atoms) != c1.atoms:
        return False
    eqs = sorted(
        (e.subst(mapping) for e in c2.residuals),
        key=lambda e: (_term_key(e.lhs, False), _term_key(e.rhs, False)),
    )
    return tuple(eqs) == c1.residuals


def equivalent(s1: Union[State, CanonicalState], s2: Union[State, CanonicalState]) -> bool:
    c1 = canonicalize(s1)
    c2 = canonicalize(s2)
    if c1 == c2:
        return True
    if c1.bottom or c2.bottom:
        return False
    if c1.globals != c2.globals or len(c1.atoms) != len(c2.atoms):
        return False
    if len(c1.residuals) != len(c2.residuals):
        return False
    if c1.signature() != c2.signature():
        return False
    # Canonical labeling of locals is heuristic when duplicate atoms are
    # present; search local-to-local bijections for an exact witness.
    loc1 = c1.locals()
    loc2 = c2.locals()
    if len(loc1) != len(loc2):
        return False
    for perm in itertools.permutations(loc1):
        mapping = {b: Var(a) for a, b in zip(perm, loc2)}
        if _forms_match(c1, c2, mapping):
            return True
    return False


def compose(s1: State, s2: State, quantified: frozenset[str] | set[str]) -> State:
    """Quantified conjunction: union the stores, then localize `quantified`.

    Shared variables must be global on both sides; callers rename locals
    apart first.
    """
    shared = s1.free_vars() & s2.free_vars()
    if not shared <= (s1.globals & s2.globals):
        offending = sorted(shared - (s1.globals & s2.globals))
        raise ValueError(
            f"compose: variables {offending} are shared but not global in both states"
        )
    return State(
        s1.atoms + s2.atoms,
        s1.builtins + s2.builtins,
        (s1.globals | s2.globals) - frozenset(quantified),
    )


# ---------------------------------------------------------------------------
# Display

def _surface_locals(s: State) -> State:
    """Rename internally generated local variables to parseable names."""
    reserved = [
        v
        for v in dict.fromkeys(s.iter_vars())
        if v.startswith(FRESH_PREFIX) and v not in s.globals
    ]
    if not reserved:
        return s
    taken = s.all_vars()
    mapping: Subst = {}
    counter = 0
    for v in reserved:
        while f"{_LOCAL_PREFIX}{counter}" in taken:
            counter += 1
        mapping[v] = Var(f"{_LOCAL_PREFIX}{counter}")
        counter += 1
    return s.subst(mapping)


def state_text(s: State) -> str:
    """Parseable rendering; `parse_state` of it is equivalent to `s`."""
    s = _surface_locals(s)
    parts = [atom_text(a) for a in s.atoms] + [eq_text(e) for e in s.builtins]
    body = ", ".join(parts) if parts else "true"
    globs = ", ".join(sorted(s.globals))
    return f"{body} # globals: {globs}" if globs else f"{body} # globals:"


def canonical_text(c: CanonicalState) -> str:
    if c.bottom:
        return "<false>"
    parts = [atom_text(a) for a in c.atoms] + [eq_text(e) for e in c.residuals]
    body = ", ".join(parts) if parts else "true"
    globs = ", ".join(sorted(c.globals))
    if globs:
        return f"<{body} # globals: {globs}>"
    return f"<{body}>"
