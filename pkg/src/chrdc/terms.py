"""First-order terms, substitutions, and syntactic unification.

The constraint theory is Herbrand equality over free constructors:
integer literals and `+` are ordinary functors, nothing is evaluated.
A substitution is a plain dict mapping variable names to terms; the
functions below keep substitutions idempotent and free of self-bindings.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Optional, Union


@dataclass(frozen=True)
class Var:
    name: str

    def __repr__(self) -> str:
        return f"Var({self.name!r})"


@dataclass(frozen=True)
class Compound:
    functor: str
    args: tuple["Term", ...] = ()

    def __repr__(self) -> str:
        if not self.args:
            return f"Compound({self.functor!r})"
        return f"Compound({self.functor!r}, {self.args!r})"


Term = Union[Var, Compound]
Subst = dict[str, Term]

# Variables with this prefix are generated internally and rejected by
# the parser, so renaming apart can never collide with source text.
FRESH_PREFIX = "_V"


def iter_vars(t: Term) -> Iterator[str]:
    """Yield variable names of `t` in left-to-right occurrence order."""
    if isinstance(t, Var):
        yield t.name
    else:
        for a in t.args:
            yield from iter_vars(a)


def term_vars(t: Term) -> set[str]:
    return set(iter_vars(t))


def term_size(t: Term) -> int:
    """Number of symbols, counting every variable occurrence as 1."""
    if isinstance(t, Var):
        return 1
    return 1 + sum(term_size(a) for a in t.args)


def apply(s: Mapping[str, Term], t: Term) -> Term:
    """Homomorphic replacement of bound variables in `t`."""
    if isinstance(t, Var):
        return s.get(t.name, t)
    if not t.args:
        return t
    return Compound(t.functor, tuple(apply(s, a) for a in t.args))


def compose(s1: Mapping[str, Term], s2: Mapping[str, Term]) -> Subst:
    """Substitution equal to applying `s1` first, then `s2`."""
    out: Subst = {}
    for v, t in s1.items():
        t2 = apply(s2, t)
        if t2 != Var(v):
            out[v] = t2
    for v, t in s2.items():
        if v not in s1 and t != Var(v):
            out[v] = t
    return out


def _occurs(name: str, t: Term, bind: Subst) -> bool:
    stack = [t]
    while stack:
        cur = stack.pop()
        while isinstance(cur, Var) and cur.name in bind:
            cur = bind[cur.name]
        if isinstance(cur, Var):
            if cur.name == name:
                return True
        else:
            stack.extend(cur.args)
    return False


def _resolve(t: Term, bind: Subst, memo: dict[str, Term]) -> Term:
    if isinstance(t, Var):
        if t.name in memo:
            return memo[t.name]
        if t.name in bind:
            r = _resolve(bind[t.name], bind, memo)
            memo[t.name] = r
            return r
        return t
    if not t.args:
        return t
    return Compound(t.functor, tuple(_resolve(a, bind, memo) for a in t.args))


def unify(pairs: Iterable[tuple[Term, Term]]) -> Optional[Subst]:
    """Most general unifier of all pairs, or None on clash/occurs check.

    The result is idempotent and never binds a variable to itself.
    Failure is an ordinary value, not an exception.
    """
    bind: Subst = {}
    work = list(pairs)
    work.reverse()
    while work:
        l, r = work.pop()
        while isinstance(l, Var) and l.name in bind:
            l = bind[l.name]
        while isinstance(r, Var) and r.name in bind:
            r = bind[r.name]
        if l == r:
            continue
        if isinstance(l, Var):
            if _occurs(l.name, r, bind):
                return None
            bind[l.name] = r
        elif isinstance(r, Var):
            if _occurs(r.name, l, bind):
                return None
            bind[r.name] = l
        else:
            if l.functor != r.functor or len(l.args) != len(r.args):
                return None
            work.extend(reversed(list(zip(l.args, r.args))))
    memo: dict[str, Term] = {}
    out: Subst = {}
    for v in bind:
        t = _resolve(Var(v), bind, memo)
        if t != Var(v):
            out[v] = t
    return out


def match(pairs: Iterable[tuple[Term, Term]], bind: Optional[Subst] = None) -> Optional[Subst]:
    """One-way matching: bind pattern variables so each pattern equals its term.

    Variables on the term side are treated as constants. Returns the
    extended binding, or None when no consistent binding exists.
    """
    out: Subst = dict(bind) if bind else {}
    work = list(pairs)
    work.reverse()
    while work:
        p, t = work.pop()
        if isinstance(p, Var):
            if p.name in out:
                if out[p.name] != t:
                    return None
            else:
                out[p.name] = t
        else:
            if not isinstance(t, Compound):
                return None
            if p.functor != t.functor or len(p.args) != len(t.args):
                return None
            work.extend(reversed(list(zip(p.args, t.args))))
    return out


def fresh_mapping(avoid: set[str], names: Iterable[str]) -> Subst:
    """Injective renaming of `names` to fresh variables outside `avoid`.

    Fresh names are FRESH_PREFIX plus a counter; the counter only moves
    forward, so the mapping is deterministic for a given input.
    """
    used = set(avoid)
    out: Subst = {}
    counter = 0
    for n in names:
        if n in out:
            continue
        while f"{FRESH_PREFIX}{counter}" in used:
            counter += 1
        fresh = f"{FRESH_PREFIX}{counter}"
        counter += 1
        used.add(fresh)
        out[n] = Var(fresh)
    return out


def rename_apart(avoid: set[str], value):
    """Alpha-rename every variable of `value` away from `avoid`.

    Works on terms and on any value exposing `variables()` or
    `iter_vars()` plus `subst()` (atoms, rules, states).
    """
    if isinstance(value, (Var, Compound)):
        names = list(dict.fromkeys(iter_vars(value)))
        return apply(fresh_mapping(avoid, names), value)
    if hasattr(value, "variables"):
        names = value.variables()
    else:
        names = list(dict.fromkeys(value.iter_vars()))
    return value.subst(fresh_mapping(avoid, names))
