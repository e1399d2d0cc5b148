"""Shared test utilities: independent oracles and random generators.

The oracles here deliberately avoid the production code paths they
check: a recursive eager-substitution unifier, a standalone instance
matcher, and brute-force enumerators.
"""

from __future__ import annotations

import itertools
import random
from typing import Optional

from chrdc.syntax import Atom, Eq, Program, Rule
from chrdc.state import State
from chrdc.terms import Compound, Term, Var


# ---------------------------------------------------------------------------
# Independent unification oracle (recursive Robinson, eager substitution)

def naive_apply(s: dict, t: Term) -> Term:
    # Full normalization; terminates because oracle substitutions are acyclic.
    if isinstance(t, Var):
        bound = s.get(t.name)
        return t if bound is None else naive_apply(s, bound)
    return Compound(t.functor, tuple(naive_apply(s, a) for a in t.args))


def _naive_compose(r: dict, s: dict) -> dict:
    out = {}
    for k, v in r.items():
        nv = naive_apply(s, v)
        if nv != Var(k):
            out[k] = nv
    for k, v in s.items():
        if k not in r and v != Var(k):
            out[k] = v
    return out


def naive_unify(l: Term, r: Term) -> Optional[dict]:
    if isinstance(l, Var):
        if l == r:
            return {}
        if _occurs_in(l.name, r):
            return None
        return {l.name: r}
    if isinstance(r, Var):
        return naive_unify(r, l)
    if l.functor != r.functor or len(l.args) != len(r.args):
        return None
    subst: dict = {}
    for la, ra in zip(l.args, r.args):
        sub = naive_unify(naive_apply(subst, la), naive_apply(subst, ra))
        if sub is None:
            return None
        subst = _naive_compose(subst, sub)
    return subst


def naive_unify_pairs(pairs) -> Optional[dict]:
    subst: dict = {}
    for l, r in pairs:
        sub = naive_unify(naive_apply(subst, l), naive_apply(subst, r))
        if sub is None:
            return None
        subst = _naive_compose(subst, sub)
    return subst


def _occurs_in(name: str, t: Term) -> bool:
    if isinstance(t, Var):
        return t.name == name
    return any(_occurs_in(name, a) for a in t.args)


def instance_of(general: dict, special: dict, variables) -> bool:
    """Whether `special` equals `general` composed with some substitution."""
    delta: dict = {}
    for v in variables:
        pat = naive_apply(general, Var(v))
        tgt = naive_apply(special, Var(v))
        delta = _match_into(pat, tgt, delta)
        if delta is None:
            return False
    return True


def _match_into(pat: Term, tgt: Term, bind: Optional[dict]) -> Optional[dict]:
    if bind is None:
        return None
    if isinstance(pat, Var):
        if pat.name in bind:
            return bind if bind[pat.name] == tgt else None
        out = dict(bind)
        out[pat.name] = tgt
        return out
    if not isinstance(tgt, Compound):
        return None
    if pat.functor != tgt.functor or len(pat.args) != len(tgt.args):
        return None
    for pa, ta in zip(pat.args, tgt.args):
        bind = _match_into(pa, ta, bind)
        if bind is None:
            return None
    return bind


# ---------------------------------------------------------------------------
# Random structure generators (deterministic given the rng)

CONSTANTS = [Compound("a"), Compound("b"), Compound("c")]


def random_term(rng: random.Random, var_pool: list[str], depth: int = 2) -> Term:
    roll = rng.random()
    if depth <= 0 or roll < 0.4:
        if var_pool and roll < 0.25:
            return Var(rng.choice(var_pool))
        return rng.choice(CONSTANTS)
    if roll < 0.7:
        return Compound("f", (random_term(rng, var_pool, depth - 1),))
    return Compound(
        "g",
        (
            random_term(rng, var_pool, depth - 1),
            random_term(rng, var_pool, depth - 1),
        ),
    )


def random_atom(rng: random.Random, var_pool: list[str], depth: int = 2) -> Atom:
    pred, arity = rng.choice([("p", 1), ("q", 2), ("r", 0)])
    return Atom(pred, tuple(random_term(rng, var_pool, depth) for _ in range(arity)))


def random_state(rng: random.Random, max_atoms: int = 4) -> State:
    pool = ["X", "Y", "Z", "W"]
    atoms = tuple(
        random_atom(rng, pool, depth=1) for _ in range(rng.randint(0, max_atoms))
    )
    eqs = []
    if rng.random() < 0.4:
        eqs.append(Eq(Var(rng.choice(pool)), random_term(rng, pool, 1)))
    used = sorted({v for a in atoms for v in a.iter_vars()}
                  | {v for e in eqs for v in e.iter_vars()})
    globals_ = frozenset(v for v in used if rng.random() < 0.5)
    return State(atoms, tuple(eqs), globals_)


def random_tiny_program(rng: random.Random) -> Program:
    """Programs at the scale of the peak-completeness oracle: at most two
    rules, heads of at most two atoms, depth-one argument terms."""
    sig = [("p", 1), ("q", 2)]
    pool = ["X", "Y"]

    def tiny_term() -> Term:
        roll = rng.random()
        if roll < 0.45:
            return Var(rng.choice(pool))
        if roll < 0.8:
            return rng.choice(CONSTANTS[:2])
        return Compound("s", (Var(rng.choice(pool)),))

    def tiny_atom() -> Atom:
        pred, arity = rng.choice(sig)
        return Atom(pred, tuple(tiny_term() for _ in range(arity)))

    rules = []
    for i in range(rng.randint(1, 2)):
        total_heads = rng.randint(1, 2)
        kept_n = rng.randint(0, total_heads - 1) if rng.random() < 0.4 else 0
        kept = tuple(tiny_atom() for _ in range(kept_n))
        removed = tuple(tiny_atom() for _ in range(total_heads - kept_n))
        if not removed and not kept:
            removed = (tiny_atom(),)
        guard = ()
        if rng.random() < 0.15:
            guard = (Eq(Var(rng.choice(pool)), rng.choice(CONSTANTS[:2])),)
        body_atoms = tuple(tiny_atom() for _ in range(rng.randint(0, 2)))
        body_eqs = ()
        if rng.random() < 0.2:
            body_eqs = (Eq(Var(rng.choice(pool)), rng.choice(CONSTANTS[:2])),)
        rules.append(Rule(f"r{i}", kept, removed, guard, body_atoms, body_eqs))
    return Program(tuple(rules))


def small_universe(depth: int = 1) -> list[Term]:
    """Every ground term over {a, b, f/1, g/2} up to the given depth."""
    terms: list[Term] = CONSTANTS[:2]
    for _ in range(depth):
        layer = [Compound("f", (t,)) for t in terms]
        layer += [Compound("g", (s, t)) for s in terms[:2] for t in terms[:2]]
        terms = terms + layer
    return terms


def enumerate_unifiers(pairs, variables, universe) -> list[dict]:
    """Brute force: every ground substitution that makes all pairs equal."""
    out = []
    variables = sorted(variables)
    for images in itertools.product(universe, repeat=len(variables)):
        theta = dict(zip(variables, images))
        if all(naive_apply(theta, l) == naive_apply(theta, r) for l, r in pairs):
            out.append(theta)
    return out


def equivalent_mod_globals(s1: State, s2) -> bool:
    """State equivalence up to a bijective renaming of global variables."""
    from chrdc.state import equivalent

    g1, g2 = sorted(s1.globals), sorted(s2.globals)
    if len(g1) != len(g2):
        return False
    for perm in itertools.permutations(g1):
        mapping = {src: Var(dst) for src, dst in zip(g2, perm)}
        if equivalent(s1, s2.subst(mapping)):
            return True
    return False


def peak_like(pk, anc_text: str, left_text: str, right_text: str) -> bool:
    """Whether a peak matches the three states, read up to global renaming
    applied consistently across the triple."""
    from chrdc.peaks import CriticalPeak, _peaks_equal
    from chrdc.syntax import parse_state

    expected = CriticalPeak(
        pk.rule_left,
        pk.rule_right,
        parse_state(anc_text),
        parse_state(left_text),
        parse_state(right_text),
        (),
        (),
    )
    return _peaks_equal(expected, pk, swap_b=False)


def random_ground_state(rng: random.Random, max_atoms: int = 3) -> State:
    """Small states over the tiny-program signature, mildly non-ground."""
    pool = ["U", "V"]

    def arg() -> Term:
        roll = rng.random()
        if roll < 0.5:
            return rng.choice(CONSTANTS[:2])
        if roll < 0.75:
            return Var(rng.choice(pool))
        return Compound("s", (rng.choice(CONSTANTS[:2]),))

    atoms = []
    for _ in range(rng.randint(1, max_atoms)):
        pred, arity = rng.choice([("p", 1), ("q", 2)])
        atoms.append(Atom(pred, tuple(arg() for _ in range(arity))))
    used = sorted({v for a in atoms for v in a.iter_vars()})
    globals_ = frozenset(v for v in used if rng.random() < 0.6)
    return State(tuple(atoms), (), globals_)
