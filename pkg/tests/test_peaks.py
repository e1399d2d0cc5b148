from __future__ import annotations

import itertools
import random

from chrdc.engine import applicable_steps
from chrdc.orders import Partition
from chrdc.peaks import classify, critical_peaks, _peaks_equal
from chrdc.state import canonicalize, equivalent
from chrdc.syntax import parse_program
from helpers import peak_like, random_tiny_program


def test_pminus_has_a_single_peak(pminus):
    peaks = critical_peaks(pminus, pminus)
    assert len(peaks) == 1
    (pk,) = peaks
    assert (pk.rule_left, pk.rule_right) == ("duplicate", "sminus")
    assert peak_like(
        pk,
        "p(s(X)), p(s(X)) # globals: X",
        "p(s(X)) # globals: X",
        "p(s(X)), p(X) # globals: X",
    )


def test_pplus_has_a_single_peak(pplus):
    peaks = critical_peaks(pplus, pplus)
    assert len(peaks) == 1
    (pk,) = peaks
    assert peak_like(
        pk,
        "p(X), p(X) # globals: X",
        "p(X) # globals: X",
        "p(X), p(s(X)) # globals: X",
    )


def test_leq_contains_the_antisymmetry_transitivity_peak(leq):
    peaks = critical_peaks(leq, leq)
    hits = [
        pk
        for pk in peaks
        if (pk.rule_left, pk.rule_right) == ("antisymmetry", "transitivity")
        and peak_like(
            pk,
            "leq(X,Y), leq(Y,X) # globals: X, Y",
            "X = Y # globals: X, Y",
            "leq(X,Y), leq(Y,X), leq(X,X) # globals: X, Y",
        )
    ]
    assert len(hits) == 1


def test_disjoint_predicates_yield_no_peaks():
    p = parse_program("mk @ p(X) <=> q(X).")
    q = parse_program("rm @ r(X) <=> s(X).")
    assert critical_peaks(p, q) == []


def test_philos_peaks_all_pair_eat_with_eat(philos):
    peaks = critical_peaks(philos, philos)
    assert peaks
    assert all((pk.rule_left, pk.rule_right) == ("eat", "eat") for pk in peaks)


def test_propagation_with_itself_has_no_peak():
    p = parse_program("transitivity @ leq(X,Y), leq(Y,Z) ==> leq(X,Z).")
    assert critical_peaks(p, p) == []


def test_guard_constrained_overlaps():
    # The overlap equations include both guards: a clash suppresses the
    # peak, agreement instantiates the ancestor.
    clash = parse_program("g1 @ p(X) <=> X = a | q(X).\ng2 @ p(b) <=> r.")
    assert critical_peaks(clash, clash) == []

    meet = parse_program("g1 @ p(X) <=> X = a | q(X).\ng3 @ p(a) <=> r.")
    peaks = critical_peaks(meet, meet)
    assert len(peaks) == 1
    (pk,) = peaks
    assert peak_like(pk, "p(a) # globals:", "q(a) # globals:", "r # globals:")
    steps = applicable_steps(meet, pk.ancestor, allowed={"g1"})
    assert any(equivalent(s.target, pk.left) for s in steps)


def test_guard_needing_unmatchable_variable_yields_no_peak():
    # g4's guard variable never occurs in its head, so the rule can never
    # fire under syntactic entailment and no realizable peak exists.
    from chrdc.syntax import parse_state

    p = parse_program("g4 @ p(X) <=> Y = a | q(X).\ng5 @ p(a) <=> r.")
    assert applicable_steps(p, parse_state("p(a) # globals:"), allowed={"g4"}) == []
    assert critical_peaks(p, p) == []


def test_classify_under_example_partition(leq):
    part = Partition.for_program(leq, coinductive=["transitivity"])
    peaks = critical_peaks(leq, leq)
    by_pair = {}
    for pk in peaks:
        by_pair.setdefault((pk.rule_left, pk.rule_right), pk)
    assert classify(by_pair[("duplicate", "reflexivity")], part) == "inductive"
    assert classify(by_pair[("antisymmetry", "transitivity")], part) == "coinductive"
    all_co = Partition.for_program(leq, coinductive=leq.rule_names())
    assert all(classify(pk, all_co) == "coinductive" for pk in peaks)


def test_every_peak_replays_both_one_step_reducts(leq, philos, pminus, pplus):
    programs = [(leq, leq), (philos, philos), (pminus, pminus), (pplus, pplus)]
    rng = random.Random(17)
    while len(programs) < 40:
        p = random_tiny_program(rng)
        programs.append((p, p))
    checked = 0
    for p, q in programs:
        for pk in critical_peaks(p, q):
            left_steps = applicable_steps(p, pk.ancestor, allowed={pk.rule_left})
            assert any(equivalent(s.target, pk.left) for s in left_steps), pk
            right_steps = applicable_steps(q, pk.ancestor, allowed={pk.rule_right})
            assert any(equivalent(s.target, pk.right) for s in right_steps), pk
            checked += 2
    assert checked >= 60


def test_cross_program_peaks_are_mirror_images():
    rng = random.Random(29)
    found = 0
    for _ in range(40):
        p = random_tiny_program(rng)
        q = random_tiny_program(rng)
        q = q.__class__(
            tuple(
                r.__class__(
                    "m" + r.name, r.kept, r.removed, r.guard, r.user_body, r.builtin_body
                )
                for r in q.rules
            )
        )
        fwd = critical_peaks(p, q)
        bwd = critical_peaks(q, p)
        assert len(fwd) == len(bwd)
        for pk in fwd:
            mirror_hits = [
                other
                for other in bwd
                if (other.rule_left, other.rule_right)
                == (pk.rule_right, pk.rule_left)
                and _peaks_equal(other, pk, swap_b=True)
            ]
            assert mirror_hits, pk
            found += 1
    assert found >= 20


def _overlapping_pairs(program, state):
    steps = applicable_steps(program, state)
    for st1, st2 in itertools.product(steps, steps):
        pos1 = set(st1.matched_kept) | set(st1.matched_removed)
        pos2 = set(st2.matched_kept) | set(st2.matched_removed)
        shared = pos1 & pos2
        if not shared:
            continue
        removed = set(st1.matched_removed) | set(st2.matched_removed)
        if not shared & removed:
            continue  # kept-only sharing commutes directly
        yield st1, st2


def _embeds(program_pair, peak, state, target_left, target_right):
    """Check the quantified-conjunction embedding of a critical peak into a
    concrete local peak, independently of how the generator built it."""
    from chrdc.state import State, compose
    from chrdc.syntax import Eq
    from chrdc.terms import Var, fresh_mapping, match

    cst = canonicalize(state)
    avoid = set(cst.globals) | {v for a in cst.atoms for v in a.iter_vars()}
    for s in (peak.ancestor, peak.left, peak.right):
        avoid |= s.all_vars()
    anc_c = canonicalize(peak.ancestor)
    anc_vars: dict[str, None] = {}
    for a in anc_c.atoms:
        for v in a.iter_vars():
            anc_vars.setdefault(v)
    ren = fresh_mapping(avoid, list(anc_vars))
    anc_atoms = [a.subst(ren) for a in anc_c.atoms]
    glob_anc = frozenset(v.name for v in ren.values())

    def lift(reduct):
        rc = canonicalize(reduct)
        ren2 = dict(ren)
        body_locals = [
            v
            for a in rc.atoms
            for v in a.iter_vars()
            if v not in anc_vars and v not in ren2
        ]
        ren2.update(fresh_mapping(avoid | glob_anc, body_locals))
        atoms = tuple(a.subst(ren2) for a in rc.atoms)
        eqs = tuple(e.subst(ren2) for e in rc.residuals)
        return State(atoms, eqs, glob_anc)

    left_lifted, right_lifted = lift(peak.left), lift(peak.right)
    anc_state = State(tuple(anc_atoms), (), glob_anc)

    k = len(anc_atoms)
    positions = list(range(len(cst.atoms)))
    for chosen in itertools.permutations(positions, k):
        tau = {}
        for pat, i in zip(anc_atoms, chosen):
            concrete = cst.atoms[i]
            if pat.pred != concrete.pred or len(pat.args) != len(concrete.args):
                tau = None
                break
            tau = match(zip(pat.args, concrete.args), tau)
            if tau is None:
                break
        if tau is None:
            continue
        rest = tuple(a for i, a in enumerate(cst.atoms) if i not in set(chosen))
        tau_eqs = tuple(Eq(Var(v), t) for v, t in sorted(tau.items()))
        context = State(rest, tau_eqs + cst.residuals, cst.globals | glob_anc)
        try:
            composed_anc = compose(anc_state, context, glob_anc)
            composed_left = compose(left_lifted, context, glob_anc)
            composed_right = compose(right_lifted, context, glob_anc)
        except ValueError:
            continue
        if (
            equivalent(composed_anc, cst)
            and equivalent(composed_left, target_left)
            and equivalent(composed_right, target_right)
        ):
            return True
    return False


def test_completeness_oracle_on_tiny_programs():
    from helpers import random_ground_state

    rng = random.Random(41)
    cases = 0
    for _ in range(25):
        program = random_tiny_program(rng)
        peaks = critical_peaks(program, program)
        for _ in range(4):
            state = random_ground_state(rng)
            for st1, st2 in _overlapping_pairs(program, state):
                cases += 1
                if st1.rule_name == st2.rule_name and equivalent(
                    st1.target, st2.target
                ):
                    continue  # discharged as trivially joinable
                covered = False
                for pk in peaks:
                    if (pk.rule_left, pk.rule_right) == (st1.rule_name, st2.rule_name):
                        if _embeds((program, program), pk, state, st1.target, st2.target):
                            covered = True
                            break
                    if (pk.rule_left, pk.rule_right) == (st2.rule_name, st1.rule_name):
                        if _embeds((program, program), pk, state, st2.target, st1.target):
                            covered = True
                            break
                assert covered, (program, state, st1.rule_name, st2.rule_name)
    assert cases >= 30
