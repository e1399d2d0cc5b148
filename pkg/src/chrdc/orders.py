"""Rule partitions, finite preorders on rule names, and termination checks.

The inductive part of a program must terminate; the check uses a
deliberately simple lexicographic measure on the user store, first the
number of atoms, then the total term size. Anything the measure cannot
verify needs an explicit assumption flag, which is echoed in reports.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional

from .syntax import Program, Rule
from .terms import term_size


@dataclass(frozen=True)
class Partition:
    inductive: frozenset[str]
    coinductive: frozenset[str]

    @staticmethod
    def for_program(
        program: Program,
        inductive: Optional[Iterable[str]] = None,
        coinductive: Optional[Iterable[str]] = None,
    ) -> "Partition":
        """Build a partition, filling the unspecified side with the rest.

        With neither side given, every rule is inductive.
        """
        names = set(program.rule_names())
        ind = None if inductive is None else frozenset(inductive)
        coind = None if coinductive is None else frozenset(coinductive)
        for given in (ind, coind):
            if given is not None and not given <= names:
                unknown = sorted(given - names)
                raise ValueError(f"unknown rule names in partition: {unknown}")
        if ind is None and coind is None:
            return Partition(frozenset(names), frozenset())
        if ind is None:
            ind = frozenset(names - coind)
        if coind is None:
            coind = frozenset(names - ind)
        if ind & coind:
            raise ValueError(f"rules in both parts: {sorted(ind & coind)}")
        if ind | coind != names:
            missing = sorted(names - (ind | coind))
            raise ValueError(f"rules in neither part: {missing}")
        return Partition(ind, coind)


class RulePreorder:
    """Reflexive-transitive closure of declared pairs on a finite carrier."""

    def __init__(self, carrier: Iterable[str], geq_pairs: Iterable[tuple[str, str]]):
        self.carrier = tuple(carrier)
        base = {(a, a) for a in self.carrier}
        base.update(geq_pairs)
        # Warshall-style closure.
        changed = True
        while changed:
            changed = False
            for a, b in list(base):
                for c, d in list(base):
                    if b == c and (a, d) not in base:
                        base.add((a, d))
                        changed = True
        self._geq = frozenset(base)

    @staticmethod
    def from_declarations(
        carrier: Iterable[str], declarations: Iterable[tuple[str, str, str]]
    ) -> "RulePreorder":
        """Closure of `a > b` / `a >= b` lines; a declared strict pair that
        collapses to an equivalence under closure is rejected."""
        carrier = tuple(carrier)
        names = set(carrier)
        pairs = []
        strict_wanted = []
        for a, op, b in declarations:
            for n in (a, b):
                if n not in names:
                    raise ValueError(f"unknown rule name in order: {n!r}")
            pairs.append((a, b))
            if op == ">":
                strict_wanted.append((a, b))
        order = RulePreorder(carrier, pairs)
        for a, b in strict_wanted:
            if not order.strictly_greater(a, b):
                raise ValueError(f"declared {a} > {b} but the closure makes them equivalent")
        return order

    @staticmethod
    def discrete(carrier: Iterable[str]) -> "RulePreorder":
        return RulePreorder(carrier, ())

    def geq(self, a: str, b: str) -> bool:
        return (a, b) in self._geq

    def strictly_greater(self, a: str, b: str) -> bool:
        return (a, b) in self._geq and (b, a) not in self._geq

    def down_strict(self, keys: Iterable[str]) -> frozenset[str]:
        ks = tuple(keys)
        return frozenset(c for c in self.carrier if any(self.strictly_greater(k, c) for k in ks))

    def down_eq(self, keys: Iterable[str]) -> frozenset[str]:
        ks = tuple(keys)
        return frozenset(c for c in self.carrier if any(self.geq(k, c) for k in ks))

    def pairs_text(self) -> list[str]:
        """Strict pairs of the closure, a compact printable summary."""
        out = []
        for a in self.carrier:
            for b in self.carrier:
                if a != b and self.strictly_greater(a, b):
                    out.append(f"{a}>{b}")
        return out


@dataclass(frozen=True)
class AdmissibilityResult:
    ok: bool
    witness: Optional[tuple[str, str]] = None


def is_admissible(order: RulePreorder, part: Partition) -> AdmissibilityResult:
    """Every coinductive rule must sit strictly above every inductive one."""
    for rc in sorted(part.coinductive):
        for ri in sorted(part.inductive):
            if not order.strictly_greater(rc, ri):
                return AdmissibilityResult(False, (rc, ri))
    return AdmissibilityResult(True)


def admissible_total_preorders(program: Program, part: Partition) -> Iterator[RulePreorder]:
    """All admissible total preorders on the rule names, as level maps.

    Enumerating total preorders is complete here: any admissible preorder
    extends to a total one that preserves its strict pairs, and the
    decreasingness conditions only gain from added comparabilities.
    """
    names = program.rule_names()
    n = len(names)
    for k in range(1, n + 1):
        for levels in itertools.product(range(k), repeat=n):
            if set(levels) != set(range(k)):
                continue
            level = dict(zip(names, levels))
            if any(
                level[rc] <= level[ri]
                for rc in part.coinductive
                for ri in part.inductive
            ):
                continue
            pairs = [
                (a, b)
                for a in names
                for b in names
                if a != b and level[a] >= level[b]
            ]
            yield RulePreorder(names, pairs)


@dataclass(frozen=True)
class TerminationResult:
    status: str  # VERIFIED | ASSUMED | REFUTED
    witness: Optional[str] = None

    @property
    def acceptable(self) -> bool:
        return self.status in ("VERIFIED", "ASSUMED")


def _rule_measure_decreases(rule: Rule) -> bool:
    """Strict decrease of (atom count, user-store size) for every instance."""
    removed_count = len(rule.removed)
    body_count = len(rule.user_body)
    if body_count < removed_count:
        return True
    if body_count > removed_count:
        return False
    # Equal atom count: sizes must shrink for every instantiation of the
    # head variables, and the built-in body must not rebind anything.
    if rule.builtin_body:
        return False
    head_occ: dict[str, int] = {}
    for a in rule.heads:
        for v in a.iter_vars():
            head_occ[v] = head_occ.get(v, 0) + 1
    removed_occ: dict[str, int] = {}
    for a in rule.removed:
        for v in a.iter_vars():
            removed_occ[v] = removed_occ.get(v, 0) + 1
    body_occ: dict[str, int] = {}
    for a in rule.user_body:
        for v in a.iter_vars():
            body_occ[v] = body_occ.get(v, 0) + 1
    for v, n in body_occ.items():
        if v in head_occ and n > removed_occ.get(v, 0):
            return False
    removed_size = sum(1 + sum(term_size(x) for x in a.args) for a in rule.removed)
    body_size = sum(1 + sum(term_size(x) for x in a.args) for a in rule.user_body)
    return body_size < removed_size


def check_inductive_termination(
    program: Program, part: Partition, assume_terminating: bool = False
) -> TerminationResult:
    for rule in program.rules:
        if rule.name not in part.inductive:
            continue
        if not _rule_measure_decreases(rule):
            if assume_terminating:
                return TerminationResult("ASSUMED", rule.name)
            return TerminationResult("REFUTED", rule.name)
    return TerminationResult("VERIFIED")
