"""Joinability search, the decreasing-diagram pattern, and the four criteria.

A closing of a peak is searched by a bidirectional bounded BFS from
the two reducts. Each side carries a small trace automaton that
constrains the labels a closing may use, so invalid reductions are
pruned instead of post-filtered:

  * `any`             unrestricted labels, any length,
  * `single_step_eq`  at most one step,
  * `star`            the decreasing-diagram shape: labels split into a
                      prefix strictly below the peak's own label, at
                      most one label below-or-equal the opposite label,
                      and a tail strictly below one of the two,
  * tactics           user-supplied label sequences, tried first.

Certificates are deterministic: the valley with the smallest combined
length wins, ties broken lexicographically by rule position in the
program. Negative peak verdicts mean "not established within budget",
never "non-confluent"; only admissibility and termination refutations
are definite.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Union

from .engine import Derivation, applicable_steps
from .orders import (
    AdmissibilityResult,
    Partition,
    RulePreorder,
    TerminationResult,
    admissible_total_preorders,
    check_inductive_termination,
    is_admissible,
)
from .peaks import CriticalPeak, classify, critical_peaks
from .state import CanonicalState, State, canonicalize, equivalent
from .syntax import Program


@dataclass(frozen=True)
class SearchBudget:
    max_depth: int = 8
    max_states: int = 2000
    max_valleys: int = 1


@dataclass
class Valley:
    left: Derivation
    right: Derivation

    def labels(self) -> tuple[list[str], list[str]]:
        return (self.left.labels(), self.right.labels())


@dataclass
class PeakVerdict:
    index: int
    rule_left: str
    rule_right: str
    status: str  # JOINABLE | DECREASING | STRONGLY_JOINABLE | NOT_CLOSED | REFUTED
    valley: Optional[Valley] = None
    notes: tuple[str, ...] = ()
    exhausted: bool = False
    bounds: Optional[tuple[int, int]] = None

    @property
    def closed(self) -> bool:
        return self.status in ("JOINABLE", "DECREASING", "STRONGLY_JOINABLE")


# ---------------------------------------------------------------------------
# The decreasingness pattern on label sequences

def _star_side_ok(
    labels: Sequence[str], primary: str, secondary: str, order: RulePreorder
) -> bool:
    below_primary = order.down_strict([primary])
    below_eq_secondary = order.down_eq([secondary])
    tail_set = order.down_strict([primary, secondary])
    n = len(labels)
    for i in range(n + 1):
        if any(l not in below_primary for l in labels[:i]):
            break
        for j in (i, i + 1):
            if j > n:
                continue
            mid = labels[i:j]
            if mid and mid[0] not in below_eq_secondary:
                continue
            if all(l in tail_set for l in labels[j:]):
                return True
    return False


def matches_star(
    left_labels: Sequence[str],
    right_labels: Sequence[str],
    alpha: str,
    beta: str,
    order: RulePreorder,
) -> bool:
    """Whether a valley's label traces witness a decreasing diagram for
    a peak whose sides were produced by `alpha` (left) and `beta` (right)."""
    return _star_side_ok(left_labels, alpha, beta, order) and _star_side_ok(
        right_labels, beta, alpha, order
    )


# ---------------------------------------------------------------------------
# Trace automata

class _AnyAuto:
    start = 0

    def __init__(self, allowed: Iterable[str]):
        self.allowed = frozenset(allowed)

    def labels(self, phase) -> frozenset[str]:
        return self.allowed

    def next(self, phase, label) -> tuple:
        return (0,) if label in self.allowed else ()

    def accepting(self, phase) -> bool:
        return True


class _CappedAuto:
    start = 0

    def __init__(self, allowed: Iterable[str], cap: int):
        self.allowed = frozenset(allowed)
        self.cap = cap

    def labels(self, phase) -> frozenset[str]:
        return self.allowed if phase < self.cap else frozenset()

    def next(self, phase, label) -> tuple:
        if phase < self.cap and label in self.allowed:
            return (phase + 1,)
        return ()

    def accepting(self, phase) -> bool:
        return True


class _StarAuto:
    start = 0

    def __init__(self, primary: str, secondary: str, order: RulePreorder):
        self.prefix = order.down_strict([primary])
        self.middle = order.down_eq([secondary])
        self.tail = order.down_strict([primary, secondary])

    def labels(self, phase) -> frozenset[str]:
        if phase == 0:
            return self.prefix | self.middle | self.tail
        return self.tail

    def next(self, phase, label) -> tuple:
        if phase == 0:
            out = []
            if label in self.prefix:
                out.append(0)
            if label in self.middle or label in self.tail:
                out.append(1)
            return tuple(out)
        return (1,) if label in self.tail else ()

    def accepting(self, phase) -> bool:
        return True


class _TrieAuto:
    start: tuple = ()

    def __init__(self, sequences: Iterable[Sequence[str]]):
        self.seqs = {tuple(s) for s in sequences}

    def labels(self, phase) -> frozenset[str]:
        n = len(phase)
        return frozenset(s[n] for s in self.seqs if len(s) > n and s[:n] == phase)

    def next(self, phase, label) -> tuple:
        cand = phase + (label,)
        n = len(cand)
        if any(s[:n] == cand for s in self.seqs):
            return (cand,)
        return ()

    def accepting(self, phase) -> bool:
        return phase in self.seqs


# ---------------------------------------------------------------------------
# Bidirectional leveled search

@dataclass
class _Node:
    state: CanonicalState
    phase: object
    deriv: Derivation
    trace_key: tuple[int, ...]


class _Side:
    def __init__(self, program: Program, auto, start: Union[State, CanonicalState]):
        self.program = program
        self.auto = auto
        self.index = {r.name: i for i, r in enumerate(program.rules)}
        root = canonicalize(start)
        node = _Node(root, auto.start, Derivation(root), ())
        self.levels: list[list[_Node]] = [[node]]
        self.by_sig: list[dict[tuple, list[_Node]]] = [{root.signature(): [node]}]
        self.visited: set = {(root, auto.start)}
        self.exhausted_at: Optional[int] = None
        self.truncated = False

    def ensure_level(self, depth: int, budget: SearchBudget, counter: dict) -> bool:
        """Compute levels up to `depth`; True when that level exists."""
        while len(self.levels) <= depth:
            if self.exhausted_at is not None or self.truncated:
                return False
            if len(self.levels) > budget.max_depth:
                self.truncated = True
                return False
            frontier = self.levels[-1]
            new_nodes: list[_Node] = []
            new_sigs: dict[tuple, list[_Node]] = {}
            for node in frontier:
                allowed = self.auto.labels(node.phase)
                if not allowed:
                    continue
                for step in applicable_steps(self.program, node.state, allowed):
                    for phase in self.auto.next(node.phase, step.rule_name):
                        key = (step.target, phase)
                        if key in self.visited:
                            continue
                        if counter["states"] >= budget.max_states:
                            self.truncated = True
                            break
                        counter["states"] += 1
                        self.visited.add(key)
                        child = _Node(
                            step.target,
                            phase,
                            node.deriv.extend(step),
                            node.trace_key + (self.index[step.rule_name],),
                        )
                        new_nodes.append(child)
                        new_sigs.setdefault(step.target.signature(), []).append(child)
                    if self.truncated:
                        break
                if self.truncated:
                    break
            if self.truncated:
                return False
            if not new_nodes:
                self.exhausted_at = len(self.levels) - 1
                return False
            self.levels.append(new_nodes)
            self.by_sig.append(new_sigs)
        return True


def _closing_search(
    left: _Side, right: _Side, budget: SearchBudget
) -> tuple[Optional[Valley], bool]:
    """Minimal valley between the two sides, plus a definite-failure flag.

    The failure flag is True only when both search spaces were fully
    explored without truncation, making the non-joinability exact."""
    counter = {"states": 2}
    max_total = 2 * budget.max_depth
    for total in range(max_total + 1):
        candidates: list[tuple[tuple, tuple, Valley]] = []
        for l_depth in range(total + 1):
            r_depth = total - l_depth
            if not left.ensure_level(l_depth, budget, counter):
                continue
            if not right.ensure_level(r_depth, budget, counter):
                continue
            for lnode in left.levels[l_depth]:
                if not left.auto.accepting(lnode.phase):
                    continue
                bucket = right.by_sig[r_depth].get(lnode.state.signature(), [])
                for rnode in bucket:
                    if not right.auto.accepting(rnode.phase):
                        continue
                    if equivalent(lnode.state, rnode.state):
                        candidates.append(
                            (
                                lnode.trace_key,
                                rnode.trace_key,
                                Valley(lnode.deriv, rnode.deriv),
                            )
                        )
        if candidates:
            candidates.sort(key=lambda c: (c[0], c[1]))
            return candidates[0][2], False
        if (
            left.exhausted_at is not None
            and right.exhausted_at is not None
            and total >= left.exhausted_at + right.exhausted_at
        ):
            return None, True
        if (left.truncated or left.exhausted_at is not None) and (
            right.truncated or right.exhausted_at is not None
        ):
            if total >= (len(left.levels) - 1) + (len(right.levels) - 1):
                return None, False
    return None, False


# ---------------------------------------------------------------------------
# Per-peak joinability

def _failure_notes(program: Program, peak: CriticalPeak) -> tuple[str, ...]:
    notes = []
    if not applicable_steps(program, peak.left):
        notes.append("left_reduct_admits_no_step")
    if not applicable_steps(program, peak.right):
        notes.append("right_reduct_admits_no_step")
    return tuple(notes)


def _pattern_sides(program, peak, allowed, pattern):
    if pattern[0] == "any":
        auto = _AnyAuto(allowed)
        return _Side(program, auto, peak.left), _Side(program, auto, peak.right)
    if pattern[0] == "single_step_eq":
        return (
            _Side(program, _CappedAuto(allowed, 1), peak.left),
            _Side(program, _CappedAuto(allowed, 1), peak.right),
        )
    if pattern[0] == "star":
        order = pattern[1]
        alpha, beta = peak.rule_left, peak.rule_right
        return (
            _Side(program, _StarAuto(alpha, beta, order), peak.left),
            _Side(program, _StarAuto(beta, alpha, order), peak.right),
        )
    raise ValueError(f"unknown pattern {pattern[0]!r}")


_STATUS_FOR_PATTERN = {
    "any": "JOINABLE",
    "single_step_eq": "STRONGLY_JOINABLE",
    "star": "DECREASING",
}


def _valley_fits(valley: Valley, peak: CriticalPeak, allowed, pattern) -> bool:
    lt, rt = valley.labels()
    if pattern[0] == "any":
        return all(l in allowed for l in lt + rt)
    if pattern[0] == "single_step_eq":
        return len(lt) <= 1 and len(rt) <= 1 and all(l in allowed for l in lt + rt)
    if pattern[0] == "star":
        return matches_star(lt, rt, peak.rule_left, peak.rule_right, pattern[1])
    return False


def join_search(
    program: Program,
    peak: CriticalPeak,
    allowed: Iterable[str],
    pattern: tuple,
    budget: SearchBudget,
    index: int = 0,
    tactic: Optional[tuple[list, list]] = None,
) -> PeakVerdict:
    """Search one closing of `peak` whose label traces satisfy `pattern`."""
    allowed = frozenset(allowed)
    if tactic is not None:
        left_seqs, right_seqs = tactic
        valley, _ = _closing_search(
            _Side(program, _TrieAuto(left_seqs), peak.left),
            _Side(program, _TrieAuto(right_seqs), peak.right),
            budget,
        )
        if valley is not None and _valley_fits(valley, peak, allowed, pattern):
            return PeakVerdict(
                index,
                peak.rule_left,
                peak.rule_right,
                _STATUS_FOR_PATTERN[pattern[0]],
                valley,
                notes=("tactic",),
            )
    left_side, right_side = _pattern_sides(program, peak, allowed, pattern)
    valley, definite = _closing_search(left_side, right_side, budget)
    if valley is not None:
        return PeakVerdict(
            index, peak.rule_left, peak.rule_right,
            _STATUS_FOR_PATTERN[pattern[0]], valley,
        )
    return PeakVerdict(
        index,
        peak.rule_left,
        peak.rule_right,
        "NOT_CLOSED",
        None,
        notes=_failure_notes(program, peak),
        exhausted=definite,
        bounds=(budget.max_depth, budget.max_states),
    )


# ---------------------------------------------------------------------------
# Reports

@dataclass
class Report:
    mode: str
    criterion: str
    established: bool
    outcome: str
    assumptions: tuple[str, ...] = ()
    partition: Optional[Partition] = None
    order: Optional[RulePreorder] = None
    termination: Optional[TerminationResult] = None
    admissibility: Optional[AdmissibilityResult] = None
    admissible_fields: tuple[tuple[str, str], ...] = ()
    peaks: tuple[CriticalPeak, ...] = ()
    classifications: tuple[str, ...] = ()
    verdicts: tuple[PeakVerdict, ...] = ()
    notes: tuple[str, ...] = ()


def _outcome(established: bool) -> str:
    return "CONFLUENT" if established else "NOT_ESTABLISHED"


def check_local_confluence(
    program: Program, budget: SearchBudget, assume_terminating: bool = False
) -> Report:
    """Newman-style check: terminating plus joinable critical peaks."""
    part = Partition.for_program(program)
    term = check_inductive_termination(program, part, assume_terminating)
    peaks = critical_peaks(program, program)
    allowed = program.rule_names()
    verdicts = tuple(
        join_search(program, pk, allowed, ("any",), budget, index=i)
        for i, pk in enumerate(peaks)
    )
    established = term.acceptable and all(v.closed for v in verdicts)
    assumptions = ("termination_assumed",) if term.status == "ASSUMED" else ()
    return Report(
        mode="local",
        criterion="locally_confluent",
        established=established,
        outcome=_outcome(established),
        assumptions=assumptions,
        partition=part,
        termination=term,
        peaks=tuple(peaks),
        classifications=tuple(classify(pk, part) for pk in peaks),
        verdicts=verdicts,
    )


def check_strong_confluence(program: Program, budget: SearchBudget) -> Report:
    part = Partition.for_program(program)
    peaks = critical_peaks(program, program)
    allowed = program.rule_names()
    verdicts = tuple(
        join_search(program, pk, allowed, ("single_step_eq",), budget, index=i)
        for i, pk in enumerate(peaks)
    )
    established = all(v.closed for v in verdicts)
    return Report(
        mode="strong",
        criterion="strongly_confluent",
        established=established,
        outcome=_outcome(established),
        partition=part,
        peaks=tuple(peaks),
        classifications=tuple(classify(pk, part) for pk in peaks),
        verdicts=verdicts,
    )


def check_rule_decreasing(
    program: Program,
    part: Partition,
    order: Optional[RulePreorder],
    budget: SearchBudget,
    tactics: Optional[dict[int, tuple[list, list]]] = None,
    enumerate_orders: bool = False,
    assume_terminating: bool = False,
) -> Report:
    criterion = "strongly_rule_decreasing" if not part.inductive else "rule_decreasing"
    peaks = critical_peaks(program, program)
    classes = [classify(pk, part) for pk in peaks]
    term = check_inductive_termination(program, part, assume_terminating)
    tactics = tactics or {}

    base = dict(
        mode="decreasing",
        criterion=criterion,
        partition=part,
        termination=term,
        peaks=tuple(peaks),
        classifications=tuple(classes),
    )
    assumptions = ("termination_assumed",) if term.status == "ASSUMED" else ()

    admissible_fields: tuple[tuple[str, str], ...] = ()
    if order is not None:
        adm = is_admissible(order, part)
        orders_to_try = [order] if adm.ok else []
    elif enumerate_orders and len(part.coinductive) <= 5:
        orders_to_try = list(admissible_total_preorders(program, part))
        adm = AdmissibilityResult(True)
        admissible_fields = (("orders_tried", str(len(orders_to_try))),)
    else:
        fallback = RulePreorder.discrete(program.rule_names())
        adm = is_admissible(fallback, part)
        orders_to_try = [fallback] if adm.ok else []

    if not adm.ok or not term.acceptable or not orders_to_try:
        return Report(
            established=False,
            outcome="NOT_ESTABLISHED",
            assumptions=assumptions,
            order=order,
            admissibility=adm,
            admissible_fields=admissible_fields,
            verdicts=(),
            **base,
        )

    allowed_all = program.rule_names()
    inductive_verdicts: dict[int, PeakVerdict] = {}
    for i, (pk, cls) in enumerate(zip(peaks, classes)):
        if cls == "inductive":
            inductive_verdicts[i] = join_search(
                program, pk, sorted(part.inductive), ("any",), budget,
                index=i, tactic=tactics.get(i),
            )
    inductive_ok = all(v.closed for v in inductive_verdicts.values())

    chosen_order: Optional[RulePreorder] = None
    chosen: dict[int, PeakVerdict] = {}
    first_attempt: Optional[tuple[RulePreorder, dict[int, PeakVerdict]]] = None
    for cand in orders_to_try:
        co: dict[int, PeakVerdict] = {}
        ok = True
        for i, (pk, cls) in enumerate(zip(peaks, classes)):
            if cls != "coinductive":
                continue
            v = join_search(
                program, pk, allowed_all, ("star", cand), budget,
                index=i, tactic=tactics.get(i),
            )
            co[i] = v
            if not v.closed:
                ok = False
        if first_attempt is None:
            first_attempt = (cand, co)
        if ok:
            chosen_order = cand
            chosen = co
            break
        if not inductive_ok:
            break  # enumeration cannot help once an inductive peak failed
    if chosen_order is None and first_attempt is not None:
        chosen_order, chosen = first_attempt

    verdicts = tuple(
        inductive_verdicts[i] if classes[i] == "inductive" else chosen[i]
        for i in range(len(peaks))
    )
    established = inductive_ok and all(v.closed for v in verdicts)
    if enumerate_orders and order is None:
        found = "true" if established else "false"
        admissible_fields = admissible_fields + (("found", found),)
        if established and chosen_order is not None:
            admissible_fields = admissible_fields + (
                ("order", ",".join(chosen_order.pairs_text()) or "discrete"),
            )
    return Report(
        established=established,
        outcome=_outcome(established),
        assumptions=assumptions,
        order=chosen_order if order is None else order,
        admissibility=adm,
        admissible_fields=admissible_fields,
        verdicts=verdicts,
        **base,
    )


def check_modularity(p: Program, q: Program, budget: SearchBudget) -> Report:
    """Cross peaks must close with q-steps on the left, at most one p-step
    on the right; the component programs' confluence is assumed, not checked."""
    overlap = set(p.rule_names()) & set(q.rule_names())
    if overlap:
        raise ValueError(f"programs share rule names: {sorted(overlap)}")
    peaks = critical_peaks(p, q)
    verdicts = []
    for i, pk in enumerate(peaks):
        left_side = _Side(q, _AnyAuto(q.rule_names()), pk.left)
        right_side = _Side(p, _CappedAuto(p.rule_names(), 1), pk.right)
        valley, definite = _closing_search(left_side, right_side, budget)
        if valley is not None:
            verdicts.append(
                PeakVerdict(i, pk.rule_left, pk.rule_right, "JOINABLE", valley)
            )
        else:
            notes = []
            if not applicable_steps(q, pk.left):
                notes.append("left_reduct_admits_no_q_step")
            if not applicable_steps(p, pk.right):
                notes.append("right_reduct_admits_no_p_step")
            verdicts.append(
                PeakVerdict(
                    i, pk.rule_left, pk.rule_right, "NOT_CLOSED", None,
                    notes=tuple(notes), exhausted=definite,
                    bounds=(budget.max_depth, budget.max_states),
                )
            )
    established = all(v.closed for v in verdicts)
    return Report(
        mode="modular",
        criterion="modular_union_confluent",
        established=established,
        outcome=_outcome(established),
        assumptions=("p_confluent", "q_confluent"),
        peaks=tuple(peaks),
        classifications=tuple("cross" for _ in peaks),
        verdicts=tuple(verdicts),
    )
