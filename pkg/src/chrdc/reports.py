"""Report rendering: human-readable text and line-oriented machine records.

Machine grammar, one record per line, space-separated fields, bracketed
comma lists without spaces:

    PEAK <id> <rule> <rule> <STATUS> [key=value ...]
    TERMINATION inductive <VERIFIED|ASSUMED|REFUTED> measure=atoms,size [witness=rule]
    ADMISSIBLE <true|false|enumerated> [key=value ...]
    VERDICT <criterion> <CONFLUENT|NOT_ESTABLISHED> assumptions=[...]

Values are bare tokens or bracketed lists; a report is re-parseable by
`parse_machine_report` and emission is byte-stable across runs.
"""

from __future__ import annotations

import re
from typing import Optional

from .analysis import PeakVerdict, Report
from .peaks import CriticalPeak
from .state import canonical_text, canonicalize


_PEAK_STATUSES = (
    "JOINABLE",
    "DECREASING",
    "STRONGLY_JOINABLE",
    "NOT_CLOSED",
    "REFUTED",
    "INDUCTIVE",
    "COINDUCTIVE",
    "CROSS",
)


def _bracket(items) -> str:
    return "[" + ",".join(items) + "]"


def _machine_peak_line(index: int, v: PeakVerdict) -> str:
    parts = ["PEAK", str(index), v.rule_left, v.rule_right, v.status]
    if v.valley is not None:
        left_labels, right_labels = v.valley.labels()
        parts.append("left=" + _bracket(left_labels))
        parts.append("right=" + _bracket(right_labels))
    else:
        if v.bounds is not None:
            parts.append(f"depth={v.bounds[0]}")
            parts.append(f"states={v.bounds[1]}")
        if v.exhausted:
            parts.append("exhausted=true")
        if v.notes:
            parts.append("notes=" + _bracket(v.notes))
    return " ".join(parts)


def machine_report(report: Report) -> str:
    lines: list[str] = []
    if report.mode == "peaks":
        for i, (peak, cls) in enumerate(zip(report.peaks, report.classifications)):
            lines.append(f"PEAK {i} {peak.rule_left} {peak.rule_right} {cls.upper()}")
        return "\n".join(lines) + ("\n" if lines else "")
    if report.admissibility is not None:
        fields = list(report.admissible_fields)
        if report.mode == "decreasing" and any(k == "orders_tried" for k, _ in fields):
            head = "ADMISSIBLE enumerated"
        elif report.admissibility.ok:
            head = "ADMISSIBLE true"
        else:
            head = "ADMISSIBLE false"
            fields.insert(0, ("witness", ",".join(report.admissibility.witness)))
        lines.append(" ".join([head] + [f"{k}={v}" for k, v in fields]))
    if report.termination is not None:
        t = report.termination
        line = f"TERMINATION inductive {t.status} measure=atoms,size"
        if t.witness:
            line += f" witness={t.witness}"
        lines.append(line)
    for v in report.verdicts:
        lines.append(_machine_peak_line(v.index, v))
    lines.append(
        f"VERDICT {report.criterion} {report.outcome} assumptions="
        + _bracket(report.assumptions)
    )
    return "\n".join(lines) + "\n"


_RECORD_RE = re.compile(r"^(PEAK|TERMINATION|ADMISSIBLE|VERDICT)(?: (.*))?$")
_FIELD_RE = re.compile(r"^([a-z_]+)=(\[[^\[\]\s]*\]|[^\s\[\]]+)$")


def parse_machine_report(text: str) -> list[dict]:
    """Parse machine output back into records; raises ValueError on noise."""
    records = []
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        m = _RECORD_RE.match(line)
        if m is None:
            raise ValueError(f"line {lineno}: unrecognized record: {line!r}")
        kind = m.group(1)
        rest = (m.group(2) or "").split(" ") if m.group(2) else []
        positional: list[str] = []
        kv: dict[str, object] = {}
        for tok in rest:
            fm = _FIELD_RE.match(tok)
            if fm:
                key, raw = fm.group(1), fm.group(2)
                if raw.startswith("["):
                    inner = raw[1:-1]
                    kv[key] = inner.split(",") if inner else []
                else:
                    kv[key] = raw
            else:
                if kv:
                    raise ValueError(
                        f"line {lineno}: positional field after key=value: {tok!r}"
                    )
                positional.append(tok)
        if kind == "PEAK":
            if len(positional) != 4 or not positional[0].isdigit():
                raise ValueError(f"line {lineno}: malformed PEAK record")
            if positional[3] not in _PEAK_STATUSES:
                raise ValueError(f"line {lineno}: unknown peak status {positional[3]!r}")
        if kind == "VERDICT" and len(positional) != 2:
            raise ValueError(f"line {lineno}: malformed VERDICT record")
        records.append({"record": kind, "fields": positional, "kv": kv})
    return records


# ---------------------------------------------------------------------------
# Text rendering

def peak_text(index: int, peak: CriticalPeak, classification: Optional[str] = None) -> str:
    tag = f" [{classification}]" if classification else ""
    lines = [
        f"critical peak {index}: {peak.rule_left} / {peak.rule_right}{tag}",
        f"  ancestor: {canonical_text(canonicalize(peak.ancestor))}",
        f"  --{peak.rule_left}--> {canonical_text(canonicalize(peak.left))}",
        f"  --{peak.rule_right}--> {canonical_text(canonicalize(peak.right))}",
    ]
    return "\n".join(lines)


def _verdict_text(v: PeakVerdict) -> str:
    if v.valley is not None:
        left_labels, right_labels = v.valley.labels()
        via = "" if "tactic" not in v.notes else " (tactic)"
        return (
            f"  {v.status}{via}: left closing {_bracket(left_labels)},"
            f" right closing {_bracket(right_labels)}"
        )
    bits = [f"  {v.status}"]
    if v.exhausted:
        bits.append("(search space exhausted)")
    elif v.bounds:
        bits.append(f"(budget: depth {v.bounds[0]}, states {v.bounds[1]})")
    out = " ".join(bits)
    for note in v.notes:
        out += "\n    note: " + note.replace("_", " ")
    return out


def text_report(report: Report) -> str:
    lines: list[str] = []
    if report.mode == "peaks":
        lines.append(f"{len(report.peaks)} critical peak(s)")
        for i, (peak, cls) in enumerate(zip(report.peaks, report.classifications)):
            lines.append(peak_text(i, peak, cls))
        return "\n".join(lines) + "\n"

    lines.append(f"mode: {report.mode}")
    if report.partition is not None and report.mode != "local":
        ind = ", ".join(sorted(report.partition.inductive)) or "(none)"
        co = ", ".join(sorted(report.partition.coinductive)) or "(none)"
        lines.append(f"partition: inductive = {ind}; coinductive = {co}")
    if report.order is not None:
        pairs = ", ".join(report.order.pairs_text()) or "(discrete)"
        lines.append(f"order: {pairs}")
    if report.admissibility is not None:
        if report.admissibility.ok:
            extra = "".join(f" {k}={v}" for k, v in report.admissible_fields)
            lines.append(f"admissible: yes{extra}")
        else:
            rc, ri = report.admissibility.witness
            lines.append(f"admissible: no ({rc} is not strictly above {ri})")
    if report.termination is not None:
        t = report.termination
        suffix = f" (witness: {t.witness})" if t.witness else ""
        lines.append(f"termination of inductive part: {t.status}{suffix} by (atoms, size) measure")
    verdict_by_index = {v.index: v for v in report.verdicts}
    for i, (peak, cls) in enumerate(zip(report.peaks, report.classifications)):
        lines.append(peak_text(i, peak, cls))
        v = verdict_by_index.get(i)
        if v is not None:
            lines.append(_verdict_text(v))
        else:
            lines.append("  (not analyzed)")
    for note in report.notes:
        lines.append(f"note: {note}")
    lines.append(f"verdict: {report.outcome} ({report.criterion})")
    return "\n".join(lines) + "\n"


def emit_report(report: Report, fmt: str = "text") -> str:
    if fmt == "machine":
        return machine_report(report)
    if fmt == "text":
        return text_report(report)
    raise ValueError(f"unknown report format {fmt!r}")


def pretty(value) -> str:
    """Render any analyzer value as text; parseable where a parser exists."""
    from .state import CanonicalState, State, state_text
    from .syntax import Program, program_text

    if isinstance(value, Program):
        return program_text(value)
    if isinstance(value, State):
        return state_text(value)
    if isinstance(value, CanonicalState):
        return canonical_text(value)
    if isinstance(value, CriticalPeak):
        return peak_text(0, value)
    if isinstance(value, Report):
        return text_report(value)
    raise TypeError(f"no pretty form for {type(value).__name__}")
