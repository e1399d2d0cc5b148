"""Command-line front end.

    chrdc peaks FILE [FILE2] [--config CFG] [--format text|machine]
    chrdc check --mode {local,strong,decreasing,modular} FILE [FILE2]
          [--config CFG] [--format text|machine] [--max-depth N]
    chrdc run FILE --query "atoms # globals: ..." [--steps N]

Exit codes: 0 established / done, 1 property not established, 2 input
or configuration error. Output is byte-identical across runs on
identical inputs.
"""

from __future__ import annotations

import argparse
import sys
from typing import Optional

from .analysis import (
    Report,
    SearchBudget,
    check_local_confluence,
    check_modularity,
    check_rule_decreasing,
    check_strong_confluence,
)
from .config import AnalysisConfig, ConfigError, load_config_file, resolve_tactics
from .engine import applicable_steps
from .orders import Partition, RulePreorder
from .peaks import classify, critical_peaks
from .state import State, canonical_text, canonicalize
from .syntax import ParseError, Program, parse_program_file, parse_state


def _collect_arities(program: Program) -> tuple[dict[str, int], dict[str, int]]:
    preds: dict[str, int] = {}
    funs: dict[str, int] = {}

    def walk_term(t) -> None:
        if hasattr(t, "functor"):
            prev = funs.get(t.functor)
            if prev is not None and prev != len(t.args):
                raise ValueError(
                    f"functor {t.functor} used at arities {prev} and {len(t.args)}"
                )
            funs[t.functor] = len(t.args)
            for a in t.args:
                walk_term(a)

    for r in program.rules:
        for a in r.heads + r.user_body:
            prev = preds.get(a.pred)
            if prev is not None and prev != len(a.args):
                raise ValueError(
                    f"predicate {a.pred} used at arities {prev} and {len(a.args)}"
                )
            preds[a.pred] = len(a.args)
            for t in a.args:
                walk_term(t)
        for e in r.guard + r.builtin_body:
            walk_term(e.lhs)
            walk_term(e.rhs)
    return preds, funs


def _check_cross_arities(programs: list[Program]) -> tuple[dict[str, int], dict[str, int]]:
    preds: dict[str, int] = {}
    funs: dict[str, int] = {}
    for program in programs:
        p, f = _collect_arities(program)
        for name, arity in p.items():
            if preds.setdefault(name, arity) != arity:
                raise ValueError(f"predicate {name} used at inconsistent arities")
        for name, arity in f.items():
            if funs.setdefault(name, arity) != arity:
                raise ValueError(f"functor {name} used at inconsistent arities")
    return preds, funs


def _check_state_arities(state: State, preds: dict[str, int], funs: dict[str, int]) -> None:
    def walk_term(t) -> None:
        if hasattr(t, "functor"):
            if funs.setdefault(t.functor, len(t.args)) != len(t.args):
                raise ValueError(
                    f"functor {t.functor}/{len(t.args)} clashes with the program"
                )
            for a in t.args:
                walk_term(a)

    for atom in state.atoms:
        if preds.setdefault(atom.pred, len(atom.args)) != len(atom.args):
            raise ValueError(
                f"predicate {atom.pred}/{len(atom.args)} clashes with the program"
            )
        for t in atom.args:
            walk_term(t)
    for e in state.builtins:
        walk_term(e.lhs)
        walk_term(e.rhs)


def _validate_config_names(cfg: AnalysisConfig, program: Program) -> None:
    names = set(program.rule_names())
    for group in (cfg.inductive, cfg.coinductive):
        for n in group or ():
            if n not in names:
                raise ConfigError(f"unknown rule name in partition: {n!r}")
    for a, _, b in cfg.order_decls:
        for n in (a, b):
            if n not in names:
                raise ConfigError(f"unknown rule name in order: {n!r}")


def _budget(cfg: AnalysisConfig, max_depth_flag: Optional[int]) -> SearchBudget:
    return SearchBudget(
        max_depth=max_depth_flag
        if max_depth_flag is not None
        else (cfg.max_depth if cfg.max_depth is not None else 8),
        max_states=cfg.max_states if cfg.max_states is not None else 2000,
    )


def _emit(report: Report, cfg: AnalysisConfig, format_flag: Optional[str]) -> None:
    from .reports import emit_report

    fmt = format_flag or cfg.out_format or "text"
    sys.stdout.write(emit_report(report, fmt))


def _cmd_peaks(args) -> int:
    programs = [parse_program_file(f) for f in args.files]
    _check_cross_arities(programs)
    cfg = load_config_file(args.config) if args.config else AnalysisConfig()
    if len(programs) == 1:
        _validate_config_names(cfg, programs[0])
        program = programs[0]
        part = Partition.for_program(program, cfg.inductive, cfg.coinductive)
        peaks = critical_peaks(program, program, part)
        classifications = tuple(classify(pk, part) for pk in peaks)
    else:
        peaks = critical_peaks(programs[0], programs[1])
        classifications = tuple("cross" for _ in peaks)
    report = Report(
        mode="peaks",
        criterion="peaks",
        established=True,
        outcome="",
        peaks=tuple(peaks),
        classifications=classifications,
    )
    _emit(report, cfg, args.format)
    return 0


def _cmd_check(args) -> int:
    programs = [parse_program_file(f) for f in args.files]
    _check_cross_arities(programs)
    cfg = load_config_file(args.config) if args.config else AnalysisConfig()
    budget = _budget(cfg, args.max_depth)

    if args.mode == "modular":
        if len(programs) != 2:
            raise ValueError("mode modular needs exactly two program files")
        report = check_modularity(programs[0], programs[1], budget)
        _emit(report, cfg, args.format)
        return 0 if report.established else 1

    if len(programs) != 1:
        raise ValueError(f"mode {args.mode} needs exactly one program file")
    program = programs[0]
    _validate_config_names(cfg, program)

    if args.mode == "local":
        report = check_local_confluence(program, budget, cfg.assume_terminating)
    elif args.mode == "strong":
        report = check_strong_confluence(program, budget)
    else:
        part = Partition.for_program(program, cfg.inductive, cfg.coinductive)
        order: Optional[RulePreorder] = None
        if cfg.order_decls:
            order = RulePreorder.from_declarations(program.rule_names(), cfg.order_decls)
        peaks = critical_peaks(program, program, part)
        tactics = resolve_tactics(cfg, peaks, set(program.rule_names()))
        report = check_rule_decreasing(
            program,
            part,
            order,
            budget,
            tactics=tactics,
            enumerate_orders=cfg.enumerate_orders,
            assume_terminating=cfg.assume_terminating,
        )
    _emit(report, cfg, args.format)
    return 0 if report.established else 1


def _cmd_run(args) -> int:
    program = parse_program_file(args.file)
    state = parse_state(args.query)
    preds, funs = _check_cross_arities([program])
    _check_state_arities(state, preds, funs)
    current = canonicalize(state)
    sys.stdout.write(f"0: {canonical_text(current)}\n")
    for i in range(1, args.steps + 1):
        steps = applicable_steps(program, current)
        if not steps:
            sys.stdout.write("fixpoint\n")
            return 0
        step = steps[0]
        current = step.target
        sys.stdout.write(f"{i}: --{step.rule_name}--> {canonical_text(current)}\n")
    sys.stdout.write("step limit reached\n")
    return 0


def main(argv: Optional[list[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="chrdc",
        description="Confluence analyzer for CHR programs (decreasing diagrams).",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_peaks = sub.add_parser("peaks", help="enumerate critical peaks")
    p_peaks.add_argument("files", nargs="+", metavar="FILE")
    p_peaks.add_argument("--config", metavar="CFG")
    p_peaks.add_argument("--format", choices=("text", "machine"))
    p_peaks.set_defaults(func=_cmd_peaks)

    p_check = sub.add_parser("check", help="run a confluence criterion")
    p_check.add_argument("files", nargs="+", metavar="FILE")
    p_check.add_argument(
        "--mode", required=True, choices=("local", "strong", "decreasing", "modular")
    )
    p_check.add_argument("--config", metavar="CFG")
    p_check.add_argument("--format", choices=("text", "machine"))
    p_check.add_argument("--max-depth", type=int, dest="max_depth")
    p_check.set_defaults(func=_cmd_check)

    p_run = sub.add_parser("run", help="bounded execution trace for debugging")
    p_run.add_argument("file", metavar="FILE")
    p_run.add_argument("--query", required=True)
    p_run.add_argument("--steps", type=int, default=20)
    p_run.set_defaults(func=_cmd_run)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, ConfigError, ValueError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2


def entry() -> None:
    sys.exit(main(sys.argv[1:]))


if __name__ == "__main__":
    entry()
