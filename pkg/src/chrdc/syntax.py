"""Parser and pretty-printer for CHR programs and query states.

Surface syntax, Prolog-adjacent:

    % comment until end of line
    name @ kept \\ removed <=> guard | body .      simplification
    name @ removed <=> body .                      simplification, empty kept head
    name @ kept ==> guard | body .                 propagation

Variables match [A-Z_][A-Za-z0-9_]*, functors and predicates are
lowercase identifiers or integer literals, `+` is infix sugar for the
binary functor of the same name. A body is a comma list mixing user
atoms and `=` equations (`;` is accepted as a separator too); `true`
is the empty conjunction and `false` the inconsistent one. Queries are
written the same way with an optional `# globals: X, Y` suffix.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterator, Mapping, Optional

from .terms import Compound, Term, Var, apply, iter_vars, FRESH_PREFIX


class ParseError(Exception):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.message = message
        self.line = line
        self.col = col


@dataclass(frozen=True)
class Atom:
    pred: str
    args: tuple[Term, ...] = ()

    def subst(self, s: Mapping[str, Term]) -> "Atom":
        return Atom(self.pred, tuple(apply(s, a) for a in self.args))

    def iter_vars(self) -> Iterator[str]:
        for a in self.args:
            yield from iter_vars(a)


@dataclass(frozen=True)
class Eq:
    lhs: Term
    rhs: Term

    def subst(self, s: Mapping[str, Term]) -> "Eq":
        return Eq(apply(s, self.lhs), apply(s, self.rhs))

    def iter_vars(self) -> Iterator[str]:
        yield from iter_vars(self.lhs)
        yield from iter_vars(self.rhs)


@dataclass(frozen=True)
class Rule:
    name: str
    kept: tuple[Atom, ...]
    removed: tuple[Atom, ...]
    guard: tuple[Eq, ...]
    user_body: tuple[Atom, ...]
    builtin_body: tuple[Eq, ...]

    @property
    def is_propagation(self) -> bool:
        return not self.removed

    @property
    def is_simplification(self) -> bool:
        return bool(self.removed)

    @property
    def heads(self) -> tuple[Atom, ...]:
        return self.kept + self.removed

    def variables(self) -> list[str]:
        """Variable names in first-occurrence order."""
        seen: dict[str, None] = {}
        for part in (self.kept, self.removed, self.guard, self.user_body, self.builtin_body):
            for item in part:
                for v in item.iter_vars():
                    seen.setdefault(v)
        return list(seen)

    def subst(self, s: Mapping[str, Term]) -> "Rule":
        return Rule(
            self.name,
            tuple(a.subst(s) for a in self.kept),
            tuple(a.subst(s) for a in self.removed),
            tuple(e.subst(s) for e in self.guard),
            tuple(a.subst(s) for a in self.user_body),
            tuple(e.subst(s) for e in self.builtin_body),
        )


@dataclass(frozen=True)
class Program:
    rules: tuple[Rule, ...]

    def rule(self, name: str) -> Rule:
        for r in self.rules:
            if r.name == name:
                return r
        raise KeyError(name)

    def rule_names(self) -> list[str]:
        return [r.name for r in self.rules]

    def index_of(self, name: str) -> int:
        for i, r in enumerate(self.rules):
            if r.name == name:
                return i
        raise KeyError(name)

    def predicates(self) -> set[str]:
        preds: set[str] = set()
        for r in self.rules:
            for a in r.heads + r.user_body:
                preds.add(a.pred)
        return preds


# ---------------------------------------------------------------------------
# Tokenizer

_TOKEN_RE = re.compile(
    r"""
    (?P<WS>\s+)
  | (?P<COMMENT>%[^\n]*)
  | (?P<SIMP><=>)
  | (?P<PROP>==>)
  | (?P<VAR>[A-Z_][A-Za-z0-9_]*)
  | (?P<NAME>[a-z][A-Za-z0-9_]*)
  | (?P<INT>\d+)
  | (?P<AT>@)
  | (?P<BSLASH>\\)
  | (?P<PIPE>\|)
  | (?P<COMMA>,)
  | (?P<SEMI>;)
  | (?P<LPAREN>\()
  | (?P<RPAREN>\))
  | (?P<DOT>\.)
  | (?P<EQ>=)
  | (?P<PLUS>\+)
  | (?P<HASH>\#)
  | (?P<COLON>:)
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Tok:
    kind: str
    value: str
    line: int
    col: int


_TOKEN_NAMES = {
    "SIMP": "'<=>'",
    "PROP": "'==>'",
    "VAR": "a variable",
    "NAME": "an identifier",
    "INT": "an integer",
    "AT": "'@'",
    "BSLASH": "'\\'",
    "PIPE": "'|'",
    "COMMA": "','",
    "SEMI": "';'",
    "LPAREN": "'('",
    "RPAREN": "')'",
    "DOT": "'.'",
    "EQ": "'='",
    "PLUS": "'+'",
    "HASH": "'#'",
    "COLON": "':'",
    "EOF": "end of input",
}


def _tokenize(text: str) -> list[_Tok]:
    toks: list[_Tok] = []
    line, col = 1, 1
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"malformed token {text[pos]!r}", line, col)
        kind = m.lastgroup or ""
        value = m.group()
        if kind not in ("WS", "COMMENT"):
            toks.append(_Tok(kind, value, line, col))
        newlines = value.count("\n")
        if newlines:
            line += newlines
            col = len(value) - value.rfind("\n")
        else:
            col += len(value)
        pos = m.end()
    toks.append(_Tok("EOF", "", line, col))
    return toks


# ---------------------------------------------------------------------------
# Parser

class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.pos = 0
        self.pred_arity: dict[str, int] = {}
        self.fun_arity: dict[str, int] = {}

    def peek(self) -> _Tok:
        return self.toks[self.pos]

    def next(self) -> _Tok:
        t = self.toks[self.pos]
        self.pos += 1
        return t

    def expect(self, kind: str) -> _Tok:
        t = self.peek()
        if t.kind != kind:
            what = _TOKEN_NAMES.get(kind, kind)
            raise ParseError(f"expected {what}, found {t.value!r}", t.line, t.col)
        return self.next()

    def error(self, msg: str) -> ParseError:
        t = self.peek()
        return ParseError(msg, t.line, t.col)

    # -- terms ------------------------------------------------------------

    def parse_var(self) -> Var:
        t = self.expect("VAR")
        if t.value.startswith(FRESH_PREFIX):
            raise ParseError(
                f"variable prefix {FRESH_PREFIX!r} is reserved", t.line, t.col
            )
        return Var(t.value)

    def _check_fun_arity(self, name: str, arity: int, tok: _Tok) -> None:
        prev = self.fun_arity.get(name)
        if prev is not None and prev != arity:
            raise ParseError(
                f"functor {name}/{arity} clashes with earlier use at arity {prev}",
                tok.line, tok.col,
            )
        self.fun_arity[name] = arity

    def parse_primary(self) -> Term:
        t = self.peek()
        if t.kind == "VAR":
            return self.parse_var()
        if t.kind == "INT":
            self.next()
            self._check_fun_arity(t.value, 0, t)
            return Compound(t.value)
        if t.kind == "LPAREN":
            self.next()
            inner = self.parse_term()
            self.expect("RPAREN")
            return inner
        if t.kind == "NAME":
            self.next()
            if self.peek().kind == "LPAREN":
                self.next()
                args = [self.parse_term()]
                while self.peek().kind == "COMMA":
                    self.next()
                    args.append(self.parse_term())
                self.expect("RPAREN")
                self._check_fun_arity(t.value, len(args), t)
                return Compound(t.value, tuple(args))
            self._check_fun_arity(t.value, 0, t)
            return Compound(t.value)
        raise self.error(f"expected a term, found {t.value!r}")

    def parse_term(self) -> Term:
        left = self.parse_primary()
        while self.peek().kind == "PLUS":
            self.next()
            right = self.parse_primary()
            left = Compound("+", (left, right))
        return left

    # -- atoms and items ---------------------------------------------------

    def parse_atom(self) -> Atom:
        t = self.peek()
        if t.kind != "NAME":
            raise self.error(f"expected an atom, found {t.value!r}")
        self.next()
        args: list[Term] = []
        if self.peek().kind == "LPAREN":
            self.next()
            args.append(self.parse_term())
            while self.peek().kind == "COMMA":
                self.next()
                args.append(self.parse_term())
            self.expect("RPAREN")
        prev = self.pred_arity.get(t.value)
        if prev is not None and prev != len(args):
            raise ParseError(
                f"predicate {t.value}/{len(args)} clashes with earlier use at arity {prev}",
                t.line, t.col,
            )
        self.pred_arity[t.value] = len(args)
        return Atom(t.value, tuple(args))

    def parse_item(self) -> Optional[tuple[str, object]]:
        """One body/query item: ('atom', Atom), ('eq', Eq), or None for true."""
        t = self.peek()
        if t.kind == "NAME" and t.value == "true" and self.toks[self.pos + 1].kind not in ("LPAREN", "EQ", "PLUS"):
            self.next()
            return None
        if t.kind == "NAME" and t.value == "false" and self.toks[self.pos + 1].kind not in ("LPAREN", "EQ", "PLUS"):
            self.next()
            # An inconsistent store is encoded as a clash between constants.
            return ("eq", Eq(Compound("0"), Compound("1")))
        if t.kind in ("VAR", "INT", "LPAREN"):
            lhs = self.parse_term()
            self.expect("EQ")
            rhs = self.parse_term()
            return ("eq", Eq(lhs, rhs))
        if t.kind == "NAME":
            # A name can open either an atom or the left side of an
            # equation; try the term reading first and fall back.
            start = self.pos
            fun_snap = dict(self.fun_arity)
            lhs = self.parse_term()
            if self.peek().kind == "EQ":
                self.next()
                rhs = self.parse_term()
                return ("eq", Eq(lhs, rhs))
            self.pos = start
            self.fun_arity = fun_snap
            return ("atom", self.parse_atom())
        raise self.error(f"expected an atom or equation, found {t.value!r}")

    def parse_items(self) -> list[tuple[str, object]]:
        items: list[tuple[str, object]] = []
        item = self.parse_item()
        if item is not None:
            items.append(item)
        while self.peek().kind in ("COMMA", "SEMI"):
            self.next()
            item = self.parse_item()
            if item is not None:
                items.append(item)
        return items

    # -- rules -------------------------------------------------------------

    def parse_rule(self) -> Rule:
        name_tok = self.expect("NAME")
        self.expect("AT")
        if self.peek().kind in ("SIMP", "PROP"):
            raise ParseError("both heads empty", name_tok.line, name_tok.col)
        first = [self.parse_atom()]
        while self.peek().kind == "COMMA":
            self.next()
            first.append(self.parse_atom())
        kept: list[Atom] = []
        removed: list[Atom] = []
        if self.peek().kind == "BSLASH":
            self.next()
            kept = first
            removed = [self.parse_atom()]
            while self.peek().kind == "COMMA":
                self.next()
                removed.append(self.parse_atom())
            arrow = self.expect("SIMP")
        elif self.peek().kind == "SIMP":
            removed = first
            arrow = self.next()
        elif self.peek().kind == "PROP":
            kept = first
            arrow = self.next()
        else:
            raise self.error("expected '\\', '<=>' or '==>'")

        items = self.parse_items()
        guard: list[Eq] = []
        if self.peek().kind == "PIPE":
            self.next()
            for kind, value in items:
                if kind != "eq":
                    raise ParseError(
                        "guards may only contain equations", arrow.line, arrow.col
                    )
                guard.append(value)
            items = self.parse_items()
        self.expect("DOT")

        user_body = tuple(v for k, v in items if k == "atom")
        builtin_body = tuple(v for k, v in items if k == "eq")
        return Rule(
            name_tok.value, tuple(kept), tuple(removed), tuple(guard),
            user_body, builtin_body,
        )

    def parse_program(self) -> Program:
        rules: list[Rule] = []
        names: set[str] = set()
        while self.peek().kind != "EOF":
            t = self.peek()
            rule = self.parse_rule()
            if rule.name in names:
                raise ParseError(f"duplicate rule name {rule.name!r}", t.line, t.col)
            names.add(rule.name)
            rules.append(rule)
        return Program(tuple(rules))

    def parse_state_parts(self):
        atoms: list[Atom] = []
        eqs: list[Eq] = []
        if self.peek().kind not in ("HASH", "EOF"):
            for kind, value in self.parse_items():
                if kind == "atom":
                    atoms.append(value)
                else:
                    eqs.append(value)
        globals_: Optional[list[str]] = None
        if self.peek().kind == "HASH":
            self.next()
            kw = self.expect("NAME")
            if kw.value != "globals":
                raise ParseError("expected 'globals' after '#'", kw.line, kw.col)
            self.expect("COLON")
            globals_ = []
            if self.peek().kind == "VAR":
                globals_.append(self.parse_var().name)
                while self.peek().kind == "COMMA":
                    self.next()
                    globals_.append(self.parse_var().name)
        self.expect("EOF")
        return tuple(atoms), tuple(eqs), globals_


def parse_program(text: str) -> Program:
    return _Parser(text).parse_program()


def parse_state(text: str):
    """Parse a query state; globals default to all free variables."""
    from .state import State

    atoms, eqs, globals_ = _Parser(text).parse_state_parts()
    if globals_ is None:
        seen: dict[str, None] = {}
        for a in atoms:
            for v in a.iter_vars():
                seen.setdefault(v)
        for e in eqs:
            for v in e.iter_vars():
                seen.setdefault(v)
        gset = frozenset(seen)
    else:
        gset = frozenset(globals_)
    return State(atoms, eqs, gset)


def parse_program_file(path: str) -> Program:
    with open(path, encoding="utf-8") as fh:
        return parse_program(fh.read())


# ---------------------------------------------------------------------------
# Pretty-printing

def term_text(t: Term) -> str:
    if isinstance(t, Var):
        return t.name
    if t.functor == "+" and len(t.args) == 2:
        left, right = t.args
        rtxt = term_text(right)
        if isinstance(right, Compound) and right.functor == "+" and len(right.args) == 2:
            rtxt = f"({rtxt})"
        return f"{term_text(left)}+{rtxt}"
    if not t.args:
        return t.functor
    return f"{t.functor}({', '.join(term_text(a) for a in t.args)})"


def atom_text(a: Atom) -> str:
    if not a.args:
        return a.pred
    return f"{a.pred}({', '.join(term_text(x) for x in a.args)})"


def eq_text(e: Eq) -> str:
    return f"{term_text(e.lhs)} = {term_text(e.rhs)}"


def rule_text(r: Rule) -> str:
    body = [atom_text(a) for a in r.user_body] + [eq_text(e) for e in r.builtin_body]
    body_txt = ", ".join(body) if body else "true"
    guard_txt = ", ".join(eq_text(e) for e in r.guard)
    if guard_txt:
        body_txt = f"{guard_txt} | {body_txt}"
    if r.is_propagation:
        heads = ", ".join(atom_text(a) for a in r.kept)
        return f"{r.name} @ {heads} ==> {body_txt}."
    removed = ", ".join(atom_text(a) for a in r.removed)
    if r.kept:
        kept = ", ".join(atom_text(a) for a in r.kept)
        return f"{r.name} @ {kept} \\ {removed} <=> {body_txt}."
    return f"{r.name} @ {removed} <=> {body_txt}."


def program_text(p: Program) -> str:
    return "\n".join(rule_text(r) for r in p.rules) + ("\n" if p.rules else "")
