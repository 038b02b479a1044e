"""Textual surface syntax for protocol models.

A ``.lysa`` file is a sequence of ``let`` index-set declarations followed by a
single process.  Beyond the plain calculus the surface syntax offers indexed
parallel composition ``|_{i in X} P`` and indexed restriction
``new_{i in X}(n_i) P``, which ``expand`` unfolds over the declared finite
index sets.  Identifiers carry indices as underscore-separated suffixes
(``KA_i``, ``MSG_1_2``); an identifier is a variable exactly when its spelling
is bound by an enclosing input or decryption pattern, and a name otherwise.

Crypto-point resolution: a dest/orig reference must either be declared at
some site of the expanded process, be the wildcard ``C``, be the literal
attacker point ``DY``, or carry a zero index, in which case it denotes the
attacker's crypto-point (index 0 marks attacker-affiliated principals, whose
sites belong to the attacker).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterator, Optional, Union

from .syntax import (
    ALL_POINTS,
    ATTACKER_POINT,
    AllPoints,
    CryptoPoint,
    Decrypt,
    In,
    Index,
    NIL,
    Name,
    New,
    Nil,
    Out,
    Par,
    PointSet,
    Process,
    Repl,
    SymEnc,
    Term,
    Variable,
    declared_points,
)


class LysaSyntaxError(ValueError):
    """Malformed source text; carries the offending position."""

    def __init__(self, message: str, line: int = 0, column: int = 0) -> None:
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


class ExpansionError(ValueError):
    pass


class UnknownCryptoPoint(ExpansionError):
    pass


# ---------------------------------------------------------------------------
# Template nodes eliminated by expansion


@dataclass(frozen=True)
class IndexedPar:
    index: str
    over: "SetExpr"
    body: "TemplateProcess"


@dataclass(frozen=True)
class IndexedNew:
    index: str
    over: "SetExpr"
    name: Name
    body: "TemplateProcess"


SetExpr = Union[str, frozenset]  # declared-set reference or literal
TemplateProcess = Union[Process, IndexedPar, IndexedNew]


@dataclass
class SourceModel:
    """A parsed model: raw text, declared index sets, process template and
    the source location of every crypto-point label."""

    text: str
    index_sets: dict
    process: TemplateProcess
    point_table: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)


# ---------------------------------------------------------------------------
# Lexer

_KEYWORDS = {"let", "in", "new", "decrypt", "as", "at", "dest", "orig", "C", "DY"}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>/\*.*?\*/)
  | (?P<name>[A-Za-z][A-Za-z0-9]*(?:_(?:\d+|[A-Za-z][A-Za-z0-9]*))*)
  | (?P<int>\d+)
  | (?P<punct><|>|\{|\}|\(|\)|\[|\]|,|;|:|\.|!|\||_|=)
    """,
    re.VERBOSE | re.DOTALL,
)


@dataclass(frozen=True)
class Token:
    kind: str  # 'name', 'int', 'punct', 'kw', 'eof'
    text: str
    line: int
    column: int


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    pos = 0
    line = 1
    line_start = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise LysaSyntaxError(
                f"unexpected character {text[pos]!r}", line, pos - line_start + 1
            )
        kind = m.lastgroup
        value = m.group()
        if kind in ("ws", "comment"):
            line += value.count("\n")
            if "\n" in value:
                line_start = m.start() + value.rindex("\n") + 1
        else:
            column = m.start() - line_start + 1
            if kind == "name" and value in _KEYWORDS:
                tokens.append(Token("kw", value, line, column))
            else:
                tokens.append(Token(kind, value, line, column))
        pos = m.end()
    tokens.append(Token("eof", "", line, len(text) - line_start + 1))
    return tokens


def _split_identifier(text: str) -> tuple[str, tuple[Index, ...]]:
    parts = text.split("_")
    base = parts[0]
    indices: list[Index] = []
    for part in parts[1:]:
        indices.append(int(part) if part.isdigit() else part)
    return base, tuple(indices)


# ---------------------------------------------------------------------------
# Parser


class _Parser:
    def __init__(self, text: str) -> None:
        self.text = text
        self.tokens = tokenize(text)
        self.pos = 0
        self.index_sets: dict = {}
        self.point_table: dict = {}
        self.warnings: list[str] = []

    # token plumbing

    @property
    def current(self) -> Token:
        return self.tokens[self.pos]

    def peek(self, offset: int = 0) -> Token:
        i = min(self.pos + offset, len(self.tokens) - 1)
        return self.tokens[i]

    def advance(self) -> Token:
        tok = self.current
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def error(self, message: str) -> LysaSyntaxError:
        tok = self.current
        shown = tok.text or "end of input"
        return LysaSyntaxError(f"{message}, found {shown!r}", tok.line, tok.column)

    def expect(self, kind: str, text: Optional[str] = None) -> Token:
        tok = self.current
        if tok.kind != kind or (text is not None and tok.text != text):
            raise self.error(f"expected {text or kind}")
        return self.advance()

    def accept(self, kind: str, text: Optional[str] = None) -> Optional[Token]:
        tok = self.current
        if tok.kind == kind and (text is None or tok.text == text):
            return self.advance()
        return None

    # model

    def parse_model(self) -> SourceModel:
        while self.current.kind == "kw" and self.current.text == "let":
            self.parse_let()
        process = self.parse_process(scope=frozenset())
        self.expect("eof")
        return SourceModel(
            text=self.text,
            index_sets=self.index_sets,
            process=process,
            point_table=self.point_table,
            warnings=self.warnings,
        )

    def parse_let(self) -> None:
        self.expect("kw", "let")
        name = self.expect("name").text
        self.expect("punct", "=")
        values = self.parse_set_literal()
        if name in self.index_sets:
            raise self.error(f"index set {name} declared twice")
        self.index_sets[name] = values

    def parse_set_literal(self) -> frozenset:
        self.expect("punct", "{")
        values: set[int] = set()
        if not self.accept("punct", "}"):
            while True:
                values.add(int(self.expect("int").text))
                if self.accept("punct", "}"):
                    break
                self.expect("punct", ",")
        return frozenset(values)

    def parse_set_expr(self) -> SetExpr:
        if self.current.kind == "name":
            return self.advance().text
        return self.parse_set_literal()

    # processes

    def parse_process(self, scope: frozenset) -> TemplateProcess:
        left = self.parse_prefixed(scope)
        while self.current.kind == "punct" and self.current.text == "|":
            self.advance()
            right = self.parse_prefixed(scope)
            left = Par(left, right)
        return left

    def parse_prefixed(self, scope: frozenset) -> TemplateProcess:
        tok = self.current
        if tok.kind == "int" and tok.text == "0":
            self.advance()
            return NIL
        if tok.kind == "punct" and tok.text == "!":
            self.advance()
            return Repl(self.parse_prefixed(scope))
        if tok.kind == "punct" and tok.text == "|":
            # indexed parallel composition |_{i in S} P
            self.advance()
            index, over = self.parse_index_binder()
            return IndexedPar(index, over, self.parse_prefixed(scope))
        if tok.kind == "kw" and tok.text == "new":
            return self.parse_new(scope)
        if tok.kind == "punct" and tok.text == "<":
            return self.parse_output(scope)
        if tok.kind == "punct" and tok.text == "(":
            nxt = self.peek(1)
            if nxt.kind in ("name", "punct") and (
                nxt.kind == "name" or nxt.text in (";", ")", "{")
            ):
                return self.parse_input(scope)
            self.advance()
            inner = self.parse_process(scope)
            self.expect("punct", ")")
            return inner
        if tok.kind == "kw" and tok.text == "decrypt":
            return self.parse_decrypt(scope)
        raise self.error("expected a process")

    def parse_index_binder(self) -> tuple[str, SetExpr]:
        self.expect("punct", "_")
        self.expect("punct", "{")
        index = self.expect("name").text
        if "_" in index:
            raise self.error("index identifiers may not carry indices")
        self.expect("kw", "in")
        over = self.parse_set_expr()
        self.expect("punct", "}")
        return index, over

    def parse_new(self, scope: frozenset) -> TemplateProcess:
        self.expect("kw", "new")
        if self.current.kind == "punct" and self.current.text == "_":
            # indexed restriction: the index scopes over the name only
            index, over = self.parse_index_binder()
            self.expect("punct", "(")
            name = self.parse_name_token()
            self.expect("punct", ")")
            return IndexedNew(index, over, name, self.parse_prefixed(scope))
        self.expect("punct", "(")
        name = self.parse_name_token()
        self.expect("punct", ")")
        return New(name, self.parse_prefixed(scope))

    def parse_name_token(self) -> Name:
        tok = self.expect("name")
        base, indices = _split_identifier(tok.text)
        return Name(base, indices)

    def parse_output(self, scope: frozenset) -> TemplateProcess:
        self.expect("punct", "<")
        terms = [self.parse_term(scope)]
        while self.accept("punct", ","):
            terms.append(self.parse_term(scope))
        self.expect("punct", ">")
        self.expect("punct", ".")
        return Out(tuple(terms), self.parse_prefixed(scope))

    def parse_pattern(
        self, scope: frozenset, closer: str
    ) -> tuple[tuple[Term, ...], tuple[Variable, ...]]:
        """Parse ``E1, ..., Ej ; x_{j+1}, ..., x_k`` up to ``closer``."""
        match: list[Term] = []
        binds: list[Variable] = []
        if self.current.kind == "name" or (
            self.current.kind == "punct" and self.current.text == "{"
        ):
            match.append(self.parse_term(scope))
            while self.accept("punct", ","):
                match.append(self.parse_term(scope))
        if self.accept("punct", ";"):
            if self.current.kind == "name":
                binds.append(self.parse_bind_var())
                while self.accept("punct", ","):
                    binds.append(self.parse_bind_var())
        self.expect("punct", closer)
        return tuple(match), tuple(binds)

    def parse_bind_var(self) -> Variable:
        tok = self.expect("name")
        base, indices = _split_identifier(tok.text)
        return Variable(base, indices)

    def parse_input(self, scope: frozenset) -> TemplateProcess:
        self.expect("punct", "(")
        match, binds = self.parse_pattern(scope, ")")
        if not match and not binds:
            raise self.error("empty input pattern")
        self.expect("punct", ".")
        inner = scope | {v.render() for v in binds}
        try:
            return In(match, binds, self.parse_prefixed(inner))
        except ValueError as exc:
            raise self.error(str(exc)) from exc

    def parse_decrypt(self, scope: frozenset) -> TemplateProcess:
        self.expect("kw", "decrypt")
        subject = self.parse_term(scope)
        self.expect("kw", "as")
        self.expect("punct", "{")
        match, binds = self.parse_pattern(scope, "}")
        self.expect("punct", ":")
        key = self.parse_term(scope)
        at, points = self.parse_annotation("orig")
        if isinstance(subject, SymEnc) and len(subject.payload) != len(match) + len(
            binds
        ):
            raise self.error(
                f"decryption pattern arity {len(match) + len(binds)} does not "
                f"match ciphertext arity {len(subject.payload)}"
            )
        self.expect("kw", "in")
        inner = scope | {v.render() for v in binds}
        try:
            return Decrypt(subject, match, binds, key, at, points, self.parse_prefixed(inner))
        except ValueError as exc:
            raise self.error(str(exc)) from exc

    # terms

    def parse_term(self, scope: frozenset) -> Term:
        if self.current.kind == "punct" and self.current.text == "{":
            return self.parse_encryption(scope)
        tok = self.expect("name")
        base, indices = _split_identifier(tok.text)
        if tok.text in scope:
            return Variable(base, indices)
        return Name(base, indices)

    def parse_encryption(self, scope: frozenset) -> SymEnc:
        self.expect("punct", "{")
        payload = [self.parse_term(scope)]
        while self.accept("punct", ","):
            payload.append(self.parse_term(scope))
        self.expect("punct", "}")
        self.expect("punct", ":")
        key = self.parse_term(scope)
        at, dest = self.parse_annotation("dest")
        return SymEnc(tuple(payload), key, at, dest)

    def parse_annotation(self, direction: str) -> tuple[CryptoPoint, PointSet]:
        self.expect("punct", "[")
        self.expect("kw", "at")
        at = self.parse_point(declaring=True)
        self.expect("kw", direction)
        if self.accept("kw", "C"):
            points: PointSet = ALL_POINTS
        else:
            self.expect("punct", "{")
            refs: set[CryptoPoint] = set()
            if not self.accept("punct", "}"):
                while True:
                    refs.add(self.parse_point(declaring=False))
                    if self.accept("punct", "}"):
                        break
                    self.expect("punct", ",")
            if not refs:
                self.warnings.append(
                    f"empty {direction} set at crypto-point {at.render()}: every "
                    "decryption involving this site will be flagged"
                )
            points = frozenset(refs)
        self.expect("punct", "]")
        return at, points

    def parse_point(self, declaring: bool) -> CryptoPoint:
        if self.accept("kw", "DY"):
            if declaring:
                raise self.error("DY cannot label a process site")
            return ATTACKER_POINT
        tok = self.expect("name")
        base, indices = _split_identifier(tok.text)
        point = CryptoPoint(base, indices)
        if declaring:
            self.point_table.setdefault(point, (tok.line, tok.column))
        return point


def parse(text: str) -> SourceModel:
    """Parse model text into a source model (template form, unexpanded)."""
    return _Parser(text).parse_model()


def parse_process(text: str) -> Process:
    """Parse and expand index-free process text; convenience for tests."""
    return expand(parse(text))


# ---------------------------------------------------------------------------
# Expansion


def _subst_indices(indices: tuple[Index, ...], env: dict) -> tuple[Index, ...]:
    out: list[Index] = []
    for i in indices:
        if isinstance(i, str):
            if i not in env:
                raise ExpansionError(f"unbound index identifier {i!r}")
            out.append(env[i])
        else:
            out.append(i)
    return tuple(out)


def _subst_term(term: Term, env: dict) -> Term:
    if isinstance(term, Name):
        return Name(term.base, _subst_indices(term.indices, env))
    if isinstance(term, Variable):
        return Variable(term.base, _subst_indices(term.indices, env))
    return SymEnc(
        tuple(_subst_term(t, env) for t in term.payload),
        _subst_term(term.key, env),
        _subst_point(term.at, env),
        _subst_points(term.dest, env),
    )


def _subst_point(point: CryptoPoint, env: dict) -> CryptoPoint:
    if point.attacker:
        return point
    return CryptoPoint(point.base, _subst_indices(point.indices, env))


def _subst_points(points: PointSet, env: dict) -> PointSet:
    if isinstance(points, AllPoints):
        return points
    return frozenset(_subst_point(p, env) for p in points)


def _resolve_set(over: SetExpr, sets: dict) -> frozenset:
    if isinstance(over, str):
        if over not in sets:
            raise ExpansionError(f"undeclared index set {over!r}")
        return sets[over]
    return over


def _expand(p: TemplateProcess, env: dict, sets: dict) -> Process:
    if isinstance(p, Nil):
        return NIL
    if isinstance(p, IndexedPar):
        branches = [
            _expand(p.body, {**env, p.index: v}, sets)
            for v in sorted(_resolve_set(p.over, sets))
        ]
        if not branches:
            return NIL
        result = branches[-1]
        for branch in reversed(branches[:-1]):
            result = Par(branch, result)
        return result
    if isinstance(p, IndexedNew):
        body = _expand(p.body, env, sets)
        # Restriction over an index set binds one name per element; the
        # bound names must be substituted inside the body, so re-expand with
        # each index value only for the name itself.
        result = body
        for v in sorted(_resolve_set(p.over, sets), reverse=True):
            name = Name(p.name.base, _subst_indices(p.name.indices, {**env, p.index: v}))
            result = New(name, result)
        return result
    if isinstance(p, Par):
        return Par(_expand(p.left, env, sets), _expand(p.right, env, sets))
    if isinstance(p, Repl):
        return Repl(_expand(p.body, env, sets))
    if isinstance(p, New):
        return New(
            Name(p.name.base, _subst_indices(p.name.indices, env)),
            _expand(p.body, env, sets),
        )
    if isinstance(p, Out):
        return Out(
            tuple(_subst_term(t, env) for t in p.terms), _expand(p.cont, env, sets)
        )
    if isinstance(p, In):
        return In(
            tuple(_subst_term(t, env) for t in p.match),
            tuple(_subst_term(v, env) for v in p.binds),
            _expand(p.cont, env, sets),
        )
    if isinstance(p, Decrypt):
        return Decrypt(
            _subst_term(p.subject, env),
            tuple(_subst_term(t, env) for t in p.match),
            tuple(_subst_term(v, env) for v in p.binds),
            _subst_term(p.key, env),
            _subst_point(p.at, env),
            _subst_points(p.orig, env),
            _expand(p.cont, env, sets),
        )
    raise TypeError(f"not a process template: {p!r}")


def _resolve_point_refs(process: Process, warnings: Optional[list] = None) -> Process:
    """Map undeclared dest/orig references with a zero index to the attacker
    point.  Other undeclared references are kept (a reference to a site that
    does not exist simply never legitimises a decryption) but flagged, since
    they usually indicate a typo."""
    declared = declared_points(process)

    def resolve(points: PointSet) -> PointSet:
        if isinstance(points, AllPoints):
            return points
        out: set[CryptoPoint] = set()
        for p in points:
            if p.attacker or p in declared:
                out.add(p)
            elif 0 in p.indices:
                out.add(ATTACKER_POINT)
            else:
                if warnings is not None:
                    warnings.append(
                        f"dest/orig set references undeclared crypto-point {p.render()}"
                    )
                out.add(p)
        return frozenset(out)

    def fix_term(t: Term) -> Term:
        if isinstance(t, SymEnc):
            return SymEnc(
                tuple(fix_term(x) for x in t.payload),
                fix_term(t.key),
                t.at,
                resolve(t.dest),
            )
        return t

    def walk(p: Process) -> Process:
        if isinstance(p, Nil):
            return p
        if isinstance(p, Par):
            return Par(walk(p.left), walk(p.right))
        if isinstance(p, Repl):
            return Repl(walk(p.body))
        if isinstance(p, New):
            return New(p.name, walk(p.body))
        if isinstance(p, Out):
            return Out(tuple(fix_term(t) for t in p.terms), walk(p.cont))
        if isinstance(p, In):
            return In(tuple(fix_term(t) for t in p.match), p.binds, walk(p.cont))
        if isinstance(p, Decrypt):
            return Decrypt(
                fix_term(p.subject),
                tuple(fix_term(t) for t in p.match),
                p.binds,
                fix_term(p.key),
                p.at,
                resolve(p.orig),
                walk(p.cont),
            )
        raise TypeError(f"not a process: {p!r}")

    return walk(process)


def _check_unique_sites(process: Process) -> None:
    seen: set[CryptoPoint] = set()

    def see(point: CryptoPoint) -> None:
        if point in seen:
            raise ExpansionError(
                f"crypto-point {point.render()} labels more than one site"
            )
        seen.add(point)

    def scan_term(t: Term) -> None:
        if isinstance(t, SymEnc):
            see(t.at)
            for part in t.payload:
                scan_term(part)
            scan_term(t.key)

    def walk(p: Process) -> None:
        if isinstance(p, Par):
            walk(p.left)
            walk(p.right)
        elif isinstance(p, (Repl, New)):
            walk(p.body)
        elif isinstance(p, Out):
            for t in p.terms:
                scan_term(t)
            walk(p.cont)
        elif isinstance(p, In):
            for t in p.match:
                scan_term(t)
            walk(p.cont)
        elif isinstance(p, Decrypt):
            see(p.at)
            scan_term(p.subject)
            scan_term(p.key)
            for t in p.match:
                scan_term(t)
            walk(p.cont)

    walk(process)


def _uniquify_binders(process: Process) -> Process:
    """Rename apart variables bound at distinct binder sites so the canonical
    variable map is injective."""
    taken: set[str] = set()

    def fresh(var: Variable) -> Variable:
        if var.render() not in taken:
            taken.add(var.render())
            return var
        n = 2
        renamed = Variable(f"{var.base}{n}", var.indices)
        while renamed.render() in taken:
            n += 1
            renamed = Variable(f"{var.base}{n}", var.indices)
        taken.add(renamed.render())
        return renamed

    def sub_term(t: Term, ren: dict) -> Term:
        if isinstance(t, Variable):
            return ren.get(t.render(), t)
        if isinstance(t, SymEnc):
            return SymEnc(
                tuple(sub_term(x, ren) for x in t.payload),
                sub_term(t.key, ren),
                t.at,
                t.dest,
            )
        return t

    def walk(p: Process, ren: dict) -> Process:
        if isinstance(p, Nil):
            return p
        if isinstance(p, Par):
            return Par(walk(p.left, ren), walk(p.right, ren))
        if isinstance(p, Repl):
            return Repl(walk(p.body, ren))
        if isinstance(p, New):
            return New(p.name, walk(p.body, ren))
        if isinstance(p, Out):
            return Out(tuple(sub_term(t, ren) for t in p.terms), walk(p.cont, ren))
        if isinstance(p, In):
            new_binds = tuple(fresh(v) for v in p.binds)
            inner = {**ren}
            for old, new in zip(p.binds, new_binds):
                inner[old.render()] = new
            return In(
                tuple(sub_term(t, ren) for t in p.match), new_binds, walk(p.cont, inner)
            )
        if isinstance(p, Decrypt):
            new_binds = tuple(fresh(v) for v in p.binds)
            inner = {**ren}
            for old, new in zip(p.binds, new_binds):
                inner[old.render()] = new
            return Decrypt(
                sub_term(p.subject, ren),
                tuple(sub_term(t, ren) for t in p.match),
                new_binds,
                sub_term(p.key, ren),
                p.at,
                p.orig,
                walk(p.cont, inner),
            )
        raise TypeError(f"not a process: {p!r}")

    return walk(process, {})


def expand(
    model: SourceModel,
    *,
    legitimate_attacker: bool = False,
    set_overrides: Optional[dict] = None,
) -> Process:
    """Unfold indexed constructs over the declared index sets.

    Without ``legitimate_attacker`` the reserved index 0 is dropped from every
    declared set, removing attacker-affiliated principals from the system.
    """
    sets = dict(model.index_sets)
    if set_overrides:
        sets.update(set_overrides)
    if not legitimate_attacker:
        sets = {k: frozenset(v - {0}) for k, v in sets.items()}
    process = _expand(model.process, {}, sets)
    process = _resolve_point_refs(process, model.warnings)
    _check_unique_sites(process)
    return _uniquify_binders(process)


# ---------------------------------------------------------------------------
# Pretty-printing


def _format_indexed(base: str, indices: tuple[Index, ...]) -> str:
    return "_".join([base, *map(str, indices)]) if indices else base


def format_point(point: CryptoPoint) -> str:
    return "DY" if point.attacker else _format_indexed(point.base, point.indices)


def format_point_set(points: PointSet) -> str:
    if isinstance(points, AllPoints):
        return "C"
    return "{" + ", ".join(sorted(format_point(p) for p in points)) + "}"


def format_term(term: Term) -> str:
    if isinstance(term, (Name, Variable)):
        return term.render()
    inner = ", ".join(format_term(t) for t in term.payload)
    return (
        f"{{{inner}}}:{format_term(term.key)} "
        f"[at {format_point(term.at)} dest {format_point_set(term.dest)}]"
    )


def pretty(process: Process) -> str:
    """Render an expanded process; ``parse_process(pretty(p))`` returns an
    equal AST."""
    if isinstance(process, Nil):
        return "0"
    if isinstance(process, Par):
        return f"{_pretty_operand(process.left)} | {_pretty_operand(process.right)}"
    if isinstance(process, Repl):
        return f"!{_pretty_operand(process.body)}"
    if isinstance(process, New):
        return f"new({process.name.render()}) {_pretty_operand(process.body)}"
    if isinstance(process, Out):
        terms = ", ".join(format_term(t) for t in process.terms)
        return f"<{terms}>.{_pretty_operand(process.cont)}"
    if isinstance(process, In):
        match = ", ".join(format_term(t) for t in process.match)
        binds = ", ".join(v.render() for v in process.binds)
        return f"({match}; {binds}).{_pretty_operand(process.cont)}"
    if isinstance(process, Decrypt):
        match = ", ".join(format_term(t) for t in process.match)
        binds = ", ".join(v.render() for v in process.binds)
        return (
            f"decrypt {format_term(process.subject)} as "
            f"{{{match}; {binds}}}:{format_term(process.key)} "
            f"[at {format_point(process.at)} orig {format_point_set(process.orig)}] "
            f"in {_pretty_operand(process.cont)}"
        )
    raise TypeError(f"not a process: {process!r}")


def _pretty_operand(process: Process) -> str:
    if isinstance(process, Par):
        return f"({pretty(process)})"
    return pretty(process)
