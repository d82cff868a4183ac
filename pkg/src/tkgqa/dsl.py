"""tqdsl: a tiny sandboxed temporal-query language.

Line-oriented programs over a temporal knowledge graph.  A program is a
sequence of statements and must end with an expression, whose value is the
program result:

    fact(E1, R1, E2, 2000, 2005)          # declare a fact (structuring path)
    let xs = facts(E1, R1, *)             # bind a pipeline result
    facts(E1, R1, *) |> sort(start, asc) |> objects

Sources are ``facts(s|*, r|*, o|*)`` selections; stages are ``sort(start|end,
asc|desc)``, ``filter_at(t)``, ``filter_overlap(a, b)``, ``filter_within(a,
b)``, ``filter_dur(op, n)``, ``count``, ``objects``, ``subjects``,
``durations`` and ``merge_total``.  ``call name(args)`` invokes a registered
solver function with positional arguments in schema order ("*" for a
wildcard, ``[a, b]`` for intervals, ``(s, r, o)`` for triplets).

There are no loops, no recursion, no I/O and no string operations, so every
accepted program terminates structurally; an execution step budget is
enforced anyway.  Solver domain errors (no matching facts, ambiguous
episodes, bad arguments) become :class:`ErrorValue` results rather than
exceptions, so callers can score them as wrong answers.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .answers import Answer, FunctionCall
from .errors import (
    AmbiguousEpisodeError,
    ArgumentTypeError,
    ArityError,
    DslSyntaxError,
    FactLimitExceededError,
    NoMatchingFactsError,
    OccurrenceOutOfRangeError,
    RuntimeTypeError,
    StepLimitExceededError,
    UnknownIdentifierError,
)
from .graph import Fact, Interval, TKG
from .primitives import DurationPredicate, TimeFilter, merge_intervals, sort_facts
from .solvers import dispatch, function_names, function_spec

__all__ = [
    "Limits",
    "Program",
    "ErrorValue",
    "ExecutionResult",
    "parse",
    "execute",
    "pretty_print",
    "extract_fenced_source",
]


# ---------------------------------------------------------------------------
# AST


@dataclass(frozen=True)
class Token:
    text: str


@dataclass(frozen=True)
class IntLit:
    value: int


@dataclass(frozen=True)
class Star:
    pass


@dataclass(frozen=True)
class TupleLit:
    items: tuple


@dataclass(frozen=True)
class ListLit:
    items: tuple


@dataclass(frozen=True)
class Source:
    s: str | None
    r: str | None
    o: str | None


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Stage:
    name: str
    args: tuple


@dataclass(frozen=True)
class Pipe:
    head: "Source | Var | Call"
    stages: tuple


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple


@dataclass(frozen=True)
class FactDecl:
    s: str
    r: str
    o: str
    t0: int
    t1: int


@dataclass(frozen=True)
class Let:
    name: str
    expr: "Pipe"


@dataclass(frozen=True)
class ExprStmt:
    expr: "Pipe"


@dataclass(frozen=True)
class Program:
    statements: tuple

    @property
    def fact_decls(self) -> tuple:
        return tuple(st for st in self.statements if isinstance(st, FactDecl))


# ---------------------------------------------------------------------------
# tokenizer

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<pipe>\|>)
  | (?P<int>-?\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<cmp>(<=|>=|==|<|>|=))
  | (?P<punct>[(),\[\]*])
    """,
    re.VERBOSE,
)


@dataclass
class _Tok:
    kind: str  # pipe | int | ident | cmp | punct | eol
    text: str
    col: int


def _tokenize(line: str, line_no: int) -> list[_Tok]:
    toks = []
    pos = 0
    while pos < len(line):
        m = _TOKEN_RE.match(line, pos)
        if m is None:
            raise DslSyntaxError(f"unexpected character {line[pos]!r}", line_no, pos + 1)
        kind = m.lastgroup
        if kind != "ws":
            toks.append(_Tok(kind, m.group(), pos + 1))
        pos = m.end()
    toks.append(_Tok("eol", "", len(line) + 1))
    return toks


# ---------------------------------------------------------------------------
# parser

STAGE_ARITIES = {
    "sort": 2,
    "filter_at": 1,
    "filter_overlap": 2,
    "filter_within": 2,
    "filter_dur": 2,
    "count": 0,
    "objects": 0,
    "subjects": 0,
    "durations": 0,
    "merge_total": 0,
}

_KEYWORDS = {"fact", "facts", "let", "call"}


class _LineParser:
    def __init__(self, toks: list[_Tok], line_no: int, known_vars: set[str]):
        self.toks = toks
        self.i = 0
        self.line_no = line_no
        self.vars = known_vars

    def peek(self) -> _Tok:
        return self.toks[self.i]

    def next(self) -> _Tok:
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def fail(self, message: str, tok: _Tok | None = None):
        tok = tok or self.peek()
        raise DslSyntaxError(message, self.line_no, tok.col)

    def expect(self, kind: str, text: str | None = None) -> _Tok:
        tok = self.peek()
        if tok.kind != kind or (text is not None and tok.text != text):
            want = text or kind
            self.fail(f"expected {want!r}, found {tok.text or 'end of line'!r}")
        return self.next()

    # -- statements --------------------------------------------------------

    def statement(self):
        tok = self.peek()
        if tok.kind == "ident" and tok.text == "fact":
            return self.fact_decl()
        if tok.kind == "ident" and tok.text == "let":
            return self.let_binding()
        return ExprStmt(self.expression())

    def fact_decl(self) -> FactDecl:
        self.expect("ident", "fact")
        self.expect("punct", "(")
        s = self.expect("ident").text
        self.expect("punct", ",")
        r = self.expect("ident").text
        self.expect("punct", ",")
        o = self.expect("ident").text
        self.expect("punct", ",")
        t0 = int(self.expect("int").text)
        self.expect("punct", ",")
        t1 = int(self.expect("int").text)
        self.expect("punct", ")")
        self.expect("eol")
        return FactDecl(s, r, o, t0, t1)

    def let_binding(self) -> Let:
        self.expect("ident", "let")
        name_tok = self.expect("ident")
        if name_tok.text in _KEYWORDS:
            self.fail(f"{name_tok.text!r} is a reserved word", name_tok)
        self.expect("cmp", "=")
        expr = self.expression()
        self.vars.add(name_tok.text)
        return Let(name_tok.text, expr)

    def expression(self) -> Pipe:
        head = self.unit()
        stages = []
        while self.peek().kind == "pipe":
            self.next()
            stages.append(self.stage())
        self.expect("eol")
        return Pipe(head, tuple(stages))

    def unit(self):
        tok = self.peek()
        if tok.kind != "ident":
            self.fail(f"expected an expression, found {tok.text or 'end of line'!r}")
        if tok.text == "facts":
            return self.source()
        if tok.text == "call":
            return self.call()
        name = self.next()
        if name.text not in self.vars:
            raise UnknownIdentifierError(name.text, self.line_no, name.col)
        return Var(name.text)

    def source(self) -> Source:
        self.expect("ident", "facts")
        open_tok = self.expect("punct", "(")
        parts = []
        for i in range(3):
            tok = self.peek()
            if tok.kind == "punct" and tok.text == "*":
                self.next()
                parts.append(None)
            elif tok.kind == "ident":
                parts.append(self.next().text)
            else:
                self.fail("expected an id or '*'")
            if i < 2:
                self.expect("punct", ",")
        close = self.peek()
        if not (close.kind == "punct" and close.text == ")"):
            raise ArityError("facts takes exactly 3 arguments", self.line_no, close.col)
        self.next()
        del open_tok
        return Source(*parts)

    def stage(self) -> Stage:
        name_tok = self.expect("ident")
        name = name_tok.text
        if name not in STAGE_ARITIES:
            raise UnknownIdentifierError(name, self.line_no, name_tok.col)
        args: list = []
        if self.peek().kind == "punct" and self.peek().text == "(":
            self.next()
            if not (self.peek().kind == "punct" and self.peek().text == ")"):
                args.append(self.stage_arg())
                while self.peek().kind == "punct" and self.peek().text == ",":
                    self.next()
                    args.append(self.stage_arg())
            self.expect("punct", ")")
        if len(args) != STAGE_ARITIES[name]:
            raise ArityError(
                f"{name} takes {STAGE_ARITIES[name]} argument(s), got {len(args)}",
                self.line_no,
                name_tok.col,
            )
        return Stage(name, tuple(args))

    def stage_arg(self):
        tok = self.peek()
        if tok.kind == "int":
            return IntLit(int(self.next().text))
        if tok.kind == "ident":
            return Token(self.next().text)
        if tok.kind == "cmp":
            return Token(self.next().text)
        self.fail(f"bad stage argument {tok.text!r}")

    def call(self) -> Call:
        self.expect("ident", "call")
        name_tok = self.expect("ident")
        if name_tok.text not in function_names():
            raise UnknownIdentifierError(name_tok.text, self.line_no, name_tok.col)
        self.expect("punct", "(")
        args: list = []
        if not (self.peek().kind == "punct" and self.peek().text == ")"):
            args.append(self.value())
            while self.peek().kind == "punct" and self.peek().text == ",":
                self.next()
                args.append(self.value())
        self.expect("punct", ")")
        return Call(name_tok.text, tuple(args))

    def value(self):
        tok = self.peek()
        if tok.kind == "int":
            return IntLit(int(self.next().text))
        if tok.kind == "ident":
            return Token(self.next().text)
        if tok.kind == "cmp":
            return Token(self.next().text)
        if tok.kind == "punct" and tok.text == "*":
            self.next()
            return Star()
        if tok.kind == "punct" and tok.text == "(":
            self.next()
            items = [self.value()]
            while self.peek().kind == "punct" and self.peek().text == ",":
                self.next()
                items.append(self.value())
            self.expect("punct", ")")
            return TupleLit(tuple(items))
        if tok.kind == "punct" and tok.text == "[":
            self.next()
            items = []
            if not (self.peek().kind == "punct" and self.peek().text == "]"):
                items.append(self.value())
                while self.peek().kind == "punct" and self.peek().text == ",":
                    self.next()
                    items.append(self.value())
            self.expect("punct", "]")
            return ListLit(tuple(items))
        self.fail(f"bad value {tok.text or 'end of line'!r}")


def parse(source: str) -> Program:
    """Parse tqdsl source; raises on the first error with line/column."""
    statements = []
    known_vars: set[str] = set()
    last_line = 0
    for line_no, line in enumerate(source.splitlines(), start=1):
        if not line.strip():
            continue
        last_line = line_no
        parser = _LineParser(_tokenize(line, line_no), line_no, known_vars)
        statements.append(parser.statement())
    if not statements:
        raise DslSyntaxError("empty program", max(last_line, 1), 1)
    if not isinstance(statements[-1], ExprStmt):
        raise DslSyntaxError("program must end with an expression", last_line, 1)
    return Program(tuple(statements))


# ---------------------------------------------------------------------------
# pretty printer


def _print_value(v) -> str:
    if isinstance(v, IntLit):
        return str(v.value)
    if isinstance(v, Token):
        return v.text
    if isinstance(v, Star):
        return "*"
    if isinstance(v, TupleLit):
        return "(" + ", ".join(_print_value(x) for x in v.items) + ")"
    if isinstance(v, ListLit):
        return "[" + ", ".join(_print_value(x) for x in v.items) + "]"
    raise TypeError(v)


def _print_expr(expr: Pipe) -> str:
    head = expr.head
    if isinstance(head, Source):
        text = f"facts({head.s or '*'}, {head.r or '*'}, {head.o or '*'})"
    elif isinstance(head, Var):
        text = head.name
    else:
        text = f"call {head.func}(" + ", ".join(_print_value(a) for a in head.args) + ")"
    for stage in expr.stages:
        if stage.args:
            text += f" |> {stage.name}(" + ", ".join(_print_value(a) for a in stage.args) + ")"
        else:
            text += f" |> {stage.name}"
    return text


def pretty_print(program: Program) -> str:
    """Canonical source text; parsing it back yields an equal AST."""
    lines = []
    for st in program.statements:
        if isinstance(st, FactDecl):
            lines.append(f"fact({st.s}, {st.r}, {st.o}, {st.t0}, {st.t1})")
        elif isinstance(st, Let):
            lines.append(f"let {st.name} = {_print_expr(st.expr)}")
        else:
            lines.append(_print_expr(st.expr))
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# interpreter


@dataclass(frozen=True)
class Limits:
    max_statements: int = 10_000
    max_steps: int = 1_000_000
    max_facts: int = 100_000


@dataclass(frozen=True)
class ErrorValue:
    """A solver domain error surfaced as a program value."""

    error: str
    message: str


@dataclass
class ExecutionResult:
    value: object
    graph: TKG
    steps: int = 0


class _FactList(list):
    pass


class _EntityList(list):
    pass


class _IntList(list):
    pass


_SOLVER_DOMAIN_ERRORS = (
    NoMatchingFactsError,
    AmbiguousEpisodeError,
    OccurrenceOutOfRangeError,
    ArgumentTypeError,
)


class _Interpreter:
    def __init__(self, graph: TKG, limits: Limits):
        self.graph = graph
        self.limits = limits
        self.steps = 0
        self.env: dict[str, object] = {}

    def tick(self):
        self.steps += 1
        if self.steps > self.limits.max_steps:
            raise StepLimitExceededError(f"step budget {self.limits.max_steps} exceeded")

    def eval_expr(self, expr: Pipe):
        value = self.eval_unit(expr.head)
        for stage in expr.stages:
            if isinstance(value, ErrorValue):
                return value  # short-circuit past remaining stages
            value = self.eval_stage(stage, value)
        return value

    def eval_unit(self, unit):
        self.tick()
        if isinstance(unit, Source):
            return _FactList(self.graph.query(unit.s, unit.r, unit.o))
        if isinstance(unit, Var):
            return self.env[unit.name]
        if isinstance(unit, Call):
            return self.eval_call(unit)
        raise TypeError(unit)

    def eval_call(self, call: Call):
        spec = function_spec(call.func)
        params = spec.use_guide
        if len(call.args) > len(params):
            raise RuntimeTypeError(
                f"{call.func} takes at most {len(params)} arguments, got {len(call.args)}"
            )
        arguments = {}
        for param, value in zip(params, call.args):
            if isinstance(value, Star):
                continue
            arguments[param.name] = _value_to_python(value)
        try:
            return dispatch(self.graph, FunctionCall(call.func, arguments))
        except _SOLVER_DOMAIN_ERRORS as exc:
            return ErrorValue(type(exc).__name__, str(exc))

    def eval_stage(self, stage: Stage, value):
        self.tick()
        name = stage.name
        if name in ("sort", "filter_at", "filter_overlap", "filter_within", "filter_dur",
                    "count", "objects", "subjects", "durations", "merge_total"):
            if not isinstance(value, _FactList):
                raise RuntimeTypeError(f"{name} expects a fact list, got {_type_name(value)}")
        if name == "sort":
            endpoint, order = (a.text for a in stage.args)
            if endpoint not in ("start", "end") or order not in ("asc", "desc"):
                raise RuntimeTypeError(f"sort arguments must be (start|end, asc|desc)")
            return _FactList(sort_facts(value, endpoint=endpoint, descending=order == "desc"))
        if name == "filter_at":
            t = _int_arg(stage, 0)
            return _FactList(f for f in value if TimeFilter.at_point(t).matches(f.t0, f.t1))
        if name == "filter_overlap":
            a, b = _int_arg(stage, 0), _int_arg(stage, 1)
            flt = TimeFilter.overlaps(a, b)
            return _FactList(f for f in value if flt.matches(f.t0, f.t1))
        if name == "filter_within":
            a, b = _int_arg(stage, 0), _int_arg(stage, 1)
            flt = TimeFilter.contained_in(a, b)
            return _FactList(f for f in value if flt.matches(f.t0, f.t1))
        if name == "filter_dur":
            op = stage.args[0].text if isinstance(stage.args[0], Token) else None
            if op is None:
                raise RuntimeTypeError("filter_dur expects a comparator and an integer")
            try:
                pred = DurationPredicate(op, _int_arg(stage, 1))
            except ValueError as exc:
                raise RuntimeTypeError(str(exc)) from exc
            return _FactList(f for f in value if pred.matches(f.duration))
        if name == "count":
            return len(value)
        if name == "objects":
            return _EntityList(f.o for f in value)
        if name == "subjects":
            return _EntityList(f.s for f in value)
        if name == "durations":
            return _IntList(f.duration for f in value)
        if name == "merge_total":
            _, total = merge_intervals(f.interval for f in value)
            return total
        raise RuntimeTypeError(f"unknown stage {name!r}")


def _type_name(value) -> str:
    if isinstance(value, _FactList):
        return "fact_list"
    if isinstance(value, _EntityList):
        return "entity_list"
    if isinstance(value, _IntList):
        return "int_list"
    if isinstance(value, Answer):
        return f"answer:{value.kind}"
    if isinstance(value, ErrorValue):
        return f"error:{value.error}"
    return type(value).__name__


def _int_arg(stage: Stage, index: int) -> int:
    arg = stage.args[index]
    if not isinstance(arg, IntLit):
        raise RuntimeTypeError(f"{stage.name} argument {index + 1} must be an integer")
    return arg.value


def _value_to_python(value):
    if isinstance(value, IntLit):
        return value.value
    if isinstance(value, Token):
        return value.text
    if isinstance(value, Star):
        return "*"
    if isinstance(value, (TupleLit, ListLit)):
        return [_value_to_python(v) for v in value.items]
    raise TypeError(value)


def execute(program: Program, g: TKG | None = None, limits: Limits | None = None) -> ExecutionResult:
    """Run a program under resource limits.

    Programs with fact declarations build their own graph and must not be
    given one; all other programs require ``g``.  Every source, stage and
    call evaluation consumes one step.
    """
    limits = limits or Limits()
    decls = program.fact_decls
    if decls and g is not None:
        raise RuntimeTypeError("program declares facts; do not pass a graph")
    if not decls and g is None:
        raise RuntimeTypeError("program declares no facts; a graph is required")
    if len(program.statements) > limits.max_statements:
        raise StepLimitExceededError(
            f"statement budget {limits.max_statements} exceeded ({len(program.statements)} statements)"
        )
    if len(decls) > limits.max_facts:
        raise FactLimitExceededError(f"fact budget {limits.max_facts} exceeded ({len(decls)} declared)")
    if decls:
        g = TKG(Fact(d.s, d.r, d.o, d.t0, d.t1) for d in decls)
    assert g is not None
    interp = _Interpreter(g, limits)
    result: object = None
    for st in program.statements:
        if isinstance(st, FactDecl):
            continue
        if isinstance(st, Let):
            interp.env[st.name] = interp.eval_expr(st.expr)
        else:
            result = interp.eval_expr(st.expr)
    return ExecutionResult(value=result, graph=g, steps=interp.steps)


def coerce_result(value, answer_kind: str) -> Answer | None:
    """Coerce a program result to a tagged answer of the given kind, if possible."""
    if isinstance(value, Answer):
        return value if value.kind == answer_kind or answer_kind == "time" else None
    try:
        if answer_kind == "entity_list" and isinstance(value, list):
            return Answer.entity_list(value)
        if answer_kind == "entity" and isinstance(value, str):
            return Answer.entity(value)
        if answer_kind == "boolean" and isinstance(value, bool):
            return Answer.boolean(value)
        if answer_kind in ("count", "duration", "time_point") and isinstance(value, int):
            return Answer(answer_kind, value)
        if answer_kind == "time_interval" and isinstance(value, (tuple, Interval)):
            return Answer.time_interval(tuple(value))
    except (ValueError, TypeError):
        return None
    return None


_FENCE_RE = re.compile(r"```tqdsl\s*\n(.*?)```", re.DOTALL)


def extract_fenced_source(reply: str) -> str | None:
    """First fenced block tagged ``tqdsl`` in an LLM reply, or None."""
    m = _FENCE_RE.search(reply)
    return m.group(1) if m else None
