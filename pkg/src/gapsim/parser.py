"""Text formats for rules (.gap), graphs and facts (.kg), and canonical printing.

One statement per line, ``#`` starts a comment.  Line types:

    rule <id> [immediate] dt <n> [label <name>]: <head> <- <lit>, <lit>, ...
    node <id>
    edge <src> <dst> <pred>
    fact <ground-literal>:<interval> @ <t>
    horizon <n>
    volatile <pred>
    static <pred>

A literal is ``[~]pred(term{,term})``; terms starting with an uppercase
letter are variables, everything else is a constant.  Annotations are
intervals ``[l,u]`` with decimal reals in [0,1].  Canonical printing uses
the shortest float repr (``[1.0,1.0]``); ``print -> parse -> print`` is
byte-stable.
"""

from __future__ import annotations

import re
from typing import NamedTuple, Optional

from .lattice import Interval
from .lang import AnnotatedLiteral, GapRule, KnowledgeGraph, Literal, Program, Var


class SourceSpan(NamedTuple):
    file: str
    line: int
    column: int  # 1-based

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.column}"


class ParseError(Exception):
    def __init__(self, message: str, span: SourceSpan):
        super().__init__(f"{span}: {message}")
        self.span = span


_WS = re.compile(r"[ \t]*")
_NAME = re.compile(r"[A-Za-z0-9_][A-Za-z0-9_.-]*")
_INT = re.compile(r"[0-9]+")
_REAL = re.compile(r"[0-9]+(?:\.[0-9]+)?(?:[eE][-+]?[0-9]+)?")


class _Scanner:
    def __init__(self, text: str, file: str, line_no: int):
        self.text = text
        self.file = file
        self.line_no = line_no
        self.pos = 0

    def span(self, pos: Optional[int] = None) -> SourceSpan:
        return SourceSpan(self.file, self.line_no, (self.pos if pos is None else pos) + 1)

    def error(self, message: str, pos: Optional[int] = None) -> ParseError:
        return ParseError(message, self.span(pos))

    def skip_ws(self) -> None:
        self.pos = _WS.match(self.text, self.pos).end()

    def at_end(self) -> bool:
        self.skip_ws()
        return self.pos >= len(self.text)

    def try_literal(self, token: str) -> bool:
        self.skip_ws()
        if self.text.startswith(token, self.pos):
            self.pos += len(token)
            return True
        return False

    def expect(self, token: str, what: Optional[str] = None) -> None:
        if not self.try_literal(token):
            raise self.error(f"expected {what or token!r}")

    def name(self, what: str = "name") -> str:
        self.skip_ws()
        m = _NAME.match(self.text, self.pos)
        if not m:
            raise self.error(f"expected {what}")
        self.pos = m.end()
        return m.group()

    def integer(self, what: str = "nonnegative integer") -> int:
        self.skip_ws()
        m = _INT.match(self.text, self.pos)
        if not m:
            raise self.error(f"expected {what}")
        self.pos = m.end()
        return int(m.group())

    def real(self) -> float:
        self.skip_ws()
        m = _REAL.match(self.text, self.pos)
        if not m:
            raise self.error("expected a decimal number")
        self.pos = m.end()
        return float(m.group())


def _parse_term(sc: _Scanner):
    start = sc.pos
    tok = sc.name("term")
    if tok[0].isupper():
        return Var(tok)
    return tok


def _parse_literal(sc: _Scanner) -> Literal:
    negated = sc.try_literal("~")
    pred_pos = sc.pos
    pred = sc.name("predicate name")
    if pred[0].isupper():
        raise sc.error("predicate names must not start with an uppercase letter", pred_pos)
    sc.expect("(")
    args = [_parse_term(sc)]
    if sc.try_literal(","):
        args.append(_parse_term(sc))
    sc.expect(")")
    if len(args) not in (1, 2):
        raise sc.error("predicates take 1 or 2 arguments", pred_pos)
    return Literal(pred, tuple(args), negated)


def _parse_interval(sc: _Scanner) -> Interval:
    sc.skip_ws()
    start = sc.pos
    sc.expect("[", "annotation interval")
    lo = sc.real()
    sc.expect(",")
    hi = sc.real()
    sc.expect("]")
    if not (0.0 <= lo <= 1.0 and 0.0 <= hi <= 1.0 and lo <= hi):
        raise sc.error(f"annotation [{lo},{hi}] outside [0,1]", start)
    return Interval(lo, hi)


def _parse_annotated(sc: _Scanner) -> AnnotatedLiteral:
    lit = _parse_literal(sc)
    sc.expect(":", "':' before annotation")
    return AnnotatedLiteral(lit, _parse_interval(sc))


def _parse_rule_line(sc: _Scanner) -> GapRule:
    id_pos = sc.pos
    rule_id = sc.name("rule id")
    immediate = sc.try_literal("immediate")
    sc.expect("dt", "'dt <n>'")
    delay_pos = sc.pos
    sc.skip_ws()
    if sc.text.startswith("-", sc.pos):
        raise sc.error("rule delay must be >= 0", sc.pos)
    delay = sc.integer("rule delay")
    label = None
    if sc.try_literal("label"):
        label = sc.name("trace label")
    sc.expect(":", "':' after rule header")
    head = _parse_annotated(sc)
    sc.expect("<-")
    body = []
    if not sc.at_end():
        body.append(_parse_annotated(sc))
        while sc.try_literal(","):
            body.append(_parse_annotated(sc))
    if not sc.at_end():
        raise sc.error("trailing input after rule")
    try:
        return GapRule(rule_id, head, tuple(body), delay, immediate, label)
    except ValueError as exc:
        raise ParseError(str(exc), sc.span(id_pos)) from exc


class _Builder:
    def __init__(self, file: str):
        self.file = file
        self.rules: list[GapRule] = []
        self.rule_ids: dict[str, SourceSpan] = {}
        self.graph = KnowledgeGraph()
        self.facts: list[tuple] = []
        self.horizon: Optional[int] = None
        self.volatile: set[str] = set()
        self.static: set[str] = set()
        self.arities: dict[str, int] = {}

    def check_arity(self, lit: Literal, sc: _Scanner, pos: int) -> None:
        prev = self.arities.setdefault(lit.pred, len(lit.args))
        if prev != len(lit.args):
            raise ParseError(
                f"predicate {lit.pred!r} previously used with arity {prev}",
                sc.span(pos),
            )

    def feed(self, sc: _Scanner) -> None:
        kw_pos = sc.pos
        keyword = sc.name("statement keyword")
        if keyword == "rule":
            rule_pos = sc.pos
            rule = _parse_rule_line(sc)
            if rule.id in self.rule_ids:
                raise ParseError(f"duplicate rule id {rule.id!r}", sc.span(rule_pos))
            self.rule_ids[rule.id] = sc.span(rule_pos)
            for ann in (rule.head, *rule.body):
                self.check_arity(ann.literal, sc, rule_pos)
            self.rules.append(rule)
        elif keyword == "node":
            self.graph.add_node(sc.name("node id"))
        elif keyword == "edge":
            src_pos = sc.pos
            src = sc.name("edge source")
            dst = sc.name("edge target")
            pred = sc.name("edge predicate")
            self.check_arity(Literal(pred, (src, dst)), sc, src_pos)
            try:
                self.graph.add_edge(src, dst, pred)
            except ValueError as exc:
                raise ParseError(str(exc), sc.span(src_pos)) from exc
        elif keyword == "fact":
            fact_pos = sc.pos
            ann = _parse_annotated(sc)
            if not ann.literal.is_ground():
                raise ParseError("facts must be ground", sc.span(fact_pos))
            self.check_arity(ann.literal, sc, fact_pos)
            sc.expect("@", "'@ <t>'")
            t = sc.integer("fact timepoint")
            self.facts.append((ann, t))
        elif keyword == "horizon":
            self.horizon = sc.integer("horizon")
        elif keyword == "volatile":
            self.volatile.add(sc.name("predicate name"))
        elif keyword == "static":
            self.static.add(sc.name("predicate name"))
        else:
            raise ParseError(f"unknown statement {keyword!r}", sc.span(kw_pos))
        if not sc.at_end():
            raise sc.error("trailing input after statement")

    def build(self) -> Program:
        horizon = self.horizon
        if horizon is None:
            horizon = max((t for _, t in self.facts), default=0)
        for ann, t in self.facts:
            if t > horizon:
                raise ParseError(
                    f"fact at t={t} beyond horizon {horizon}",
                    SourceSpan(self.file, 1, 1),
                )
        return Program(
            rules=tuple(self.rules),
            graph=self.graph,
            facts=tuple(self.facts),
            horizon=horizon,
            volatile=frozenset(self.volatile),
            static=frozenset(self.static),
        )


def _lines(text: str):
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        if line.strip():
            yield line_no, line


def parse_program(text: str, file: str = "<string>") -> Program:
    """Parse any mix of rule, graph, fact, and directive lines into a Program."""
    builder = _Builder(file)
    for line_no, line in _lines(text):
        builder.feed(_Scanner(line, file, line_no))
    return builder.build()


def parse_graph(text: str, file: str = "<string>") -> KnowledgeGraph:
    """Parse node/edge lines into a KnowledgeGraph."""
    builder = _Builder(file)
    for line_no, line in _lines(text):
        sc = _Scanner(line, file, line_no)
        head = sc.text[sc.pos:].lstrip().split(" ", 1)[0]
        if head not in ("node", "edge"):
            raise ParseError(f"expected a node or edge line, got {head!r}", sc.span())
        builder.feed(sc)
    return builder.graph


def merge_programs(a: Program, b: Program) -> Program:
    """Combine rules/graph/facts of two parsed files (e.g. a .gap and a .kg)."""
    graph = KnowledgeGraph(set(a.graph.nodes), set(a.graph.edges))
    graph.nodes |= b.graph.nodes
    graph.edges |= b.graph.edges
    return Program(
        rules=tuple(a.rules) + tuple(b.rules),
        graph=graph,
        facts=tuple(a.facts) + tuple(b.facts),
        horizon=max(a.horizon, b.horizon),
        volatile=a.volatile | b.volatile,
        static=a.static | b.static,
    )


# ---------------------------------------------------------------------------
# canonical printing
# ---------------------------------------------------------------------------


def format_literal(lit: Literal) -> str:
    return str(lit)


def format_annotated(ann: AnnotatedLiteral) -> str:
    return f"{ann.literal}:{ann.bound}"


def format_rule(rule: GapRule) -> str:
    parts = ["rule", rule.id]
    if rule.immediate:
        parts.append("immediate")
    parts.append(f"dt {rule.delay}")
    if rule.label is not None and rule.label != rule.id:
        parts.append(f"label {rule.label}")
    head = format_annotated(rule.head)
    body = ", ".join(format_annotated(b) for b in rule.body)
    return f"{' '.join(parts)}: {head} <- {body}".rstrip()


def print_rules(program: Program) -> str:
    """Canonical .gap text: directives then rules in declaration order."""
    lines = []
    for pred in sorted(program.volatile):
        lines.append(f"volatile {pred}")
    for pred in sorted(program.static):
        lines.append(f"static {pred}")
    for rule in program.rules:
        lines.append(format_rule(rule))
    return "\n".join(lines) + ("\n" if lines else "")


def print_kg(program: Program) -> str:
    """Canonical .kg text: horizon, sorted nodes and edges, facts in order."""
    lines = [f"horizon {program.horizon}"]
    for node in sorted(program.graph.nodes):
        lines.append(f"node {node}")
    for src, dst, pred in sorted(program.graph.edges):
        lines.append(f"edge {src} {dst} {pred}")
    for ann, t in program.facts:
        lines.append(f"fact {format_annotated(ann)} @ {t}")
    return "\n".join(lines) + "\n"


def print_program(program: Program) -> str:
    return print_rules(program) + print_kg(program)
