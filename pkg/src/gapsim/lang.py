"""Logical language: predicates, literals, GAP rules, programs, and grounding.

Predicates have arity 1 or 2.  Terms are either constants (plain strings,
lowercase or numeric by convention) or variables (capitalised names wrapped
in :class:`Var`).  A GAP rule derives an annotated head literal from a
conjunction of annotated body literals after a delay of ``delay`` timesteps.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Optional, Protocol, Sequence

from .lattice import BOTTOM, Interval, leq, negate
from .lattice import sup as lat_sup


class Var(NamedTuple):
    name: str

    def __str__(self) -> str:
        return self.name


Term = object  # Var or str constant


def is_var(term) -> bool:
    return isinstance(term, Var)


@dataclass(frozen=True)
class Predicate:
    name: str
    arity: int

    def __post_init__(self):
        if self.arity not in (1, 2):
            raise ValueError(f"predicate {self.name}: arity must be 1 or 2, got {self.arity}")


class Literal(NamedTuple):
    """A possibly negated atom.  Ground iff every argument is a constant."""

    pred: str
    args: tuple
    negated: bool = False

    def is_ground(self) -> bool:
        return not any(is_var(a) for a in self.args)

    def positive(self) -> "Literal":
        return self if not self.negated else Literal(self.pred, self.args, False)

    def __str__(self) -> str:
        sign = "~" if self.negated else ""
        return f"{sign}{self.pred}({','.join(str(a) for a in self.args)})"


class AnnotatedLiteral(NamedTuple):
    literal: Literal
    bound: Interval

    def __str__(self) -> str:
        return f"{self.literal}:{self.bound}"


@dataclass(frozen=True)
class GapRule:
    """Head literal with annotation, body conjunction, delay, immediate flag.

    ``label`` is the name shown in rule traces; distinct rules may share a
    label (the game program uses one label for several per-direction
    variants) while ``id`` stays unique within a program.
    """

    id: str
    head: AnnotatedLiteral
    body: tuple
    delay: int = 0
    immediate: bool = False
    label: Optional[str] = None

    def __post_init__(self):
        if self.head.literal.negated:
            # one storage home per atom: a negated head is the positive
            # literal with the complemented bound (negating once here keeps
            # satisfaction checks free of float drift from double negation)
            object.__setattr__(
                self,
                "head",
                AnnotatedLiteral(self.head.literal.positive(), negate(self.head.bound)),
            )
        if self.delay < 0:
            raise ValueError(f"rule {self.id}: delay must be >= 0")
        if self.immediate and self.delay != 0:
            raise ValueError(f"rule {self.id}: immediate rules must have delay 0")
        seen = set()
        for ann in self.body:
            if ann.literal in seen:
                raise ValueError(f"rule {self.id}: duplicate body literal {ann.literal}")
            seen.add(ann.literal)
        object.__setattr__(self, "body", tuple(self.body))

    @property
    def trace_label(self) -> str:
        return self.label if self.label is not None else self.id

    def is_fact(self) -> bool:
        return not self.body

    def variables(self) -> list:
        out = []
        for ann in (self.head, *self.body):
            for a in ann.literal.args:
                if is_var(a) and a not in out:
                    out.append(a)
        return out


@dataclass
class KnowledgeGraph:
    """Constants as nodes plus labelled directed edges between them."""

    nodes: set = field(default_factory=set)
    edges: set = field(default_factory=set)  # (src, dst, pred_name)

    def add_node(self, node: str) -> None:
        self.nodes.add(node)

    def add_edge(self, src: str, dst: str, pred: str) -> None:
        if src not in self.nodes or dst not in self.nodes:
            missing = src if src not in self.nodes else dst
            raise ValueError(f"edge endpoint {missing!r} is not a declared node")
        self.edges.add((src, dst, pred))


@dataclass
class Program:
    """A finite set of GAP rules over a knowledge graph with timed facts."""

    rules: Sequence[GapRule] = ()
    graph: KnowledgeGraph = field(default_factory=KnowledgeGraph)
    facts: Sequence[tuple] = ()  # (AnnotatedLiteral, timepoint)
    horizon: int = 0
    volatile: frozenset = frozenset()  # predicate names reset at step boundaries
    static: frozenset = frozenset()  # predicate names whose facts are timeless

    def __post_init__(self):
        self.rules = tuple(self.rules)
        self.facts = tuple(self.facts)
        ids = set()
        for rule in self.rules:
            if rule.id in ids:
                raise ValueError(f"duplicate rule id {rule.id!r}")
            ids.add(rule.id)
        arities = {}
        for lit in self._all_literals():
            prev = arities.setdefault(lit.pred, len(lit.args))
            if prev != len(lit.args):
                raise ValueError(
                    f"predicate {lit.pred!r} used with arities {prev} and {len(lit.args)}"
                )
            if len(lit.args) not in (1, 2):
                raise ValueError(f"predicate {lit.pred!r}: arity must be 1 or 2")
        for ann, t in self.facts:
            if not ann.literal.is_ground():
                raise ValueError(f"fact {ann} is not ground")
            if not (0 <= t <= self.horizon):
                raise ValueError(f"fact {ann} at t={t} outside horizon 0..{self.horizon}")

    def _all_literals(self):
        for rule in self.rules:
            yield rule.head.literal
            for ann in rule.body:
                yield ann.literal
        for ann, _ in self.facts:
            yield ann.literal
        for _, _, pred in self.graph.edges:
            # edges are 2-ary by construction; surface them for arity checks
            yield Literal(pred, ("", ""))

    def constants(self) -> list:
        """The operational constant universe: graph nodes plus fact/rule constants."""
        seen = dict.fromkeys(sorted(self.graph.nodes))
        for rule in self.rules:
            for ann in (rule.head, *rule.body):
                for a in ann.literal.args:
                    if not is_var(a):
                        seen.setdefault(a)
        for ann, _ in self.facts:
            for a in ann.literal.args:
                seen.setdefault(a)
        return list(seen)


class BoundView(Protocol):
    """Read access to literal bounds at one timepoint, used by grounding."""

    def read(self, lit: Literal) -> Interval: ...

    def entries(self, pred: str) -> Iterable[tuple]: ...

    def constants(self) -> Sequence[str]: ...


def satisfies(view: BoundView, ann: AnnotatedLiteral) -> bool:
    """Def of satisfaction: the view's bound must refine the demanded bound."""
    return leq(ann.bound, view.read(ann.literal))


def _match(pattern: tuple, args: tuple, sub: dict) -> Optional[dict]:
    out = sub
    for p, a in zip(pattern, args):
        if is_var(p):
            bound = out.get(p)
            if bound is None:
                if out is sub:
                    out = dict(sub)
                out[p] = a
            elif bound != a:
                return None
        elif p != a:
            return None
    return out


def substitutions(rule: GapRule, view: BoundView) -> list:
    """All substitutions making every body literal satisfied in ``view``.

    Clause-by-clause left-to-right join: each body literal narrows the
    candidate substitutions.  Candidates for a literal come from the stored
    entries of its (positive) predicate; a literal annotated with the bottom
    element constrains nothing and ranges over the whole constant universe.
    The result is sorted for deterministic downstream iteration.
    """
    subs = [{}]
    for ann in rule.body:
        lit, demanded = ann.literal, ann.bound
        pattern = lit.args
        next_subs = []
        for sub in subs:
            concrete = tuple(sub.get(a, a) if is_var(a) else a for a in pattern)
            free = [a for a in concrete if is_var(a)]
            if not free:
                if leq(demanded, view.read(Literal(lit.pred, concrete, lit.negated))):
                    next_subs.append(sub)
                continue
            if demanded == BOTTOM:
                # anything satisfies bottom: enumerate the constant universe
                universe = view.constants()
                stack = [sub]
                for var in dict.fromkeys(free):
                    expanded = []
                    for s in stack:
                        for c in universe:
                            ns = dict(s)
                            ns[var] = c
                            expanded.append(ns)
                    stack = expanded
                next_subs.extend(stack)
                continue
            for args in view.entries(lit.pred):
                if len(args) != len(pattern):
                    continue
                cand = _match(concrete, args, sub)
                if cand is None:
                    continue
                if leq(demanded, view.read(Literal(lit.pred, args, lit.negated))):
                    next_subs.append(cand if cand is not sub else dict(sub))
        subs = next_subs
        if not subs:
            return []
    # variables not bound by the body (head-only) range over the universe:
    # a ground instance exists for every constant choice
    unbound = [v for v in rule.variables() if v not in subs[0]]
    if unbound:
        universe = view.constants()
        if not universe:
            return []
        for var in unbound:
            expanded = []
            for s in subs:
                for c in universe:
                    ns = dict(s)
                    ns[var] = c
                    expanded.append(ns)
            subs = expanded
    # deduplicate (bottom-annotated repeats) and order deterministically
    uniq = {tuple(sorted((v.name, c) for v, c in s.items())): s for s in subs}
    return [uniq[k] for k in sorted(uniq)]


def substitute(lit: Literal, sub: dict) -> Literal:
    return Literal(
        lit.pred,
        tuple(sub.get(a, a) if is_var(a) else a for a in lit.args),
        lit.negated,
    )


def ground(rule: GapRule, graph: KnowledgeGraph, view: BoundView, t: int) -> list:
    """Ground instances of ``rule`` whose bodies are satisfied in ``view`` at t.

    ``view`` must present bounds as of timepoint ``t`` (see
    ``Interpretation.at``); the graph's edges are part of the view.  Returns
    fully ground rules in deterministic order.
    """
    out = []
    for sub in substitutions(rule, view):
        head = AnnotatedLiteral(substitute(rule.head.literal, sub), rule.head.bound)
        # substitution may collapse distinct body literals onto one ground
        # literal; the conjunction of their demands is their least upper
        # bound (mu1 and mu2 both refine I iff sup(mu1,mu2) does)
        merged: dict = {}
        for a in rule.body:
            lit = substitute(a.literal, sub)
            prev = merged.get(lit)
            merged[lit] = a.bound if prev is None else lat_sup((prev, a.bound))
        body = tuple(AnnotatedLiteral(lit, bound) for lit, bound in merged.items())
        grounded = GapRule(rule.id, head, body, rule.delay, rule.immediate, rule.label)
        if not grounded.head.literal.is_ground():
            # head variable not bound by the body: skip (unsafe rule instance)
            continue
        out.append(grounded)
    return out
