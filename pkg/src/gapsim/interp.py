"""The interpretation store: (ground literal, timepoint) -> interval bound.

Storage is sparse and layered.  Each timepoint owns a slice of assignments;
a static layer holds timeless bounds (graph edges, terrain) consulted at
every timepoint; anything else reads as the bottom element [0,1].  Negative
literals are never stored: reading ``~g`` returns the complement of ``g``'s
bound, so each atom has a single storage home.

Slices nest by first argument (``pred -> a0 -> a1 -> bound`` for binary
predicates) and carry an index of currently-[1,1] entries, which is what
rule evaluation iterates; retracted [0,0] entries stay readable (the trace
shows their old bounds) without costing iteration time.
"""

from __future__ import annotations

from typing import NamedTuple, Optional

from .lattice import BOTTOM, TRUE, InconsistencyError, Interval, leq, negate, sup
from .lang import Literal


class TraceRecord(NamedTuple):
    """One interpretation change: who, when, from what bound to what, and why."""

    t: int
    subject: str
    label: str
    old: Interval
    new: Interval
    rule: str  # rule trace label, or "-" for facts and injected assertions


def subject_of(lit: Literal) -> str:
    if len(lit.args) == 1:
        return str(lit.args[0])
    return "(" + ",".join(str(a) for a in lit.args) + ")"


def _subject(args: tuple) -> str:
    if len(args) == 1:
        return str(args[0])
    return "(" + ",".join(str(a) for a in args) + ")"


class SliceView:
    """Bounds as of one timepoint; the read interface grounding works against."""

    __slots__ = ("interp", "t")

    def __init__(self, interp: "Interpretation", t: int):
        self.interp = interp
        self.t = t

    def read(self, lit: Literal) -> Interval:
        return self.interp.read(lit, self.t)

    def entries(self, pred: str):
        return self.interp.entries(pred, self.t)

    def constants(self):
        return self.interp.universe


class Interpretation:
    def __init__(self, horizon: int, universe=()):
        if horizon < 0:
            raise ValueError("horizon must be >= 0")
        self.horizon = horizon
        self.universe = list(universe)
        # dynamic layer, per timepoint
        # the true* maps index currently-[1,1] entries; they are dicts used
        # as ordered sets so iteration follows insertion order (hash-order
        # iteration would break cross-run determinism of the trace)
        self.slices: list = [dict() for _ in range(horizon + 1)]  # pred -> a0 -> ...
        self.true1: list = [dict() for _ in range(horizon + 1)]  # pred -> {a0: None}
        self.true2: list = [dict() for _ in range(horizon + 1)]  # pred -> a0 -> {a1: None}
        # static layer, timeless
        self.static: dict = {}  # pred -> a0 -> (bound | {a1: bound})
        self.static_true1: dict = {}  # pred -> {a0: None}
        self.static_true2: dict = {}  # pred -> a0 -> {a1: None}
        self.static_rev2: dict = {}  # pred -> a1 -> {a0: None}, [1,1] entries only
        self.arity: dict = {}  # pred -> 1|2
        self.records: list[TraceRecord] = []

    # -- setup -------------------------------------------------------------

    def _check_arity(self, pred: str, n: int) -> None:
        prev = self.arity.setdefault(pred, n)
        if prev != n:
            raise ValueError(f"predicate {pred!r} used with arities {prev} and {n}")

    def set_static(self, pred: str, args: tuple, bound: Interval, record_t: Optional[int] = None,
                   rule: str = "-") -> None:
        """Install a timeless bound; optionally trace it as a change at ``record_t``."""
        self._check_arity(pred, len(args))
        if record_t is not None:
            old = self._get(pred, args, record_t)
            if old != bound:
                self.records.append(TraceRecord(record_t, _subject(args), pred, old, bound, rule))
        if len(args) == 1:
            self.static.setdefault(pred, {})[args[0]] = bound
            if bound == TRUE:
                self.static_true1.setdefault(pred, {})[args[0]] = None
        else:
            a0, a1 = args
            self.static.setdefault(pred, {}).setdefault(a0, {})[a1] = bound
            if bound == TRUE:
                self.static_true2.setdefault(pred, {}).setdefault(a0, {})[a1] = None
                self.static_rev2.setdefault(pred, {}).setdefault(a1, {})[a0] = None

    # -- reading -----------------------------------------------------------

    def _check_t(self, t: int) -> None:
        if not (0 <= t <= self.horizon):
            raise ValueError(f"timepoint {t} outside horizon 0..{self.horizon}")

    def _get(self, pred: str, args: tuple, t: int) -> Interval:
        """Positive-literal bound at t (no negation handling)."""
        if len(args) == 1:
            a0 = args[0]
            by = self.slices[t].get(pred)
            if by is not None:
                v = by.get(a0)
                if v is not None:
                    return v
            by = self.static.get(pred)
            if by is not None:
                v = by.get(a0)
                if v is not None:
                    return v
            return BOTTOM
        a0, a1 = args
        by = self.slices[t].get(pred)
        if by is not None:
            inner = by.get(a0)
            if inner is not None:
                v = inner.get(a1)
                if v is not None:
                    return v
        by = self.static.get(pred)
        if by is not None:
            inner = by.get(a0)
            if inner is not None:
                v = inner.get(a1)
                if v is not None:
                    return v
        return BOTTOM

    def read(self, lit: Literal, t: int) -> Interval:
        self._check_t(t)
        v = self._get(lit.pred, lit.args, t)
        return negate(v) if lit.negated else v

    def entries(self, pred: str, t: int):
        """Argument tuples with a stored bound for ``pred`` at ``t`` (any layer)."""
        self._check_t(t)
        out = {}
        for layer in (self.slices[t], self.static):
            by = layer.get(pred)
            if not by:
                continue
            if self.arity.get(pred) == 1:
                for a0 in by:
                    out.setdefault((a0,), None)
            else:
                for a0, inner in by.items():
                    for a1 in inner:
                        out.setdefault((a0, a1), None)
        return list(out)

    def at(self, t: int) -> SliceView:
        self._check_t(t)
        return SliceView(self, t)

    # -- writing -----------------------------------------------------------

    def _store(self, pred: str, args: tuple, t: int, old: Interval, new: Interval,
               rule: str) -> None:
        self._check_arity(pred, len(args))
        if len(args) == 1:
            a0 = args[0]
            self.slices[t].setdefault(pred, {})[a0] = new
            tset = self.true1[t].setdefault(pred, {})
            if new == TRUE:
                tset[a0] = None
            else:
                tset.pop(a0, None)
        else:
            a0, a1 = args
            self.slices[t].setdefault(pred, {}).setdefault(a0, {})[a1] = new
            tmap = self.true2[t].setdefault(pred, {})
            tset = tmap.setdefault(a0, {})
            if new == TRUE:
                tset[a1] = None
            else:
                tset.pop(a1, None)
        self.records.append(TraceRecord(t, _subject(args), pred, old, new, rule))

    def tighten(self, lit: Literal, t: int, bound: Interval, rule: str = "-"):
        """Join ``bound`` into the current bound; returns (old, new).

        The new bound is the least upper bound of the current and supplied
        bounds, so a sequence of tightens only moves up the lattice.  A
        strict change is appended to the trace.  Raises InconsistencyError
        (annotated with subject, timepoint and rule) if the bounds conflict.
        """
        self._check_t(t)
        pred, args = lit.pred, lit.args
        bound = negate(bound) if lit.negated else bound
        old = self._get(pred, args, t)
        try:
            new = sup((old, bound))
        except InconsistencyError as exc:
            raise InconsistencyError(
                f"inconsistent bound for {lit.positive()} at t={t} via {rule}: "
                f"have {old}, asserted {bound}",
                subject=_subject(args),
                t=t,
                rule=rule,
            ) from exc
        if new != old:
            self._store(pred, args, t, old, new, rule)
        return old, new

    def assign(self, lit: Literal, t: int, bound: Interval, rule: str = "-") -> bool:
        """Overwrite the bound at (lit, t), tracing the change.

        Unlike tighten this may move down the lattice; the episode driver
        uses it for retractions landing across step boundaries and for
        injected action facts.  Returns True when the bound changed.
        """
        self._check_t(t)
        pred, args = lit.pred, lit.args
        bound = negate(bound) if lit.negated else bound
        old = self._get(pred, args, t)
        if old == bound:
            return False
        self._store(pred, args, t, old, bound, rule)
        return True

    def carry_forward(self, t: int, volatile: frozenset = frozenset()) -> None:
        """Seed slice ``t`` from slice ``t-1``, dropping volatile predicates.

        Step boundaries create a fresh frontier: earlier slices are never
        rewritten, which preserves the full change history for the trace.
        """
        self._check_t(t)
        if t == 0:
            return
        arity = self.arity
        cur = self.slices[t]
        for pred, by in self.slices[t - 1].items():
            if pred in volatile or pred in cur:
                continue
            if arity.get(pred) == 1:
                cur[pred] = dict(by)
            else:
                cur[pred] = {a0: dict(inner) for a0, inner in by.items()}
        cur1 = self.true1[t]
        for pred, tset in self.true1[t - 1].items():
            if pred in volatile or pred in cur1:
                continue
            cur1[pred] = dict(tset)
        cur2 = self.true2[t]
        for pred, tmap in self.true2[t - 1].items():
            if pred in volatile or pred in cur2:
                continue
            cur2[pred] = {a0: dict(s) for a0, s in tmap.items()}

    # -- comparison ----------------------------------------------------------

    def leq_interp(self, other: "Interpretation") -> bool:
        """Pointwise lattice order: every bound of self refines into other's."""
        if self.horizon != other.horizon:
            raise ValueError("horizon mismatch")
        if self.static != other.static:
            raise ValueError("interpretations have different static layers")
        for t in range(self.horizon + 1):
            preds = set(self.slices[t]) | set(other.slices[t])
            for pred in preds:
                keys = set()
                for store in (self, other):
                    by = store.slices[t].get(pred)
                    if not by:
                        continue
                    if store.arity.get(pred) == 1:
                        keys.update((a0,) for a0 in by)
                    else:
                        keys.update((a0, a1) for a0, inner in by.items() for a1 in inner)
                for args in keys:
                    if not leq(self._get(pred, args, t), other._get(pred, args, t)):
                        return False
        return True
