"""Fixpoint inference and the per-timestep episode driver.

Two evaluation styles share the rule language:

* the pure fixpoint operator (`gamma`, `fixpoint`, `cascade_immediate`)
  revises the whole timeline at once and only tightens bounds (least upper
  bound merges, consistency checked);

* the episode driver steps through time the way the game uses it.  Each
  timestep starts as a fresh frontier seeded from the previous one, so a
  rule landing a retraction may move a bound down the lattice across the
  step boundary; within one phase, repeated writes to the same literal are
  merged via sup and conflicts fail fast.

Driver phase order per timestep t: seed the frontier from t-1 with volatile
predicates dropped, apply effects scheduled to land at t, cascade immediate
rules, inject this step's action facts, cascade again, then evaluate
delayed rules against the settled frontier to schedule their effects.
Landings are applied, and rules examined, in program declaration order;
within a step a rule is re-examined only when a predicate of its body was
written during that step.

The driver compiles each rule's body into an indexed join plan (bound
arguments become dictionary lookups, free arguments iterate the store's
currently-true index).  Rules using negated body literals or bottom
annotations on open variables fall back to the generic grounding in
`lang.substitutions`, which is also the reference implementation the pure
operators use.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

from .lattice import BOTTOM, TRUE, InconsistencyError, Interval, negate, sup
from .interp import Interpretation, _subject
from .lang import (
    GapRule,
    Literal,
    Program,
    ground,
    is_var,
    satisfies,
    substitute,
    substitutions,
)


@dataclass
class FixpointReport:
    iterations: int = 0
    changed: int = 0
    consistent: bool = True


def init_interpretation(program: Program, static_preds=None) -> Interpretation:
    """Fresh interpretation: graph edges as timeless [1,1] bounds, facts applied.

    Facts on predicates declared static are timeless as well.  Every fact
    application is traced with rule "-".
    """
    if static_preds is None:
        static_preds = program.static
    interp = Interpretation(program.horizon, universe=program.constants())
    for src, dst, pred in sorted(program.graph.edges):
        interp.set_static(pred, (src, dst), TRUE)
    for ann, t in program.facts:
        lit, bound = ann.literal, ann.bound
        if lit.negated:
            lit, bound = lit.positive(), negate(bound)
        if lit.pred in static_preds:
            interp.set_static(lit.pred, lit.args, bound, record_t=t)
        else:
            interp.tighten(lit, t, bound, "-")
    return interp


def gamma(program: Program, interp: Interpretation) -> tuple:
    """One application of the fixpoint operator over every (literal, t) pair.

    Fires every ground rule instance whose body is satisfied at t - delay
    against the *input* interpretation, then joins all head annotations in.
    Returns (interp, report); the interpretation is updated in place.
    """
    firings = []
    for rule in program.rules:
        for s in range(0, program.horizon - rule.delay + 1):
            view = interp.at(s)
            for sub in substitutions(rule, view):
                head = substitute(rule.head.literal, sub)
                if not head.is_ground():
                    continue
                firings.append((head, s + rule.delay, rule.head.bound, rule.trace_label))
    changed = 0
    for head, t, bound, label in firings:
        old, new = interp.tighten(head, t, bound, label)
        if new != old:
            changed += 1
    return interp, FixpointReport(iterations=1, changed=changed)


def fixpoint(program: Program, interp: Interpretation) -> tuple:
    """Iterate gamma to quiescence; the result satisfies every rule."""
    report = FixpointReport()
    while True:
        _, step = gamma(program, interp)
        report.iterations += 1
        report.changed += step.changed
        if step.changed == 0:
            return interp, report


def cascade_immediate(program: Program, interp: Interpretation, t: int) -> Interpretation:
    """Apply immediate rules at timestep t until quiescence.

    Two delay-0 rules can feed each other within the same timestep; bounds
    only move up a finite lattice, so this terminates.
    """
    interp._check_t(t)
    immediate = [r for r in program.rules if r.immediate]
    while True:
        changed = 0
        for rule in immediate:
            view = interp.at(t)
            for sub in substitutions(rule, view):
                head = substitute(rule.head.literal, sub)
                if not head.is_ground():
                    continue
                old, new = interp.tighten(head, t, rule.head.bound, rule.trace_label)
                if new != old:
                    changed += 1
        if changed == 0:
            return interp


def check_satisfaction(program: Program, interp: Interpretation) -> bool:
    """Rule satisfaction check: every satisfied body implies a satisfied head."""
    for rule in program.rules:
        for s in range(0, program.horizon - rule.delay + 1):
            view = interp.at(s)
            for inst in ground(rule, program.graph, view, s):
                if not satisfies(interp.at(s + rule.delay), inst.head):
                    return False
    return True


def export_trace(records) -> str:
    """Render trace records as CSV text, one row per change in change order."""
    lines = ["t,subject,label,old_bound,new_bound,rule"]
    for r in records:
        lines.append(f"{r.t},{r.subject},{r.label},{r.old},{r.new},{r.rule}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# compiled rule plans
# ---------------------------------------------------------------------------

_CHECK1, _ITER1, _CHECK2, _ITER2, _ITER_REV, _ITER_BOTH = range(6)


class _Plan:
    """Indexed left-to-right join for one rule body.

    Compiled once per rule: each body literal becomes a step that either
    checks a fully-bound literal or iterates candidates for its free
    variable(s).  Iteration uses the [1,1] index when the literal demands
    exactly [1,1] (the overwhelmingly common case); other demands scan the
    predicate's stored entries.  Candidates are verified against the
    authoritative read so dynamic writes shadow static bounds correctly.
    """

    __slots__ = ("rule", "ok", "steps", "nslots", "head_pred", "head_args", "head_bound",
                 "body_preds", "delay", "label")

    def __init__(self, rule: GapRule):
        self.rule = rule
        self.delay = rule.delay
        self.label = rule.trace_label
        self.body_preds = frozenset(ann.literal.pred for ann in rule.body)
        self.ok = True
        slots: dict = {}
        steps = []
        for ann in rule.body:
            lit, bound = ann.literal, ann.bound
            if lit.negated:
                self.ok = False
                break
            srcs = []
            fresh = []
            for arg in lit.args:
                if is_var(arg):
                    if arg in slots:
                        srcs.append((True, slots[arg]))
                    else:
                        fresh.append(len(srcs))
                        srcs.append((None, None))  # placeholder, filled below
                else:
                    srcs.append((False, arg))
            if bound == BOTTOM and fresh:
                self.ok = False  # unconstrained enumeration: generic path
                break
            if len(fresh) == 1 and len(lit.args) == 2 and lit.args[0] == lit.args[1]:
                self.ok = False  # diagonal patterns go through the generic path
                break
            true_demand = bound == TRUE
            if len(lit.args) == 1:
                if fresh:
                    slot = slots.setdefault(lit.args[0], len(slots))
                    steps.append((_ITER1, lit.pred, slot, bound, true_demand))
                else:
                    steps.append((_CHECK1, lit.pred, srcs[0], bound))
            else:
                if not fresh:
                    steps.append((_CHECK2, lit.pred, srcs[0], srcs[1], bound))
                elif len(fresh) == 2:
                    s0 = slots.setdefault(lit.args[0], len(slots))
                    s1 = slots.setdefault(lit.args[1], len(slots))
                    steps.append((_ITER_BOTH, lit.pred, s0, s1, bound, true_demand))
                elif fresh[0] == 1:
                    slot = slots.setdefault(lit.args[1], len(slots))
                    steps.append((_ITER2, lit.pred, srcs[0], slot, bound, true_demand))
                else:
                    slot = slots.setdefault(lit.args[0], len(slots))
                    steps.append((_ITER_REV, lit.pred, slot, srcs[1], bound, true_demand))
        head = rule.head.literal
        head_bound = rule.head.bound
        if head.negated:
            head = head.positive()
            head_bound = negate(head_bound)
        if self.ok:
            for arg in head.args:
                if is_var(arg) and arg not in slots:
                    self.ok = False  # head variable unbound by the body
        self.steps = steps
        self.nslots = len(slots)
        self.head_pred = head.pred
        self.head_args = tuple(
            (True, slots[a]) if is_var(a) else (False, a) for a in head.args
        ) if self.ok else ()
        self.head_bound = head_bound

    def heads(self, interp: Interpretation, t: int):
        """Ground head argument tuples for every satisfied body match at t."""
        if not self.ok:
            view = interp.at(t)
            return [
                substitute(self.rule.head.literal, sub).args
                for sub in substitutions(self.rule, view)
                if substitute(self.rule.head.literal, sub).is_ground()
            ]

        dyn = interp.slices[t]
        stat = interp.static
        dtrue1, strue1 = interp.true1[t], interp.static_true1
        dtrue2, strue2 = interp.true2[t], interp.static_true2
        srev2 = interp.static_rev2

        def get1(pred, a0):
            by = dyn.get(pred)
            if by is not None:
                v = by.get(a0)
                if v is not None:
                    return v
            by = stat.get(pred)
            if by is not None:
                v = by.get(a0)
                if v is not None:
                    return v
            return BOTTOM

        def get2(pred, a0, a1):
            by = dyn.get(pred)
            if by is not None:
                inner = by.get(a0)
                if inner is not None:
                    v = inner.get(a1)
                    if v is not None:
                        return v
            by = stat.get(pred)
            if by is not None:
                inner = by.get(a0)
                if inner is not None:
                    v = inner.get(a1)
                    if v is not None:
                        return v
            return BOTTOM

        subs = [[None] * self.nslots]
        for step in self.steps:
            if not subs:
                return []
            kind = step[0]
            nxt = []
            if kind == _CHECK1:
                _, pred, (isv, val), bound = step
                lo, hi = bound
                for sub in subs:
                    a0 = sub[val] if isv else val
                    v = get1(pred, a0)
                    if lo <= v[0] and v[1] <= hi:
                        nxt.append(sub)
            elif kind == _CHECK2:
                _, pred, (v0, x0), (v1, x1), bound = step
                lo, hi = bound
                for sub in subs:
                    a0 = sub[x0] if v0 else x0
                    a1 = sub[x1] if v1 else x1
                    v = get2(pred, a0, a1)
                    if lo <= v[0] and v[1] <= hi:
                        nxt.append(sub)
            elif kind == _ITER1:
                _, pred, slot, bound, true_demand = step
                lo, hi = bound
                dpred = dyn.get(pred)
                if true_demand:
                    # index membership implies the stored bound is [1,1];
                    # static candidates can be shadowed by dynamic writes
                    cands = dtrue1.get(pred, ())
                    scands = strue1.get(pred, ())
                    for sub in subs:
                        for a0 in cands:
                            ns = sub.copy()
                            ns[slot] = a0
                            nxt.append(ns)
                        for a0 in scands:
                            if a0 in cands or (dpred is not None and a0 in dpred):
                                continue
                            ns = sub.copy()
                            ns[slot] = a0
                            nxt.append(ns)
                else:
                    cands = dpred if dpred is not None else ()
                    scands = stat.get(pred, ())
                    for sub in subs:
                        for a0 in cands:
                            v = cands[a0]
                            if lo <= v[0] and v[1] <= hi:
                                ns = sub.copy()
                                ns[slot] = a0
                                nxt.append(ns)
                        for a0 in scands:
                            if a0 in cands:
                                continue
                            v = scands[a0]
                            if lo <= v[0] and v[1] <= hi:
                                ns = sub.copy()
                                ns[slot] = a0
                                nxt.append(ns)
            elif kind == _ITER2:
                _, pred, (v0, x0), slot, bound, true_demand = step
                lo, hi = bound
                dpred = dyn.get(pred)
                spred = stat.get(pred)
                dt = dtrue2.get(pred)
                st = strue2.get(pred)
                for sub in subs:
                    a0 = sub[x0] if v0 else x0
                    dinner = dpred.get(a0) if dpred else None
                    if true_demand:
                        cands = dt.get(a0, ()) if dt else ()
                        scands = st.get(a0, ()) if st else ()
                        for a1 in cands:
                            ns = sub.copy()
                            ns[slot] = a1
                            nxt.append(ns)
                        for a1 in scands:
                            if a1 in cands or (dinner is not None and a1 in dinner):
                                continue
                            ns = sub.copy()
                            ns[slot] = a1
                            nxt.append(ns)
                    else:
                        sinner = spred.get(a0) if spred else None
                        if dinner:
                            for a1, v in dinner.items():
                                if lo <= v[0] and v[1] <= hi:
                                    ns = sub.copy()
                                    ns[slot] = a1
                                    nxt.append(ns)
                        if sinner:
                            for a1, v in sinner.items():
                                if dinner is not None and a1 in dinner:
                                    continue
                                if lo <= v[0] and v[1] <= hi:
                                    ns = sub.copy()
                                    ns[slot] = a1
                                    nxt.append(ns)
            elif kind == _ITER_REV:
                _, pred, slot, (v1, x1), bound, true_demand = step
                lo, hi = bound
                srev = srev2.get(pred)
                dpred = dyn.get(pred)
                for sub in subs:
                    a1 = sub[x1] if v1 else x1
                    seen = set()
                    if dpred:
                        # dynamic layer has no reverse index: scan first args
                        for a0, inner in dpred.items():
                            if a1 in inner:
                                seen.add(a0)
                                v = get2(pred, a0, a1)
                                if lo <= v[0] and v[1] <= hi:
                                    ns = sub.copy()
                                    ns[slot] = a0
                                    nxt.append(ns)
                    if srev:
                        for a0 in srev.get(a1, ()):
                            if a0 in seen:
                                continue
                            v = get2(pred, a0, a1)
                            if lo <= v[0] and v[1] <= hi:
                                ns = sub.copy()
                                ns[slot] = a0
                                nxt.append(ns)
            else:  # _ITER_BOTH
                _, pred, s0, s1, bound, true_demand = step
                lo, hi = bound
                pairs = []
                dpred = dyn.get(pred)
                spred = stat.get(pred)
                if dpred:
                    for a0, inner in dpred.items():
                        for a1 in inner:
                            pairs.append((a0, a1))
                if spred:
                    for a0, inner in spred.items():
                        for a1 in inner:
                            if not dpred or a0 not in dpred or a1 not in dpred[a0]:
                                pairs.append((a0, a1))
                for sub in subs:
                    for a0, a1 in pairs:
                        v = get2(pred, a0, a1)
                        if lo <= v[0] and v[1] <= hi:
                            ns = sub.copy()
                            ns[s0] = a0
                            ns[s1] = a1
                            nxt.append(ns)
            subs = nxt
        out = []
        for sub in subs:
            out.append(tuple(sub[x] if isv else x for isv, x in self.head_args))
        return out


# ---------------------------------------------------------------------------
# episode driver
# ---------------------------------------------------------------------------


class EpisodeDriver:
    """Steps a program through time, producing the explainable trace.

    One driver owns one interpretation; drivers are independent and may run
    in parallel.  The caller supplies injected action facts per step and an
    optional gate called between the landing cascade and action injection
    (the game uses it to stop on a win before processing further actions).
    """

    def __init__(self, program: Program):
        self.program = program
        self.interp = init_interpretation(program)
        self.t = -1  # timestep of the last completed step
        self.pending: dict = {}  # land_t -> [(pred, args, bound, label)]
        self._immediate = [_Plan(r) for r in program.rules if r.immediate]
        self._plain_zero = [
            _Plan(r) for r in program.rules if r.delay == 0 and not r.immediate
        ]
        self._delayed = [_Plan(r) for r in program.rules if r.delay >= 1]
        # predicates asserted by initial facts and edges: the first step's
        # landing cascade must consider them fresh
        self._initial_dirty = {rec.label for rec in self.interp.records}
        self._initial_dirty |= set(self.interp.static)

    # -- frontier write helpers ---------------------------------------------

    def _write(self, pred: str, args: tuple, t: int, bound: Interval, label: str,
               touched: dict) -> bool:
        interp = self.interp
        cur = interp._get(pred, args, t)
        if cur == bound:
            return False
        if args in touched.get(pred, ()):  # merge repeated same-phase writes
            try:
                merged = sup((cur, bound))
            except InconsistencyError as exc:
                raise InconsistencyError(
                    f"rules disagree on {pred}{args} at t={t}: have {cur}, "
                    f"{label} asserts {bound}",
                    subject=_subject(args),
                    t=t,
                    rule=label,
                ) from exc
            if merged == cur:
                return False
            interp._store(pred, args, t, cur, merged, label)
            return True
        touched.setdefault(pred, set()).add(args)
        interp._store(pred, args, t, cur, bound, label)
        return True

    # -- phases ---------------------------------------------------------------

    def _cascade(self, t: int, dirty: set, touched: dict) -> set:
        """Fire immediate rules to quiescence; returns predicates written.

        Rules are swept in declaration order against the live frontier, so a
        write made early in a sweep can enable a later rule within the same
        sweep; sweeps repeat until one completes without a write.
        """
        written: set = set()
        interp = self.interp
        prev = set(dirty)
        while prev:
            cur: set = set()
            for plan in self._immediate:
                if not (plan.body_preds & prev) and not (plan.body_preds & cur):
                    continue
                for args in plan.heads(interp, t):
                    if self._write(plan.head_pred, args, t, plan.head_bound, plan.label,
                                   touched):
                        cur.add(plan.head_pred)
            written |= cur
            prev = cur
        return written

    def _land(self, t: int) -> set:
        touched: dict = {}
        written: set = set()
        for pred, args, bound, label in self.pending.pop(t, ()):
            if self._write(pred, args, t, bound, label, touched):
                written.add(pred)
        return written

    def _schedule(self, t: int, dirty: set) -> None:
        horizon = self.program.horizon
        for plan in self._delayed:
            if not (plan.body_preds & dirty):
                continue
            land_t = t + plan.delay
            if land_t > horizon:
                continue
            for args in plan.heads(self.interp, t):
                self.pending.setdefault(land_t, []).append(
                    (plan.head_pred, args, plan.head_bound, plan.label)
                )

    def run_step(self, injections=(), action_phase: Optional[Callable] = None) -> bool:
        """Advance one timestep; returns True when the step was halted.

        ``injections`` is a sequence of AnnotatedLiterals asserted as facts
        for this step (traced with rule "-").  If ``action_phase`` is given
        it is called after scheduled effects have landed and cascaded, and
        must return the injection list for this step or None to halt the
        step (no injections, no scheduling); the game uses it to pick and
        price actions against the settled mid-step state.
        """
        t = self.t + 1
        self.interp._check_t(t)
        self.interp.carry_forward(t, self.program.volatile)
        step_written = self._land(t)
        dirty = set(step_written)
        if t == 0:
            dirty |= self._initial_dirty
        step_written |= self._cascade(t, dirty, {})
        halted = False
        if action_phase is not None:
            injections = action_phase(self)
            halted = injections is None
        if not halted:
            touched: dict = {}
            injected: set = set()
            for ann in injections:
                if self.interp.assign(ann.literal, t, ann.bound, "-"):
                    injected.add(ann.literal.positive().pred)
            step_written |= injected
            step_written |= self._cascade(t, injected, touched)
            if self._plain_zero:
                # non-immediate delay-0 rules: applied once against the
                # settled state, no re-search within the step
                batch = [
                    (plan, plan.heads(self.interp, t)) for plan in self._plain_zero
                ]
                for plan, heads in batch:
                    for args in heads:
                        if self._write(plan.head_pred, args, t, plan.head_bound,
                                       plan.label, touched):
                            step_written.add(plan.head_pred)
            self._schedule(t, step_written)
        self.t = t
        return halted

    # -- reading convenience ---------------------------------------------------

    def read(self, lit: Literal) -> Interval:
        return self.interp.read(lit, max(self.t, 0))

    def view(self):
        return self.interp.at(max(self.t, 0))

    @property
    def records(self):
        return self.interp.records
