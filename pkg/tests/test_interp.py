import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gapsim.engine import EpisodeDriver
from gapsim.interp import Interpretation
from gapsim.lang import AnnotatedLiteral, Literal, Program, KnowledgeGraph
from gapsim.lattice import BOTTOM, FALSE, TRUE, InconsistencyError, Interval, leq, negate


def lit(pred, *args, negated=False):
    return Literal(pred, tuple(args), negated)


def test_read_defaults_to_bottom():
    interp = Interpretation(horizon=3)
    assert interp.read(lit("p", "a"), 0) == BOTTOM


def test_negation_coupling():
    interp = Interpretation(horizon=3)
    interp.tighten(lit("p", "a"), 3, TRUE)
    assert interp.read(lit("p", "a", negated=True), 3) == FALSE
    # writing through a negated literal lands on the positive home
    interp.tighten(lit("q", "a", negated=True), 1, TRUE)
    assert interp.read(lit("q", "a"), 1) == FALSE


def test_out_of_horizon_read():
    interp = Interpretation(horizon=2)
    with pytest.raises(ValueError):
        interp.read(lit("p", "a"), 3)


def test_tighten_examples():
    interp = Interpretation(horizon=2)
    old, new = interp.tighten(lit("p", "a"), 1, TRUE)
    assert (old, new) == (BOTTOM, TRUE)
    old, new = interp.tighten(lit("p", "a"), 1, BOTTOM)  # bottom absorbed
    assert (old, new) == (TRUE, TRUE)
    assert len(interp.records) == 1  # no record for the no-change tighten
    with pytest.raises(InconsistencyError) as exc:
        interp.tighten(lit("p", "a"), 1, FALSE)
    assert exc.value.t == 1 and exc.value.subject == "a"


def test_carry_forward_from_driver_tick():
    program = Program(
        graph=KnowledgeGraph({"a"}, set()),
        facts=((AnnotatedLiteral(lit("p", "a"), TRUE), 3),),
        horizon=5,
    )
    driver = EpisodeDriver(program)
    for _ in range(5):
        driver.run_step()
    assert driver.interp.read(lit("p", "a"), 4) == TRUE
    assert driver.interp.read(lit("p", "a"), 2) == BOTTOM  # history untouched


def test_volatile_predicates_dropped_at_carry():
    program = Program(
        graph=KnowledgeGraph({"a"}, set()),
        facts=(),
        horizon=3,
        volatile=frozenset({"act"}),
    )
    driver = EpisodeDriver(program)
    driver.run_step(injections=[AnnotatedLiteral(lit("act", "a"), TRUE)])
    assert driver.interp.read(lit("act", "a"), 0) == TRUE
    driver.run_step()
    assert driver.interp.read(lit("act", "a"), 1) == BOTTOM


def test_leq_interp_examples():
    a = Interpretation(horizon=2)
    b = Interpretation(horizon=2)
    assert a.leq_interp(b) and b.leq_interp(a)
    b.tighten(lit("p", "x"), 0, TRUE)
    assert a.leq_interp(b)
    assert not b.leq_interp(a)
    assert b.leq_interp(b)
    c = Interpretation(horizon=3)
    with pytest.raises(ValueError):
        a.leq_interp(c)


def test_leq_interp_matches_pairwise_bruteforce():
    rng = np.random.default_rng(3)
    bounds = [TRUE, FALSE, BOTTOM, Interval(0.1, 1.0), Interval(0.3, 0.6)]
    for _ in range(50):
        a = Interpretation(horizon=3)
        b = Interpretation(horizon=3)
        keys = []
        for store in (a, b):
            for _ in range(int(rng.integers(1, 6))):
                key = (lit("p", f"c{rng.integers(3)}"), int(rng.integers(4)))
                try:
                    store.tighten(key[0], key[1], bounds[int(rng.integers(len(bounds)))])
                except InconsistencyError:
                    pass
                keys.append(key)
        expected = all(leq(a.read(k, t), b.read(k, t)) for k, t in keys)
        assert a.leq_interp(b) == expected


def test_monotonicity_of_tighten_sequences():
    rng = np.random.default_rng(11)
    bounds = [TRUE, FALSE, Interval(0.1, 1.0), Interval(0.2, 0.8), BOTTOM]
    for _ in range(30):
        interp = Interpretation(horizon=4)
        snapshots = [Interpretation(horizon=4)]
        for _ in range(12):
            target = lit("p", f"c{rng.integers(3)}")
            t = int(rng.integers(5))
            bound = bounds[int(rng.integers(len(bounds)))]
            before = Interpretation(horizon=4)
            for tt in range(5):
                for pred_args in interp.entries("p", tt):
                    before.tighten(Literal("p", pred_args), tt, interp._get("p", pred_args, tt))
            try:
                interp.tighten(target, t, bound)
            except InconsistencyError:
                continue
            assert before.leq_interp(interp)


def test_sparse_matches_dense_oracle():
    rng = np.random.default_rng(5)
    horizon = 50
    consts = [f"c{i}" for i in range(10)]
    bounds = [TRUE, FALSE, Interval(0.1, 1.0), Interval(0.25, 0.75)]
    interp = Interpretation(horizon=horizon)
    dense = {}
    for _ in range(400):
        target = lit("p", consts[int(rng.integers(len(consts)))])
        t = int(rng.integers(horizon + 1))
        bound = bounds[int(rng.integers(len(bounds)))]
        key = (target.args, t)
        cur = dense.get(key, (0.0, 1.0))
        lo, hi = max(cur[0], bound.lower), min(cur[1], bound.upper)
        try:
            interp.tighten(target, t, bound)
        except InconsistencyError:
            assert lo > hi
            continue
        assert lo <= hi
        dense[key] = (lo, hi)
    for args in [(c,) for c in consts]:
        for t in range(horizon + 1):
            expected = dense.get((args, t), (0.0, 1.0))
            assert tuple(interp.read(Literal("p", args), t)) == expected


@given(st.lists(st.tuples(st.integers(0, 2), st.integers(0, 3),
                          st.sampled_from([0, 1, 2])), max_size=20))
@settings(max_examples=60, deadline=None)
def test_coupling_holds_for_every_stored_literal(ops):
    bounds = [TRUE, FALSE, Interval(0.1, 1.0)]
    interp = Interpretation(horizon=3)
    for const, t, b in ops:
        try:
            interp.tighten(lit("p", f"c{const}"), t, bounds[b])
        except InconsistencyError:
            pass
    for const in range(3):
        for t in range(4):
            pos = interp.read(lit("p", f"c{const}"), t)
            neg = interp.read(lit("p", f"c{const}", negated=True), t)
            assert neg == negate(pos)
