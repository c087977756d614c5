import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from reqspec.errors import FormulaSyntaxError, MissingSlot, UnknownTag, UnknownVariable
from reqspec.sastl import (
    UNBOUNDED,
    UNDEFINED,
    Aggregate,
    Always,
    And,
    Atom,
    Count,
    Eventually,
    Everywhere,
    Location,
    Not,
    Somewhere,
    SpatialDomain,
    Tag,
    TagTrue,
    TimeInterval,
    Trace,
    evaluate_formula,
    parse_formula,
    render_formula,
    render_template_sentence,
)
from reqspec.slots import DEFAULTED, FILLED, Slot, SlotSet

from .util import (
    random_formula,
    random_trace,
    reference_evaluate,
)


def _single_loc_trace(xs, var="x"):
    times = tuple(float(t) for t in range(len(xs)))
    locations = {"a": Location(frozenset({"school"}), (0.0, 0.0))}
    values = {(t, "a", var): float(v) for t, v in zip(times, xs)}
    return Trace(times, locations, values, (var,))


class TestParseExamples:
    def test_vending_vehicles(self):
        f = parse_formula(
            "everywhere(city_block)(always[0,inf)(vending_vehicles <= 4))"
        )
        expected = Everywhere(
            SpatialDomain(0.0, 0.0, Tag("city_block")),
            Always(UNBOUNDED, Atom("vending_vehicles", "<=", 4.0)),
        )
        assert f == expected

    def test_taxi(self):
        f = parse_formula("always[7,8](number_of_taxi < 10)")
        assert f == Always(TimeInterval(7.0, 8.0), Atom("number_of_taxi", "<", 10.0))

    def test_bare_atom(self):
        assert parse_formula("x < 0") == Atom("x", "<", 0.0)

    def test_syntax_error_reports_position(self):
        with pytest.raises(FormulaSyntaxError) as exc:
            parse_formula("always[7,8](number_of_taxi < )")
        assert exc.value.position == 29

    def test_unbalanced_paren(self):
        with pytest.raises(FormulaSyntaxError):
            parse_formula("(x < 0")

    def test_garbage(self):
        with pytest.raises(FormulaSyntaxError):
            parse_formula("@@")


class TestRenderExamples:
    def test_atom(self):
        assert render_formula(Atom("x", "<", 0.0)) == "x < 0"

    def test_golf_cart(self):
        f = Everywhere(
            SpatialDomain(0.0, 0.0, Tag("golf_cart_path")),
            Always(UNBOUNDED, Atom("golf_cart_speed", "<", 15.0, "miles/hour")),
        )
        assert (
            render_formula(f)
            == "everywhere(golf_cart_path)(always[0,inf)(golf_cart_speed < 15 miles/hour))"
        )

    def test_negation(self):
        assert render_formula(Not(Atom("x", "<", 0.0))) == "!(x < 0)"


class TestTemplateSentence:
    def _taxi_slots(self):
        return SlotSet(
            entity=Slot("number", None, FILLED),
            quantifier=Slot("taxi", None, FILLED),
            location=Slot("within 200 meters of all the schools", None, FILLED),
            time=Slot("between 7 am to 8 am", None, FILLED),
            condition=Slot("less than 10", None, FILLED),
        )

    def test_taxi(self):
        assert render_template_sentence(self._taxi_slots()) == (
            "[number] of [taxi] should be [<] [10] "
            "[between 7:00 to 8:00] [within 200 meters of all the schools]"
        )

    def test_default_time_renders_always(self):
        slots = self._taxi_slots().with_slot("time", Slot("", None, DEFAULTED))
        assert "[always]" in render_template_sentence(slots)

    def test_empty_location_raises(self):
        slots = self._taxi_slots().with_slot("location", Slot())
        with pytest.raises(MissingSlot):
            render_template_sentence(slots)


class TestEvaluateExamples:
    def test_always_all_satisfy(self):
        trace = _single_loc_trace([1, 2, 3])
        f = Always(UNBOUNDED, Atom("x", "<", 5.0))
        assert evaluate_formula(f, trace, 0.0, "a") is True

    def test_everywhere_matches_count_derivation(self):
        locations = {
            "a": Location(frozenset({"school"}), (0.0, 0.0)),
            "b": Location(frozenset({"school"}), (1.0, 0.0)),
        }
        values = {(0.0, "a", "x"): 1.0, (0.0, "b", "x"): 7.0}
        trace = Trace((0.0,), locations, values, ("x",))
        dom = SpatialDomain(0.0, 5.0, Tag("school"))
        ew = Everywhere(dom, Atom("x", "<", 5.0))
        assert evaluate_formula(ew, trace, 0.0, "a") is False
        direct = Count("min", dom, Atom("x", "<", 5.0), ">", 0.0)
        assert evaluate_formula(direct, trace, 0.0, "a") is False

    def test_empty_aggregate_is_undefined(self):
        trace = _single_loc_trace([1])
        f = Aggregate("avg", SpatialDomain(3.0, 4.0, TagTrue()), "x", "<", 5.0)
        assert evaluate_formula(f, trace, 0.0, "a") is UNDEFINED

    def test_unknown_variable(self):
        trace = _single_loc_trace([1])
        with pytest.raises(UnknownVariable):
            evaluate_formula(Atom("zz", "<", 5.0), trace, 0.0, "a")

    def test_unknown_tag(self):
        trace = _single_loc_trace([1])
        f = Somewhere(SpatialDomain(0.0, 1.0, Tag("harbor")), Atom("x", "<", 5.0))
        with pytest.raises(UnknownTag):
            evaluate_formula(f, trace, 0.0, "a")


class TestUndefined:
    def test_is_not_boolable(self):
        with pytest.raises(TypeError):
            bool(UNDEFINED)

    def test_missing_value_atom(self):
        trace = Trace(
            (0.0,),
            {"a": Location(frozenset(), (0.0, 0.0))},
            {(0.0, "a", "x"): None},
            ("x",),
        )
        assert evaluate_formula(Atom("x", "<", 5.0), trace, 0.0, "a") is UNDEFINED


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 10**9))
def test_round_trip_random_formulas(seed):
    rng = random.Random(seed)
    f = random_formula(rng, depth=6)
    text = render_formula(f)
    assert parse_formula(text) == f


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 10**9))
def test_evaluator_matches_reference(seed):
    rng = random.Random(seed)
    f = random_formula(rng, depth=4)
    trace = random_trace(rng)
    t0 = rng.choice(trace.times)
    l0 = rng.choice(sorted(trace.locations))
    assert evaluate_formula(f, trace, t0, l0) is reference_evaluate(f, trace, t0, l0)


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10**9))
def test_spatial_derivations(seed):
    rng = random.Random(seed)
    child = random_formula(rng, depth=2)
    dom = SpatialDomain(0.0, rng.choice([1.0, 3.0, 10.0]), TagTrue())
    trace = random_trace(rng)
    t0 = rng.choice(trace.times)
    l0 = rng.choice(sorted(trace.locations))
    ew = evaluate_formula(Everywhere(dom, child), trace, t0, l0)
    ew_count = evaluate_formula(Count("min", dom, child, ">", 0.0), trace, t0, l0)
    assert ew is ew_count
    sw = evaluate_formula(Somewhere(dom, child), trace, t0, l0)
    sw_count = evaluate_formula(Count("max", dom, child, ">", 0.0), trace, t0, l0)
    assert sw is sw_count


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10**9))
def test_temporal_duality_without_missing(seed):
    rng = random.Random(seed)
    child = random_formula(rng, depth=2)
    interval = TimeInterval(0.0, rng.choice([1.0, 2.0, math.inf]))
    trace = random_trace(rng, missing_rate=0.0)
    t0 = rng.choice(trace.times)
    l0 = rng.choice(sorted(trace.locations))
    lhs = evaluate_formula(Always(interval, child), trace, t0, l0)
    rhs = evaluate_formula(Not(Eventually(interval, Not(child))), trace, t0, l0)
    assert lhs is rhs


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10**9))
def test_and_is_commutative(seed):
    rng = random.Random(seed)
    a = random_formula(rng, depth=2)
    b = random_formula(rng, depth=2)
    trace = random_trace(rng)
    t0 = rng.choice(trace.times)
    l0 = rng.choice(sorted(trace.locations))
    assert evaluate_formula(And(a, b), trace, t0, l0) is evaluate_formula(
        And(b, a), trace, t0, l0
    )
