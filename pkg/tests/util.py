"""Shared randomized generators and the brute-force SaSTL reference evaluator.

The reference evaluator below is written against the semantics definition
directly (explicit set construction, no shared code with the package
implementation) and is the oracle the fast evaluator is checked against.
"""
import math
import random

from reqspec import sastl
from reqspec.sastl import (
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
    TagNot,
    TagOr,
    TagTrue,
    TimeInterval,
    Trace,
    Until,
)

TAG_ALPHABET = ("residential", "school", "park")
VARIABLES = ("x", "y")


def random_interval(rng):
    lo = rng.choice([0, 0, 1, 2]) + rng.choice([0.0, 0.5])
    if rng.random() < 0.3:
        return TimeInterval(lo, math.inf)
    return TimeInterval(lo, lo + rng.choice([0.0, 0.5, 1, 2, 3]))


def random_prop(rng, depth=2):
    roll = rng.random()
    if depth <= 0 or roll < 0.5:
        return Tag(rng.choice(TAG_ALPHABET)) if rng.random() < 0.8 else TagTrue()
    if roll < 0.75:
        return TagNot(random_prop(rng, depth - 1))
    return TagOr(random_prop(rng, depth - 1), random_prop(rng, depth - 1))


def random_domain(rng):
    if rng.random() < 0.25:
        return SpatialDomain(0.0, 0.0, random_prop(rng))
    d1 = rng.choice([0.0, 0.0, 1.0])
    return SpatialDomain(d1, d1 + rng.choice([1.0, 2.0, 5.0]), random_prop(rng))


def random_constant(rng):
    return rng.choice([-3, -1, 0, 1, 2, 3, 5]) + rng.choice([0.0, 0.5])


def random_atom(rng):
    return Atom(
        rng.choice(VARIABLES),
        rng.choice(sastl.COMPARISONS),
        random_constant(rng),
        rng.choice([None, None, None, "mg/m3", "dB"]),
    )


def random_formula(rng, depth=4):
    if depth <= 0:
        return random_atom(rng)
    kind = rng.randrange(10)
    if kind <= 2:
        return random_atom(rng)
    if kind == 3:
        return Not(random_formula(rng, depth - 1))
    if kind == 4:
        return And(random_formula(rng, depth - 1), random_formula(rng, depth - 1))
    if kind == 5:
        return Always(random_interval(rng), random_formula(rng, depth - 1))
    if kind == 6:
        return Eventually(random_interval(rng), random_formula(rng, depth - 1))
    if kind == 7:
        return Until(
            random_interval(rng),
            random_formula(rng, depth - 1),
            random_formula(rng, depth - 1),
        )
    if kind == 8:
        return Aggregate(
            rng.choice(sastl.AGG_OPS),
            random_domain(rng),
            rng.choice(VARIABLES),
            rng.choice(sastl.COMPARISONS),
            random_constant(rng),
        )
    choice = rng.random()
    if choice < 0.4:
        return Count(
            rng.choice(sastl.AGG_OPS),
            random_domain(rng),
            random_formula(rng, depth - 1),
            rng.choice(sastl.COMPARISONS),
            rng.choice([0.0, 0.5, 1.0, 2.0]),
        )
    cls = Everywhere if choice < 0.7 else Somewhere
    return cls(random_domain(rng), random_formula(rng, depth - 1))


def random_trace(rng, max_times=4, max_locations=5, missing_rate=0.1):
    n_times = rng.randint(1, max_times)
    times = sorted(rng.sample([0.0, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0], n_times))
    n_locs = rng.randint(1, max_locations)
    locations = {}
    for i in range(n_locs):
        # keep every tag in the trace alphabet so domain propositions stay legal
        if i == 0:
            tags = frozenset(TAG_ALPHABET)
        else:
            tags = frozenset(t for t in TAG_ALPHABET if rng.random() < 0.5)
        coord = (float(rng.randint(0, 4)), float(rng.randint(0, 4)))
        locations[f"loc{i}"] = Location(tags, coord)
    values = {}
    for t in times:
        for name in locations:
            for var in VARIABLES:
                if rng.random() < missing_rate:
                    values[(t, name, var)] = None
                else:
                    values[(t, name, var)] = float(rng.randint(-3, 5))
    return Trace(tuple(times), locations, values, VARIABLES)


# ---------------------------------------------------------------------------
# reference evaluator


def _ref_prop(prop, tags):
    if isinstance(prop, TagTrue):
        return True
    if isinstance(prop, Tag):
        return prop.name in tags
    if isinstance(prop, TagNot):
        return not _ref_prop(prop.child, tags)
    if isinstance(prop, TagOr):
        return _ref_prop(prop.left, tags) or _ref_prop(prop.right, tags)
    raise TypeError(prop)


def _ref_domain(dom, trace, l0):
    cx, cy = trace.locations[l0].coord
    names = []
    for name, loc in trace.locations.items():
        d = math.sqrt((loc.coord[0] - cx) ** 2 + (loc.coord[1] - cy) ** 2)
        if dom.d1 <= d <= dom.d2 and _ref_prop(dom.prop, loc.tags):
            names.append(name)
    return names


def _ref_cmp(v, op, c):
    return {
        "<": v < c,
        "<=": v <= c,
        ">": v > c,
        ">=": v >= c,
        "=": v == c,
    }[op]


def _ref_agg(op, vals):
    if op == "max":
        return max(vals)
    if op == "min":
        return min(vals)
    if op == "sum":
        return sum(vals)
    return sum(vals) / len(vals)


def reference_evaluate(f, trace, t0, l0):
    """Direct enumeration evaluator used as the oracle."""
    if isinstance(f, Atom):
        v = trace.values.get((t0, l0, f.variable))
        return UNDEFINED if v is None else _ref_cmp(v, f.comparison, f.constant)
    if isinstance(f, Not):
        v = reference_evaluate(f.child, trace, t0, l0)
        return UNDEFINED if v is UNDEFINED else (not v)
    if isinstance(f, And):
        a = reference_evaluate(f.left, trace, t0, l0)
        b = reference_evaluate(f.right, trace, t0, l0)
        if a is False or b is False:
            return False
        if a is UNDEFINED or b is UNDEFINED:
            return UNDEFINED
        return True
    if isinstance(f, Always):
        window = [t for t in trace.times if t0 + f.interval.lo <= t <= t0 + f.interval.hi]
        if not window:
            return UNDEFINED
        results = [reference_evaluate(f.child, trace, t, l0) for t in window]
        if False in results:
            return False
        if UNDEFINED in results:
            return UNDEFINED
        return True
    if isinstance(f, Eventually):
        window = [t for t in trace.times if t0 + f.interval.lo <= t <= t0 + f.interval.hi]
        if not window:
            return UNDEFINED
        results = [reference_evaluate(f.child, trace, t, l0) for t in window]
        if True in results:
            return True
        if UNDEFINED in results:
            return UNDEFINED
        return False
    if isinstance(f, Until):
        window = [t for t in trace.times if t0 + f.interval.lo <= t <= t0 + f.interval.hi]
        if not window:
            return UNDEFINED
        results = []
        for tp in window:
            parts = [reference_evaluate(f.right, trace, tp, l0)]
            for tpp in trace.times:
                if t0 <= tpp < tp:
                    parts.append(reference_evaluate(f.left, trace, tpp, l0))
            if False in parts:
                results.append(False)
            elif UNDEFINED in parts:
                results.append(UNDEFINED)
            else:
                results.append(True)
        if True in results:
            return True
        if UNDEFINED in results:
            return UNDEFINED
        return False
    if isinstance(f, Aggregate):
        vals = []
        for name in _ref_domain(f.domain, trace, l0):
            v = trace.values.get((t0, name, f.variable))
            if v is not None:
                vals.append(v)
        if not vals:
            return UNDEFINED
        return _ref_cmp(_ref_agg(f.op, vals), f.comparison, f.constant)
    if isinstance(f, Count):
        names = _ref_domain(f.domain, trace, l0)
        if not names:
            return UNDEFINED
        bits = []
        for name in names:
            v = reference_evaluate(f.child, trace, t0, name)
            if v is UNDEFINED:
                return UNDEFINED
            bits.append(1.0 if v else 0.0)
        return _ref_cmp(_ref_agg(f.op, bits), f.comparison, f.constant)
    if isinstance(f, Everywhere):
        return reference_evaluate(
            Count("min", f.domain, f.child, ">", 0.0), trace, t0, l0
        )
    if isinstance(f, Somewhere):
        return reference_evaluate(
            Count("max", f.domain, f.child, ">", 0.0), trace, t0, l0
        )
    raise TypeError(f)
