"""SaSTL formulas: abstract syntax, text syntax, and desk-scale Boolean evaluation.

The surface grammar is the one shipped in docs/grammar.ebnf.  Evaluation is
three-valued: True, False, or UNDEFINED (empty sample sets and missing signal
values never raise).
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Dict, FrozenSet, Mapping, Optional, Tuple, Union

from .errors import FormulaSyntaxError, MissingSlot, UnknownTag, UnknownVariable
from .slots import DEFAULTED, FILLED, SlotSet


class _Undefined:
    """Singleton result for evaluations over empty or missing data."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "UNDEFINED"

    def __bool__(self):
        raise TypeError("UNDEFINED has no truth value; compare with `is UNDEFINED`")


UNDEFINED = _Undefined()

AGG_OPS = ("max", "min", "sum", "avg")
COMPARISONS = ("<=", ">=", "<", ">", "=")


# ---------------------------------------------------------------------------
# abstract syntax


@dataclass(frozen=True)
class TimeInterval:
    lo: float
    hi: float  # math.inf allowed

    def __post_init__(self):
        if not (math.isfinite(self.lo) and self.lo >= 0):
            raise ValueError("interval lower bound must be finite and non-negative")
        if self.hi < self.lo:
            raise ValueError("interval upper bound below lower bound")


UNBOUNDED = TimeInterval(0.0, math.inf)


# location-tag propositions: True | tag | !p | p | q
@dataclass(frozen=True)
class TagTrue:
    def tags(self):
        return frozenset()


@dataclass(frozen=True)
class Tag:
    name: str

    def tags(self):
        return frozenset({self.name})


@dataclass(frozen=True)
class TagNot:
    child: "TagProp"

    def tags(self):
        return self.child.tags()


@dataclass(frozen=True)
class TagOr:
    left: "TagProp"
    right: "TagProp"

    def tags(self):
        return self.left.tags() | self.right.tags()


TagProp = Union[TagTrue, Tag, TagNot, TagOr]


@dataclass(frozen=True)
class SpatialDomain:
    d1: float
    d2: float
    prop: TagProp

    def __post_init__(self):
        if self.d1 > self.d2:
            raise ValueError("spatial range must satisfy d1 <= d2")


@dataclass(frozen=True)
class Atom:
    variable: str
    comparison: str
    constant: float
    unit: Optional[str] = None

    def __post_init__(self):
        if self.comparison not in COMPARISONS:
            raise ValueError(f"bad comparison {self.comparison!r}")


@dataclass(frozen=True)
class Not:
    child: "Formula"


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Until:
    interval: TimeInterval
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Always:
    interval: TimeInterval
    child: "Formula"


@dataclass(frozen=True)
class Eventually:
    interval: TimeInterval
    child: "Formula"


@dataclass(frozen=True)
class Aggregate:
    op: str
    domain: SpatialDomain
    variable: str
    comparison: str
    constant: float
    unit: Optional[str] = None

    def __post_init__(self):
        if self.op not in AGG_OPS:
            raise ValueError(f"bad aggregation op {self.op!r}")


@dataclass(frozen=True)
class Count:
    op: str
    domain: SpatialDomain
    child: "Formula"
    comparison: str
    constant: float

    def __post_init__(self):
        if self.op not in AGG_OPS:
            raise ValueError(f"bad counting op {self.op!r}")


@dataclass(frozen=True)
class Everywhere:
    domain: SpatialDomain
    child: "Formula"

    def as_count(self) -> Count:
        return Count("min", self.domain, self.child, ">", 0.0)


@dataclass(frozen=True)
class Somewhere:
    domain: SpatialDomain
    child: "Formula"

    def as_count(self) -> Count:
        return Count("max", self.domain, self.child, ">", 0.0)


Formula = Union[
    Atom, Not, And, Until, Always, Eventually, Aggregate, Count, Everywhere, Somewhere
]


# ---------------------------------------------------------------------------
# traces


@dataclass(frozen=True)
class Location:
    tags: FrozenSet[str]
    coord: Tuple[float, float]


@dataclass(frozen=True)
class Trace:
    times: Tuple[float, ...]
    locations: Mapping[str, Location]
    # (time, location name, variable) -> value; None encodes a missing reading
    values: Mapping[Tuple[float, str, str], Optional[float]]
    variables: Tuple[str, ...]

    def __post_init__(self):
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise ValueError("trace times must be strictly ascending")

    def tag_alphabet(self) -> FrozenSet[str]:
        out = set()
        for loc in self.locations.values():
            out |= loc.tags
        return frozenset(out)

    def value(self, t: float, loc: str, var: str) -> Optional[float]:
        if var not in self.variables:
            raise UnknownVariable(var)
        return self.values.get((t, loc, var))


# ---------------------------------------------------------------------------
# rendering


def _num(x: float) -> str:
    if math.isinf(x):
        return "inf"
    if float(x) == int(x) and abs(x) < 1e15:
        return str(int(x))
    return repr(float(x))


def _interval(iv: TimeInterval) -> str:
    if math.isinf(iv.hi):
        return f"[{_num(iv.lo)},inf)"
    return f"[{_num(iv.lo)},{_num(iv.hi)}]"


def _prop(p: TagProp) -> str:
    if isinstance(p, TagTrue):
        return "true"
    if isinstance(p, Tag):
        return p.name
    if isinstance(p, TagNot):
        return f"!{_prop_atomic(p.child)}"
    if isinstance(p, TagOr):
        return f"{_prop(p.left)} | {_prop_atomic(p.right)}"
    raise TypeError(p)


def _prop_atomic(p: TagProp) -> str:
    text = _prop(p)
    return f"({text})" if isinstance(p, TagOr) else text


def _domain(d: SpatialDomain) -> str:
    if d.d1 == 0.0 and d.d2 == 0.0:
        return _prop(d.prop)
    return f"{_prop(d.prop)} & [{_num(d.d1)},{_num(d.d2)}]"


def _atom_body(variable: str, comparison: str, constant: float, unit) -> str:
    text = f"{variable} {comparison} {_num(constant)}"
    return f"{text} {unit}" if unit else text


def render_formula(f: Formula) -> str:
    """Canonical text form; ``parse_formula`` inverts it exactly."""
    if isinstance(f, Atom):
        return _atom_body(f.variable, f.comparison, f.constant, f.unit)
    if isinstance(f, Not):
        return f"!({render_formula(f.child)})"
    if isinstance(f, And):
        return f"({render_formula(f.left)} & {render_formula(f.right)})"
    if isinstance(f, Until):
        return (
            f"until{_interval(f.interval)}"
            f"({render_formula(f.left)}, {render_formula(f.right)})"
        )
    if isinstance(f, Always):
        return f"always{_interval(f.interval)}({render_formula(f.child)})"
    if isinstance(f, Eventually):
        return f"eventually{_interval(f.interval)}({render_formula(f.child)})"
    if isinstance(f, Aggregate):
        body = _atom_body(f.variable, f.comparison, f.constant, f.unit)
        return f"agg<{f.op}>({_domain(f.domain)})({body})"
    if isinstance(f, Count):
        return (
            f"count<{f.op}>({_domain(f.domain)})({render_formula(f.child)})"
            f" {f.comparison} {_num(f.constant)}"
        )
    if isinstance(f, Everywhere):
        return f"everywhere({_domain(f.domain)})({render_formula(f.child)})"
    if isinstance(f, Somewhere):
        return f"somewhere({_domain(f.domain)})({render_formula(f.child)})"
    raise TypeError(f"not a formula: {f!r}")


# ---------------------------------------------------------------------------
# parsing

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_/^.%-]*)
  | (?P<cmp><=|>=|<|>|=)
  | (?P<punct>[()\[\],&|!-])
    """,
    re.VERBOSE,
)

_KEYWORDS = {
    "always",
    "eventually",
    "until",
    "everywhere",
    "somewhere",
    "agg",
    "count",
    "true",
    "inf",
}


def _tokenize(text: str):
    pos = 0
    out = []
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise FormulaSyntaxError(pos, "a token", text[pos])
        if m.lastgroup != "ws":
            out.append((m.lastgroup, m.group(), pos))
        pos = m.end()
    out.append(("eof", "", len(text)))
    return out


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def next(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, text, pos = self.next()
        if text != value:
            raise FormulaSyntaxError(pos, repr(value), text or "end of input")
        return text

    def fail(self, expected: str):
        kind, text, pos = self.peek()
        raise FormulaSyntaxError(pos, expected, text or "end of input")

    # formula := unary ('&' unary)*   (left-associative conjunction)
    def formula(self) -> Formula:
        node = self.unary()
        while self.peek()[1] == "&":
            self.next()
            node = And(node, self.unary())
        return node

    def unary(self) -> Formula:
        kind, text, pos = self.peek()
        if text == "!":
            self.next()
            return Not(self.unary())
        if text == "(":
            self.next()
            inner = self.formula()
            self.expect(")")
            return inner
        if text == "always":
            self.next()
            iv = self.interval()
            self.expect("(")
            child = self.formula()
            self.expect(")")
            return Always(iv, child)
        if text == "eventually":
            self.next()
            iv = self.interval()
            self.expect("(")
            child = self.formula()
            self.expect(")")
            return Eventually(iv, child)
        if text == "until":
            self.next()
            iv = self.interval()
            self.expect("(")
            left = self.formula()
            self.expect(",")
            right = self.formula()
            self.expect(")")
            return Until(iv, left, right)
        if text in ("everywhere", "somewhere"):
            self.next()
            self.expect("(")
            dom = self.domain()
            self.expect(")")
            self.expect("(")
            child = self.formula()
            self.expect(")")
            cls = Everywhere if text == "everywhere" else Somewhere
            return cls(dom, child)
        if text == "agg":
            self.next()
            op = self.agg_op()
            self.expect("(")
            dom = self.domain()
            self.expect(")")
            self.expect("(")
            var = self.ident()
            cmp_, const, unit = self.comparison_tail()
            self.expect(")")
            return Aggregate(op, dom, var, cmp_, const, unit)
        if text == "count":
            self.next()
            op = self.agg_op()
            self.expect("(")
            dom = self.domain()
            self.expect(")")
            self.expect("(")
            child = self.formula()
            self.expect(")")
            cmp_, const, _ = self.comparison_tail(allow_unit=False)
            return Count(op, dom, child, cmp_, const)
        if kind == "ident" and text not in _KEYWORDS:
            var = self.ident()
            cmp_, const, unit = self.comparison_tail()
            return Atom(var, cmp_, const, unit)
        self.fail("a formula")

    def agg_op(self) -> str:
        self.expect("<")
        kind, text, pos = self.next()
        if text not in AGG_OPS:
            raise FormulaSyntaxError(pos, "one of max/min/sum/avg", text)
        self.expect(">")
        return text

    def ident(self) -> str:
        kind, text, pos = self.next()
        if kind != "ident" or text in _KEYWORDS:
            raise FormulaSyntaxError(pos, "an identifier", text or "end of input")
        return text

    def comparison_tail(self, allow_unit=True):
        kind, text, pos = self.next()
        if kind != "cmp":
            raise FormulaSyntaxError(pos, "a comparison operator", text)
        const = self.number()
        unit = None
        if allow_unit and self.peek()[0] == "ident" and self.peek()[1] not in _KEYWORDS:
            unit = self.next()[1]
        return text, const, unit

    def number(self, allow_inf=False) -> float:
        kind, text, pos = self.next()
        neg = False
        if text == "-":
            neg = True
            kind, text, pos = self.next()
        if allow_inf and text == "inf":
            return math.inf
        if kind != "number":
            raise FormulaSyntaxError(pos, "a number", text or "end of input")
        val = float(text)
        return -val if neg else val

    def interval(self) -> TimeInterval:
        self.expect("[")
        lo = self.number()
        self.expect(",")
        hi = self.number(allow_inf=True)
        kind, text, pos = self.next()
        if math.isinf(hi):
            if text != ")":
                raise FormulaSyntaxError(pos, "')' closing an unbounded interval", text)
        elif text != "]":
            raise FormulaSyntaxError(pos, "']'", text)
        try:
            return TimeInterval(lo, hi)
        except ValueError as exc:
            raise FormulaSyntaxError(pos, str(exc)) from exc

    # domain := prop ('&' '[' n ',' n ']')?
    def domain(self) -> SpatialDomain:
        prop = self.prop_or()
        d1 = d2 = 0.0
        if self.peek()[1] == "&":
            self.next()
            self.expect("[")
            d1 = self.number()
            self.expect(",")
            d2 = self.number(allow_inf=True)
            kind, text, pos = self.next()
            if math.isinf(d2):
                if text != ")":
                    raise FormulaSyntaxError(pos, "')'", text)
            elif text != "]":
                raise FormulaSyntaxError(pos, "']'", text)
        kind, text, pos = self.peek()
        try:
            return SpatialDomain(d1, d2, prop)
        except ValueError as exc:
            raise FormulaSyntaxError(pos, str(exc)) from exc

    def prop_or(self) -> TagProp:
        node = self.prop_unary()
        while self.peek()[1] == "|":
            self.next()
            node = TagOr(node, self.prop_unary())
        return node

    def prop_unary(self) -> TagProp:
        kind, text, pos = self.peek()
        if text == "!":
            self.next()
            return TagNot(self.prop_unary())
        if text == "(":
            self.next()
            inner = self.prop_or()
            self.expect(")")
            return inner
        if text == "true":
            self.next()
            return TagTrue()
        if kind == "ident" and text not in _KEYWORDS:
            self.next()
            return Tag(text)
        self.fail("a location-tag proposition")


def parse_formula(text: str) -> Formula:
    """Parse the canonical SaSTL surface syntax.

    Raises FormulaSyntaxError with position and expectation on bad input.
    """
    p = _Parser(text)
    node = p.formula()
    kind, tok, pos = p.peek()
    if kind != "eof":
        raise FormulaSyntaxError(pos, "end of input", tok)
    return node


# ---------------------------------------------------------------------------
# evaluation

Truth = Union[bool, _Undefined]


def _kleene_not(v: Truth) -> Truth:
    return UNDEFINED if v is UNDEFINED else (not v)


def _kleene_and(a: Truth, b: Truth) -> Truth:
    if a is False or b is False:
        return False
    if a is UNDEFINED or b is UNDEFINED:
        return UNDEFINED
    return True


def _kleene_all(vals) -> Truth:
    out: Truth = True
    for v in vals:
        out = _kleene_and(out, v)
    return out


def _kleene_any(vals) -> Truth:
    out: Truth = False
    for v in vals:
        if v is True:
            return True
        if v is UNDEFINED:
            out = UNDEFINED
    return out


def _compare(value: float, comparison: str, constant: float) -> bool:
    if comparison == "<":
        return value < constant
    if comparison == "<=":
        return value <= constant
    if comparison == ">":
        return value > constant
    if comparison == ">=":
        return value >= constant
    if comparison == "=":
        return value == constant
    raise ValueError(comparison)


def _prop_holds(p: TagProp, tags: FrozenSet[str], alphabet: FrozenSet[str]) -> bool:
    if isinstance(p, TagTrue):
        return True
    if isinstance(p, Tag):
        if p.name not in alphabet:
            raise UnknownTag(p.name)
        return p.name in tags
    if isinstance(p, TagNot):
        return not _prop_holds(p.child, tags, alphabet)
    if isinstance(p, TagOr):
        # evaluate both sides so unknown tags are reported regardless of shortcut
        left = _prop_holds(p.left, tags, alphabet)
        right = _prop_holds(p.right, tags, alphabet)
        return left or right
    raise TypeError(p)


def _domain_locations(dom: SpatialDomain, trace: Trace, l0: str):
    alphabet = trace.tag_alphabet()
    x0, y0 = trace.locations[l0].coord
    out = []
    for name in trace.locations:
        loc = trace.locations[name]
        dist = math.hypot(loc.coord[0] - x0, loc.coord[1] - y0)
        if dom.d1 <= dist <= dom.d2 and _prop_holds(dom.prop, loc.tags, alphabet):
            out.append(name)
    return out


def _aggregate(op: str, values) -> float:
    if op == "max":
        return max(values)
    if op == "min":
        return min(values)
    if op == "sum":
        return sum(values)
    if op == "avg":
        return sum(values) / len(values)
    raise ValueError(op)


def evaluate_formula(f: Formula, trace: Trace, t0: float, l0: str) -> Truth:
    """Boolean satisfaction of ``f`` at time ``t0`` and location ``l0``.

    Temporal operators quantify over the trace's sample times inside the
    shifted interval; empty sample or location sets yield UNDEFINED.
    """
    if t0 not in trace.times:
        raise ValueError(f"t0={t0} is not a trace sample time")
    if l0 not in trace.locations:
        raise ValueError(f"l0={l0!r} is not a trace location")

    if isinstance(f, Atom):
        v = trace.value(t0, l0, f.variable)
        if v is None:
            return UNDEFINED
        return _compare(v, f.comparison, f.constant)
    if isinstance(f, Not):
        return _kleene_not(evaluate_formula(f.child, trace, t0, l0))
    if isinstance(f, And):
        return _kleene_and(
            evaluate_formula(f.left, trace, t0, l0),
            evaluate_formula(f.right, trace, t0, l0),
        )
    if isinstance(f, (Always, Eventually)):
        window = [
            t for t in trace.times if t0 + f.interval.lo <= t <= t0 + f.interval.hi
        ]
        if not window:
            return UNDEFINED
        vals = [evaluate_formula(f.child, trace, t, l0) for t in window]
        return _kleene_all(vals) if isinstance(f, Always) else _kleene_any(vals)
    if isinstance(f, Until):
        window = [
            t for t in trace.times if t0 + f.interval.lo <= t <= t0 + f.interval.hi
        ]
        if not window:
            return UNDEFINED
        outcomes = []
        for t_prime in window:
            right = evaluate_formula(f.right, trace, t_prime, l0)
            lefts = [
                evaluate_formula(f.left, trace, t, l0)
                for t in trace.times
                if t0 <= t < t_prime
            ]
            outcomes.append(_kleene_and(right, _kleene_all(lefts)))
        return _kleene_any(outcomes)
    if isinstance(f, Aggregate):
        locs = _domain_locations(f.domain, trace, l0)
        values = []
        for name in locs:
            v = trace.value(t0, name, f.variable)
            if v is not None:
                values.append(v)
        if not values:
            return UNDEFINED
        return _compare(_aggregate(f.op, values), f.comparison, f.constant)
    if isinstance(f, Count):
        locs = _domain_locations(f.domain, trace, l0)
        if not locs:
            return UNDEFINED
        truths = []
        for name in locs:
            v = evaluate_formula(f.child, trace, t0, name)
            if v is UNDEFINED:
                return UNDEFINED
            truths.append(1.0 if v else 0.0)
        return _compare(_aggregate(f.op, truths), f.comparison, f.constant)
    if isinstance(f, (Everywhere, Somewhere)):
        return evaluate_formula(f.as_count(), trace, t0, l0)
    raise TypeError(f"not a formula: {f!r}")


# ---------------------------------------------------------------------------
# confirmation template sentence


def _clock(hours: float) -> str:
    h = int(hours)
    m = int(round((hours - h) * 60))
    return f"{h}:{m:02d}"


def render_template_sentence(slots: SlotSet) -> str:
    """Bracketed confirmation sentence in fixed slot order.

    Order: entity, quantifier, comparison and bound, time, location.
    """
    from . import refine  # local import: refine depends on this module's types

    for key in ("entity", "condition", "location"):
        slot = slots.get(key)
        if slot.status not in (FILLED, DEFAULTED) or not slot.text:
            raise MissingSlot(key)

    entity = slots.get("entity").text
    quant = slots.get("quantifier")
    if quant.status == FILLED:
        head = f"[{entity}] of [{quant.text}]"
    elif quant.status == DEFAULTED:
        head = f"[{entity}]"
    else:
        raise MissingSlot("quantifier")

    negated = refine.detect_negation(slots.get("condition").text)
    cmp_ = refine.extract_comparison(slots.get("condition").text, negated)
    bound = _num(cmp_.value) + (f" {cmp_.unit}" if cmp_.unit else "")

    time_slot = slots.get("time")
    if time_slot.status == DEFAULTED:
        time_text = "always"
    elif time_slot.status == FILLED:
        interval = refine.normalize_time(time_slot.text)
        if interval is None or math.isinf(interval.hi):
            time_text = time_slot.text
        else:
            time_text = f"between {_clock(interval.lo)} to {_clock(interval.hi)}"
    else:
        raise MissingSlot("time")

    location = slots.get("location").text
    return f"{head} should be [{cmp_.op}] [{bound}] [{time_text}] [{location}]"
