"""Slot post-processing: time normalization, negation cues, comparison extraction.

All rule-based and deterministic.  Time coverage: clock ranges, recurring
phrases, calendar dates, and 'always'-style phrases; open-ended anchors such
as "after midnight" are left unrecognized so the dialogue can ask about them.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Optional

from .errors import NoComparisonFound, NoNumberFound
from .sastl import TimeInterval

COMPLEMENT = {"<": ">=", ">=": "<", "<=": ">", ">": "<=", "=": "="}


@dataclass(frozen=True)
class Comparison:
    op: str
    value: float
    unit: Optional[str] = None
    flagged: bool = False  # set when '=' occurs under negation

    def reversed(self) -> "Comparison":
        op = COMPLEMENT[self.op]
        return Comparison(op, self.value, self.unit, flagged=self.op == "=")


# ordered longest-first so that e.g. "no more than" wins over "more than"
_TRIGGERS = [
    ("no more than", "<="),
    ("not more than", "<="),
    ("no less than", ">="),
    ("not less than", ">="),
    ("no fewer than", ">="),
    ("less than or equal to", "<="),
    ("greater than or equal to", ">="),
    ("less than", "<"),
    ("fewer than", "<"),
    ("lower than", "<"),
    ("greater than", ">"),
    ("more than", ">"),
    ("higher than", ">"),
    ("at most", "<="),
    ("at least", ">="),
    ("a maximum of", "<="),
    ("a minimum of", ">="),
    ("maximum", "<="),
    ("minimum", ">="),
    ("up to", "<="),
    ("equal to", "="),
    ("exceed", ">"),
    ("exceeds", ">"),
    ("below", "<"),
    ("under", "<"),
    ("above", ">"),
    ("restricted to", "<="),
    ("limited to", "<="),
    ("capped at", "<="),
]

# composite triggers that embed a negation word; masked before cue scanning
_NEGATING_TRIGGER_RE = re.compile(
    r"\b(no|not)\s+(more|less|fewer)\s+than\b", re.IGNORECASE
)

_NEGATION_CUE_RE = re.compile(
    r"\b(not|no|never|neither|nor|prohibited|forbidden|banned|unlawful)\b|n't\b",
    re.IGNORECASE,
)

_NUMBER_RE = re.compile(r"\d+(?:,\d{3})*(?:\.\d+)?")

_UNIT_STOPWORDS = {
    "between", "within", "at", "for", "in", "from", "during", "on", "when",
    "where", "to", "and", "or", "the", "a", "an", "of", "should", "shall",
    "must", "is", "are", "be",
}

# phrase-level unit spellings folded to a compact canonical form
_UNIT_REWRITES = [
    (re.compile(r"\bper\s+square\s+foot\b", re.IGNORECASE), "/foot^2"),
    (re.compile(r"\bper\s+square\s+meter\b", re.IGNORECASE), "/m^2"),
    (re.compile(r"\bsquare\s+feet\b", re.IGNORECASE), "foot^2"),
    (re.compile(r"\bper\s+", re.IGNORECASE), "/"),
]


def detect_negation(text: str) -> bool:
    """Whether an odd number of negation cues precedes the comparison trigger."""
    low = text.lower()
    trigger_pos = len(low)
    for phrase, _ in _TRIGGERS:
        pos = low.find(phrase)
        if pos >= 0:
            trigger_pos = min(trigger_pos, pos)
    prefix = _NEGATING_TRIGGER_RE.sub(" ", low[:trigger_pos])
    # scan only the clause containing the trigger
    clause_start = max(prefix.rfind(ch) for ch in ".;") + 1
    cues = _NEGATION_CUE_RE.findall(prefix[clause_start:])
    return len(cues) % 2 == 1


def ambiguous_negation(text: str) -> bool:
    """True when two or more cues appear; callers should ask for clarification."""
    low = _NEGATING_TRIGGER_RE.sub(" ", text.lower())
    return len(_NEGATION_CUE_RE.findall(low)) >= 2


def find_trigger(text: str):
    """Last comparison trigger in ``text`` as (phrase, op, start); None if absent."""
    low = text.lower()
    best = None
    for phrase, op in _TRIGGERS:
        for m in re.finditer(re.escape(phrase), low):
            if best is None or m.start() > best[2] or (
                m.start() == best[2] and len(phrase) > len(best[0])
            ):
                best = (phrase, op, m.start())
    return best


def _parse_number(text: str) -> float:
    return float(text.replace(",", ""))


def _extract_unit(tail: str) -> Optional[str]:
    tokens = []
    for raw in tail.split():
        word = raw.strip(".,;:!?()")
        if not word:
            break
        if word.lower() in _UNIT_STOPWORDS or _NUMBER_RE.fullmatch(word):
            break
        tokens.append(word)
        if len(tokens) >= 4:
            break
    if not tokens:
        return None
    unit = " ".join(tokens)
    for pattern, repl in _UNIT_REWRITES:
        unit = pattern.sub(repl, unit)
    return unit.replace(" /", "/").replace("/ ", "/").replace(" ", "_")


def extract_comparison(condition_text: str, negated: bool) -> Comparison:
    """Map a condition clause to an operator, bound, and optional unit."""
    low = condition_text.lower()
    num_match = _NUMBER_RE.search(condition_text)

    best = None  # (distance to number, op, end offset)
    for phrase, op in _TRIGGERS:
        for m in re.finditer(re.escape(phrase), low):
            if num_match is not None and m.start() > num_match.start():
                continue
            dist = math.inf if num_match is None else num_match.start() - m.end()
            if best is None or dist < best[0]:
                best = (dist, op, m.end())
    if best is None:
        if num_match is None:
            raise NoComparisonFound(condition_text)
        # bare bound with no trigger, e.g. a lone "0.6 mg/m3" span: read as equality
        best = (math.inf, "=", 0)
    if num_match is None:
        raise NoNumberFound(condition_text)

    op = best[1]
    value = _parse_number(num_match.group())
    unit = _extract_unit(condition_text[num_match.end():])
    cmp_ = Comparison(op, value, unit)
    return cmp_.reversed() if negated else cmp_


# ---------------------------------------------------------------------------
# time normalization

_MERIDIEM_RE = r"(am|pm|a\.m\.?|p\.m\.?)"
_CLOCK_RE = re.compile(
    rf"\b(\d{{1,2}})(?::(\d{{2}}))?\s*{_MERIDIEM_RE}?\b|\b(noon|midnight)\b",
    re.IGNORECASE,
)
_RANGE_SEP_RE = re.compile(r"\b(to|and|until|through|till)\b|[-–]", re.IGNORECASE)
_DATE_RE = re.compile(r"\b(\d{4})-(\d{2})-(\d{2})\b|\b(\d{2})-(\d{2})-(\d{4})\b")
_ALWAYS_RE = re.compile(
    r"\b(always|at all times|at any time|any ?time|24/7)\b", re.IGNORECASE
)
_RECURRING_RE = re.compile(
    r"\b(every ?day|daily|every night|each day|every hour)\b", re.IGNORECASE
)
_ANCHOR_RE = re.compile(r"\b(after|before|past|since)\b", re.IGNORECASE)


def _clock_to_hours(m: re.Match, inherited: Optional[str]) -> Optional[float]:
    if m.group(4):  # noon / midnight
        return 12.0 if m.group(4).lower() == "noon" else 0.0
    hour = int(m.group(1))
    minute = int(m.group(2) or 0)
    meridiem = (m.group(3) or inherited or "").lower().rstrip(".").replace(".", "")
    if meridiem.startswith("p") and hour != 12:
        hour += 12
    elif meridiem.startswith("a") and hour == 12:
        hour = 0
    if hour > 24 or minute >= 60:
        return None
    return hour + minute / 60.0


def normalize_time(text: str) -> Optional[TimeInterval]:
    """Normalize a time phrase to an interval in hours; None when unrecognized."""
    text = text.strip()
    if not text:
        return None
    if _ALWAYS_RE.search(text):
        return TimeInterval(0.0, math.inf)
    if _RECURRING_RE.search(text):
        return TimeInterval(0.0, 24.0)
    if _DATE_RE.search(text):
        # calendar dates cover the whole named day at desk scale
        return TimeInterval(0.0, 24.0)
    if _ANCHOR_RE.search(text):
        return None  # open-ended anchor; the dialogue asks for a range

    clocks = [m for m in _CLOCK_RE.finditer(text) if m.group(0).strip()]
    if len(clocks) >= 2:
        first, second = clocks[0], clocks[1]
        between = text[first.end():second.start()]
        if _RANGE_SEP_RE.search(between) is None:
            return None
        mer1 = first.group(3)
        mer2 = second.group(3)
        lo = _clock_to_hours(first, mer2)
        hi = _clock_to_hours(second, mer1)
        if lo is None or hi is None:
            return None
        if hi < lo:
            hi += 24.0  # overnight range, e.g. 10 pm to 2 am
        return TimeInterval(lo, hi)
    return None
