"""Requirement-to-specification orchestration: tag, refine, detect gaps, assemble.

The dialogue contract: a formula is only produced once every slot is filled
or defaulted; otherwise the result carries one clarification query per gap,
in fixed key order.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import List, Optional

from . import refine, sastl
from .errors import NoComparisonFound, NoNumberFound, SlotIncomplete
from .slots import AMBIGUOUS, DEFAULTED, FILLED, KEYS, MISSING, Slot, SlotSet
from .tagger import TaggerModel, tag, tokenize

# location phrases too vague to anchor a monitor to
LOCATION_AMBIGUITY_CUES = ("nearby", "close to", "adjacent", "in the vicinity")
TIME_ANCHOR_RE = re.compile(r"\b(after|before|past|since)\b", re.IGNORECASE)
EXISTENTIAL_TIME_RE = re.compile(r"\bat least once\b", re.IGNORECASE)

QUERY_TEMPLATES = {
    "missing": "what is the {key} for this requirement?",
    "ambiguous": 'could you clarify the {key} ("{text}") for this requirement?',
}

_STOPWORDS = {"the", "all", "a", "an", "of", "any", "every"}
_DISTANCE_RE = re.compile(
    r"within\s+(\d+(?:\.\d+)?)\s+(meters?|metres?|feet|foot|miles?|kilometers?)\s+of\s+(.+)",
    re.IGNORECASE,
)
# widened window so the comparison trigger preceding the condition span is seen
_CONDITION_CONTEXT = 60


@dataclass(frozen=True)
class TranslationResult:
    slots: SlotSet
    formula: Optional[sastl.Formula] = None
    template: Optional[str] = None
    queries: List[str] = field(default_factory=list)

    def __post_init__(self):
        incomplete = any(
            s.status in (MISSING, AMBIGUOUS) for _, s in self.slots.items()
        )
        if incomplete and self.formula is not None:
            raise ValueError("formula must not be emitted while queries are open")


def _query(key: str, slot: Slot) -> str:
    if slot.status == AMBIGUOUS:
        return QUERY_TEMPLATES["ambiguous"].format(key=key, text=slot.text)
    return QUERY_TEMPLATES["missing"].format(key=key)


def detect_gaps(slots: SlotSet) -> SlotSet:
    """Mark empty slots missing (time defaults) and vague phrases ambiguous."""
    out = slots
    for key, slot in slots.items():
        if slot.status == FILLED:
            if key == "location":
                low = slot.text.lower()
                for cue in LOCATION_AMBIGUITY_CUES:
                    if cue in low:
                        out = out.with_slot(
                            key,
                            Slot(slot.text, slot.span, AMBIGUOUS, "vague location"),
                        )
                        break
            elif key == "time":
                if refine.normalize_time(slot.text) is None:
                    reason = (
                        "open-ended anchor"
                        if TIME_ANCHOR_RE.search(slot.text)
                        else "unrecognized time format"
                    )
                    out = out.with_slot(
                        key, Slot(slot.text, slot.span, AMBIGUOUS, reason)
                    )
        elif slot.status == MISSING:
            if key == "time":
                out = out.with_slot(key, Slot("", None, DEFAULTED))
    return out


def _normalize_tag(phrase: str, singularize: bool = False) -> str:
    words = [
        w for w in re.findall(r"[A-Za-z0-9]+", phrase.lower()) if w not in _STOPWORDS
    ]
    if not words:
        words = [phrase.strip().lower() or "anywhere"]
    if singularize and len(words[-1]) > 3 and words[-1].endswith("s"):
        if not words[-1].endswith("ss"):
            words[-1] = words[-1][:-1]
    return "_".join(words)


def parse_location_domain(text: str) -> sastl.SpatialDomain:
    """Distance phrases get a [0, N] range (in the phrase's own distance unit);
    bare place names get range [0, 0], meaning "at locations tagged X"."""
    m = _DISTANCE_RE.search(text)
    if m:
        value = float(m.group(1))
        tag_name = _normalize_tag(m.group(3).strip().rstrip(".,;"), singularize=True)
        return sastl.SpatialDomain(0.0, value, sastl.Tag(tag_name))
    return sastl.SpatialDomain(0.0, 0.0, sastl.Tag(_normalize_tag(text)))


def _variable_name(slots: SlotSet) -> str:
    entity = _normalize_tag(slots.get("entity").text)
    quant = slots.get("quantifier")
    if quant.status == FILLED and quant.text:
        return f"{entity}_of_{_normalize_tag(quant.text, singularize=True)}"
    return entity


def assemble_formula(slots: SlotSet) -> sastl.Formula:
    """Everywhere(location)(TemporalOp[interval](entity-of-quantifier ~ bound))."""
    for key in ("entity", "location", "condition"):
        if slots.get(key).status != FILLED:
            raise SlotIncomplete(key)
    if slots.get("quantifier").status not in (FILLED, DEFAULTED):
        raise SlotIncomplete("quantifier")
    time_slot = slots.get("time")
    if time_slot.status not in (FILLED, DEFAULTED):
        raise SlotIncomplete("time")

    condition = slots.get("condition").text
    negated = refine.detect_negation(condition)
    try:
        cmp_ = refine.extract_comparison(condition, negated)
    except (NoComparisonFound, NoNumberFound) as exc:
        raise SlotIncomplete("condition") from exc

    if time_slot.status == DEFAULTED:
        interval = sastl.UNBOUNDED
        temporal_cls = sastl.Always
    else:
        interval = refine.normalize_time(time_slot.text) or sastl.UNBOUNDED
        temporal_cls = (
            sastl.Eventually
            if EXISTENTIAL_TIME_RE.search(time_slot.text)
            else sastl.Always
        )

    atom = sastl.Atom(_variable_name(slots), cmp_.op, cmp_.value, cmp_.unit)
    domain = parse_location_domain(slots.get("location").text)
    return sastl.Everywhere(domain, temporal_cls(interval, atom))


def _slots_from_tags(text: str, model: TaggerModel) -> SlotSet:
    seq = tag(model, text)
    slots = SlotSet()
    for start, end, key in seq.spans():
        if slots.get(key).status == FILLED:
            continue  # first span per key wins; extras need explicit revision
        span_text = text[start:end].rstrip(".,;:!?").rstrip()
        if key == "condition":
            # pull the comparison trigger preceding the tagged bound into view
            window = text[max(0, start - _CONDITION_CONTEXT):start]
            trigger = refine.find_trigger(window)
            if trigger is not None:
                negated = refine.detect_negation(window + span_text)
                prefix = "not " if negated and not trigger[0].startswith(("no", "not")) else ""
                span_text = f"{prefix}{trigger[0]} {span_text}"
        slots = slots.with_slot(key, Slot(span_text, (start, end), FILLED))
    return _reassign_misfiled_spans(slots, model)


def _gazetteer_key(text: str, gazetteer) -> Optional[str]:
    tokens = [
        token.lower()
        for token, _, _ in tokenize(text)
        if token.isalpha() and token.lower() not in _STOPWORDS
    ]
    if not tokens:
        return None
    keys = [k for k, vocab in gazetteer.items() if all(t in vocab for t in tokens)]
    return keys[0] if len(keys) == 1 else None


def _reassign_misfiled_spans(slots: SlotSet, model: TaggerModel) -> SlotSet:
    """Move a span to the only vocabulary category all its words belong to.

    Guards against label confusion when a deleted slot shifts sentence
    positions (e.g. "limits the bicycles to ..." tagging the quantifier word
    as the entity). Only fires when every content token is known under
    exactly one different key and that slot is still empty.
    """
    for key, slot in slots.items():
        if slot.status != FILLED or key == "condition":
            continue
        target = _gazetteer_key(slot.text, model.gazetteer)
        if target and target != key and slots.get(target).status != FILLED:
            slots = slots.with_slot(target, Slot(slot.text, slot.span, FILLED))
            slots = slots.with_slot(key, Slot("", None, MISSING))
    return slots


def _apply_cache(text: str, slots: SlotSet, cache) -> SlotSet:
    if cache is None:
        return slots
    low = text.lower()
    for phrase, entry in cache.entries.items():
        pos = low.find(phrase.lower())
        if pos < 0:
            continue
        key = entry.key if hasattr(entry, "key") else entry
        slots = slots.with_slot(
            key, Slot(text[pos:pos + len(phrase)], (pos, pos + len(phrase)), FILLED)
        )
    return slots


def translate(text: str, model: TaggerModel, cache=None, answers=None) -> TranslationResult:
    """Translate a requirement; incompleteness surfaces as queries, not errors.

    Slot precedence: explicit clarification answers > session cache > tagger.
    """
    if not text.strip():
        raise ValueError("requirement text is empty")
    slots = _slots_from_tags(text, model)
    slots = _apply_cache(text, slots, cache)
    for key, answer in (answers or {}).items():
        slots = slots.with_slot(key, Slot(answer, None, FILLED))
    slots = detect_gaps(slots)

    queries = [
        _query(key, slot)
        for key, slot in slots.items()
        if slot.status in (MISSING, AMBIGUOUS)
    ]
    if queries:
        return TranslationResult(slots=slots, queries=queries)
    try:
        formula = assemble_formula(slots)
    except SlotIncomplete as exc:
        broken = slots.get(exc.key)
        slots = slots.with_slot(
            exc.key,
            Slot(broken.text, broken.span, AMBIGUOUS, "could not be formalized")
            if broken.text
            else Slot("", None, MISSING),
        )
        return TranslationResult(slots=slots, queries=[_query(exc.key, slots.get(exc.key))])
    template = sastl.render_template_sentence(slots)
    return TranslationResult(slots=slots, formula=formula, template=template, queries=[])
