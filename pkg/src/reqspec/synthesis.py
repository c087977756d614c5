"""Controllable requirement synthesis from vocabularies and patterns.

The synthesis index lambda is the minimum number of times each vocabulary
phrase appears across the generated set.
"""
from __future__ import annotations

import random
import re
from dataclasses import dataclass
from typing import Dict, List, Sequence

from .errors import EmptyVocabulary, NoPatterns
from .knowledge import AnnotatedRequirement, Pattern, Span

_PLACEHOLDER_RE = re.compile(r"#(entity|quantifier|location|condition|time)\b")


@dataclass(frozen=True)
class SynthesisConfig:
    lambda_: int = 5
    seed: int = 0
    pattern_order: str = "round_robin"

    def __post_init__(self):
        if self.lambda_ < 1:
            raise ValueError("synthesis index must be >= 1")
        if self.pattern_order not in ("round_robin", "random"):
            raise ValueError(f"unknown pattern order {self.pattern_order!r}")


def synthesize(
    vocabs: Dict[str, Sequence[str]],
    patterns: Sequence[Pattern],
    cfg: SynthesisConfig,
) -> List[AnnotatedRequirement]:
    """Generate ``lambda * max|V_i|`` requirements covering every phrase.

    Phrase streams are concatenated seeded permutations truncated at the
    total count; requirement j uses stream position j for each placeholder
    its pattern contains.  The >= lambda coverage guarantee therefore holds
    whenever every pattern references every supplied vocabulary.
    """
    if not patterns:
        raise NoPatterns("at least one pattern is required")
    referenced = set()
    for pattern in patterns:
        referenced.update(pattern.placeholders())
    for category in referenced:
        if not vocabs.get(category):
            raise EmptyVocabulary(category)

    rng = random.Random(cfg.seed)
    sizes = [len(v) for v in vocabs.values() if v]
    if not sizes:
        raise EmptyVocabulary("(none supplied)")
    total = cfg.lambda_ * max(sizes)

    streams: Dict[str, List[str]] = {}
    for category in sorted(vocabs):
        phrases = list(vocabs[category])
        if not phrases:
            continue
        stream: List[str] = []
        while len(stream) < total:
            chunk = phrases[:]
            rng.shuffle(chunk)
            stream.extend(chunk)
        streams[category] = stream[:total]

    ordered = list(patterns)
    rng.shuffle(ordered)

    out: List[AnnotatedRequirement] = []
    for j in range(total):
        if cfg.pattern_order == "round_robin":
            pattern = ordered[j % len(ordered)]
        else:
            pattern = rng.choice(ordered)
        text_parts: List[str] = []
        spans: List[Span] = []
        cursor = 0
        offset = 0
        for m in _PLACEHOLDER_RE.finditer(pattern.text):
            key = m.group(1)
            phrase = streams[key][j]
            text_parts.append(pattern.text[cursor:m.start()])
            offset += m.start() - cursor
            spans.append(Span(offset, offset + len(phrase), key))
            text_parts.append(phrase)
            offset += len(phrase)
            cursor = m.end()
        text_parts.append(pattern.text[cursor:])
        out.append(AnnotatedRequirement("".join(text_parts), tuple(spans)))
    return out
