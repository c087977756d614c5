"""City knowledge base: vocabulary, sentence patterns, annotated requirements.

On-disk layout (all UTF-8, LF):
  vocabulary.tsv  category<TAB>phrase<TAB>provenance
  patterns.txt    one pattern per line
  corpus.jsonl    {"text": ..., "spans": [{"start": int, "end": int, "key": str}]}
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Dict, List, Tuple

from .errors import FormatError, OverlappingSpans
from .slots import KEYS

PROVENANCES = ("seed", "online")

_PLACEHOLDER_RE = re.compile(r"#(entity|quantifier|location|condition|time)\b")


@dataclass(frozen=True)
class VocabularyEntry:
    category: str
    phrase: str
    provenance: str = "seed"

    def __post_init__(self):
        if self.category not in KEYS:
            raise ValueError(f"unknown category {self.category!r}")
        if not self.phrase or self.phrase != self.phrase.strip():
            raise ValueError("phrase must be non-empty and trimmed")
        if self.provenance not in PROVENANCES:
            raise ValueError(f"unknown provenance {self.provenance!r}")


@dataclass(frozen=True)
class Pattern:
    text: str

    def __post_init__(self):
        keys = self.placeholders()
        if not keys:
            raise ValueError("pattern must contain at least one placeholder")
        if len(keys) != len(set(keys)):
            raise ValueError("each placeholder may appear at most once")

    def placeholders(self) -> Tuple[str, ...]:
        return tuple(m.group(1) for m in _PLACEHOLDER_RE.finditer(self.text))


@dataclass(frozen=True)
class Span:
    start: int
    end: int
    key: str

    def __post_init__(self):
        if self.key not in KEYS:
            raise ValueError(f"unknown key {self.key!r}")
        if self.start >= self.end:
            raise ValueError("span must be non-empty")


@dataclass(frozen=True)
class AnnotatedRequirement:
    text: str
    spans: Tuple[Span, ...]

    def __post_init__(self):
        object.__setattr__(self, "spans", tuple(self.spans))
        prev_end = -1
        for span in self.spans:
            if span.start < prev_end:
                raise OverlappingSpans(f"span at {span.start} overlaps previous")
            if span.end > len(self.text):
                raise ValueError("span exceeds text bounds")
            prev_end = span.end

    def span_text(self, span: Span) -> str:
        return self.text[span.start:span.end]


def extract_pattern(req: AnnotatedRequirement) -> Pattern:
    """Replace each key span with its placeholder, leaving other text intact."""
    parts = []
    cursor = 0
    for span in req.spans:
        parts.append(req.text[cursor:span.start])
        parts.append(f"#{span.key}")
        cursor = span.end
    parts.append(req.text[cursor:])
    return Pattern("".join(parts))


@dataclass(frozen=True)
class KnowledgeBase:
    """Immutable snapshot; mutating helpers return a new snapshot."""

    vocabulary: Tuple[VocabularyEntry, ...] = ()
    patterns: Tuple[Pattern, ...] = ()
    corpus: Tuple[AnnotatedRequirement, ...] = ()

    def phrases(self, category: str) -> List[str]:
        return [e.phrase for e in self.vocabulary if e.category == category]

    def vocab_by_category(self) -> Dict[str, List[str]]:
        return {key: self.phrases(key) for key in KEYS}

    def has_phrase(self, category: str, phrase: str) -> bool:
        return any(
            e.category == category and e.phrase == phrase for e in self.vocabulary
        )

    def add_vocabulary(self, entry: VocabularyEntry) -> "KnowledgeBase":
        if self.has_phrase(entry.category, entry.phrase):
            return self  # duplicate inserts are no-ops
        return KnowledgeBase(
            self.vocabulary + (entry,), self.patterns, self.corpus
        )

    def add_requirement(self, req: AnnotatedRequirement) -> "KnowledgeBase":
        return KnowledgeBase(
            self.vocabulary, self.patterns, self.corpus + (req,)
        )


def knowledge_stats(kb: KnowledgeBase) -> Dict[str, int]:
    stats = {key: 0 for key in KEYS}
    for entry in kb.vocabulary:
        stats[entry.category] += 1
    stats["patterns"] = len(kb.patterns)
    stats["requirements"] = len(kb.corpus)
    return stats


def load_knowledge(path) -> KnowledgeBase:
    """Load a knowledge base from a directory; missing files mean empty parts."""
    path = Path(path)
    vocab: List[VocabularyEntry] = []
    seen = set()
    vocab_file = path / "vocabulary.tsv"
    if vocab_file.exists():
        for lineno, line in enumerate(
            vocab_file.read_text(encoding="utf-8").splitlines(), start=1
        ):
            if not line.strip():
                continue
            fields = line.split("\t")
            if len(fields) != 3:
                raise FormatError(str(vocab_file), lineno, "expected 3 tab fields")
            try:
                entry = VocabularyEntry(fields[0], fields[1], fields[2])
            except ValueError as exc:
                raise FormatError(str(vocab_file), lineno, str(exc)) from exc
            if (entry.category, entry.phrase) not in seen:
                seen.add((entry.category, entry.phrase))
                vocab.append(entry)

    patterns: List[Pattern] = []
    pattern_file = path / "patterns.txt"
    if pattern_file.exists():
        for lineno, line in enumerate(
            pattern_file.read_text(encoding="utf-8").splitlines(), start=1
        ):
            if not line.strip():
                continue
            try:
                patterns.append(Pattern(line))
            except ValueError as exc:
                raise FormatError(str(pattern_file), lineno, str(exc)) from exc

    corpus: List[AnnotatedRequirement] = []
    corpus_file = path / "corpus.jsonl"
    if corpus_file.exists():
        for lineno, line in enumerate(
            corpus_file.read_text(encoding="utf-8").splitlines(), start=1
        ):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                spans = tuple(
                    Span(s["start"], s["end"], s["key"]) for s in obj["spans"]
                )
                corpus.append(AnnotatedRequirement(obj["text"], spans))
            except (ValueError, KeyError, TypeError) as exc:
                raise FormatError(str(corpus_file), lineno, str(exc)) from exc

    return KnowledgeBase(tuple(vocab), tuple(patterns), tuple(corpus))


def save_knowledge(kb: KnowledgeBase, path) -> None:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    lines = [
        f"{e.category}\t{e.phrase}\t{e.provenance}" for e in kb.vocabulary
    ]
    (path / "vocabulary.tsv").write_text(
        "".join(line + "\n" for line in lines), encoding="utf-8"
    )
    (path / "patterns.txt").write_text(
        "".join(p.text + "\n" for p in kb.patterns), encoding="utf-8"
    )
    with (path / "corpus.jsonl").open("w", encoding="utf-8") as fh:
        for req in kb.corpus:
            fh.write(
                json.dumps(
                    {
                        "text": req.text,
                        "spans": [
                            {"start": s.start, "end": s.end, "key": s.key}
                            for s in req.spans
                        ],
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )


def seed_path() -> Path:
    return Path(resources.files("reqspec") / "data")


def load_seed_knowledge() -> KnowledgeBase:
    return load_knowledge(seed_path())
