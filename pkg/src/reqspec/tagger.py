"""Averaged structured perceptron over BIO tags for the five requirement keys.

Replaces heavyweight sequence models; knowledge injection happens through
gazetteer membership features tied to the knowledge-base vocabulary.
"""
from __future__ import annotations

import random
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

from sklearn.base import BaseEstimator

from .errors import EmptyCorpus
from .knowledge import AnnotatedRequirement, KnowledgeBase, Span
from .slots import KEYS

TAGS: Tuple[str, ...] = ("O",) + tuple(
    f"{prefix}-{key}" for key in KEYS for prefix in ("B", "I")
)
_TAG_INDEX = {tag: i for i, tag in enumerate(TAGS)}

_TOKEN_RE = re.compile(r"\S+")
_PUNCT = ".,;:!?\"'()"


def tokenize(text: str) -> List[Tuple[str, int, int]]:
    """Whitespace tokens with leading/trailing punctuation split off."""
    out: List[Tuple[str, int, int]] = []
    for m in _TOKEN_RE.finditer(text):
        word, start, end = m.group(), m.start(), m.end()
        while len(word) > 1 and word[0] in _PUNCT:
            out.append((word[0], start, start + 1))
            word, start = word[1:], start + 1
        trailing = []
        while len(word) > 1 and word[-1] in _PUNCT:
            trailing.append((word[-1], end - 1, end))
            word, end = word[:-1], end - 1
        out.append((word, start, end))
        out.extend(reversed(trailing))
    return out


@dataclass(frozen=True)
class TagSequence:
    tokens: Tuple[str, ...]
    tags: Tuple[str, ...]
    offsets: Tuple[Tuple[int, int], ...] = ()

    def __post_init__(self):
        if len(self.tokens) != len(self.tags):
            raise ValueError("tokens and tags must align")
        prev = "O"
        for tag in self.tags:
            if tag.startswith("I-"):
                key = tag[2:]
                if prev not in (f"B-{key}", f"I-{key}"):
                    raise ValueError(f"invalid BIO transition {prev} -> {tag}")
            prev = tag

    def spans(self) -> List[Tuple[int, int, str]]:
        """Character spans per detected key phrase."""
        out: List[Tuple[int, int, str]] = []
        current: Optional[Tuple[int, int, str]] = None
        for (start, end), tag in zip(self.offsets, self.tags):
            if tag.startswith("B-"):
                if current:
                    out.append(current)
                current = (start, end, tag[2:])
            elif tag.startswith("I-") and current:
                current = (current[0], end, current[2])
            else:
                if current:
                    out.append(current)
                current = None
        if current:
            out.append(current)
        return out


@dataclass(frozen=True)
class EvalMetrics:
    token_acc: float
    sent_acc: float
    precision: float
    recall: float
    f1: float
    per_key_f1: Dict[str, float]


Gazetteer = Dict[str, FrozenSet[str]]


def build_gazetteer(kb: KnowledgeBase) -> Gazetteer:
    gaz: Dict[str, set] = {key: set() for key in KEYS}
    for entry in kb.vocabulary:
        for token, _, _ in tokenize(entry.phrase):
            gaz[entry.category].add(token.lower())
    return {key: frozenset(v) for key, v in gaz.items()}


def _shape(word: str) -> str:
    out = []
    for ch in word:
        if ch.isupper():
            ch = "X"
        elif ch.islower():
            ch = "x"
        elif ch.isdigit():
            ch = "d"
        if not out or out[-1] != ch:
            out.append(ch)
    return "".join(out)


def token_features(
    tokens: Sequence[str], i: int, gazetteer: Gazetteer
) -> List[str]:
    word = tokens[i]
    low = word.lower()
    feats = [
        f"w={low}",
        f"shape={_shape(word)}",
        f"pre={low[:3]}",
        f"suf={low[-3:]}",
    ]
    if any(ch.isdigit() for ch in word):
        feats.append("hasdigit")
    if "/" in word or "^" in word or "%" in word:
        feats.append("unitish")
    prev = tokens[i - 1].lower() if i > 0 else "<s>"
    nxt = tokens[i + 1].lower() if i + 1 < len(tokens) else "</s>"
    feats.append(f"prev={prev}")
    feats.append(f"next={nxt}")
    feats.append(f"bigram={prev}|{low}")
    for key, entries in gazetteer.items():
        if low in entries:
            feats.append(f"gaz={key}")
        if prev in entries:
            feats.append(f"gazprev={key}")
        if nxt in entries:
            feats.append(f"gaznext={key}")
    return feats


@dataclass
class TaggerModel:
    weights: Dict[Tuple[str, str], float] = field(default_factory=dict)
    transitions: Dict[Tuple[str, str], float] = field(default_factory=dict)
    gazetteer: Gazetteer = field(default_factory=dict)
    version: int = 1
    seed: int = 0


def _allowed(prev: str, tag: str) -> bool:
    if tag.startswith("I-"):
        key = tag[2:]
        return prev in (f"B-{key}", f"I-{key}")
    return True


def _viterbi(
    feats: List[List[str]],
    weights: Dict[Tuple[str, str], float],
    transitions: Dict[Tuple[str, str], float],
) -> List[str]:
    n = len(feats)
    if n == 0:
        return []
    emit = [
        {tag: sum(weights.get((f, tag), 0.0) for f in feats[i]) for tag in TAGS}
        for i in range(n)
    ]
    score = {}
    back: List[Dict[str, str]] = [{} for _ in range(n)]
    for tag in TAGS:
        if tag.startswith("I-"):
            score[tag] = float("-inf")
        else:
            score[tag] = emit[0][tag] + transitions.get(("<s>", tag), 0.0)
    for i in range(1, n):
        new_score = {}
        for tag in TAGS:
            best_prev, best_val = None, float("-inf")
            for prev in TAGS:
                if not _allowed(prev, tag):
                    continue
                val = score[prev] + transitions.get((prev, tag), 0.0)
                # ties resolved toward the lowest tag index for determinism
                if val > best_val:
                    best_prev, best_val = prev, val
            new_score[tag] = best_val + emit[i][tag]
            back[i][tag] = best_prev
        score = new_score
    last = max(TAGS, key=lambda t: (score[t], -_TAG_INDEX[t]))
    tags = [last]
    for i in range(n - 1, 0, -1):
        tags.append(back[i][tags[-1]])
    return list(reversed(tags))


def gold_tags(req: AnnotatedRequirement) -> Tuple[List[str], List[str]]:
    toks = tokenize(req.text)
    tags = ["O"] * len(toks)
    for span in req.spans:
        first = True
        for i, (_, start, end) in enumerate(toks):
            if start >= span.start and end <= span.end:
                tags[i] = ("B-" if first else "I-") + span.key
                first = False
    return [t[0] for t in toks], tags


def train_tagger(
    corpus: Sequence[AnnotatedRequirement],
    kb: KnowledgeBase,
    epochs: int = 5,
    seed: int = 0,
) -> TaggerModel:
    """Averaged perceptron training with seeded per-epoch shuffling."""
    if not corpus:
        raise EmptyCorpus("training corpus is empty")
    if epochs < 1:
        raise ValueError("epochs must be >= 1")
    gazetteer = build_gazetteer(kb)

    prepared = []
    for req in corpus:
        tokens, gold = gold_tags(req)
        feats = [token_features(tokens, i, gazetteer) for i in range(len(tokens))]
        prepared.append((feats, gold))

    weights: Dict[Tuple[str, str], float] = {}
    totals: Dict[Tuple[str, str], float] = {}
    stamps: Dict[Tuple[str, str], int] = {}
    transitions: Dict[Tuple[str, str], float] = {}
    t_totals: Dict[Tuple[str, str], float] = {}
    t_stamps: Dict[Tuple[str, str], int] = {}
    step = 0

    def bump(table, tot, stamp, key, delta):
        tot[key] = tot.get(key, 0.0) + (step - stamp.get(key, 0)) * table.get(key, 0.0)
        stamp[key] = step
        table[key] = table.get(key, 0.0) + delta

    rng = random.Random(seed)
    order = list(range(len(prepared)))
    for _ in range(epochs):
        rng.shuffle(order)
        for idx in order:
            feats, gold = prepared[idx]
            pred = _viterbi(feats, weights, transitions)
            step += 1
            if pred == gold:
                continue
            for i, fs in enumerate(feats):
                if pred[i] == gold[i]:
                    continue
                for f in fs:
                    bump(weights, totals, stamps, (f, gold[i]), 1.0)
                    bump(weights, totals, stamps, (f, pred[i]), -1.0)
            prev_g = prev_p = "<s>"
            for g, p in zip(gold, pred):
                if (prev_g, g) != (prev_p, p):
                    bump(transitions, t_totals, t_stamps, (prev_g, g), 1.0)
                    bump(transitions, t_totals, t_stamps, (prev_p, p), -1.0)
                prev_g, prev_p = g, p

    averaged = {}
    for key, w in weights.items():
        total = totals.get(key, 0.0) + (step - stamps.get(key, 0)) * w
        avg = total / step
        if avg:
            averaged[key] = avg
    averaged_t = {}
    for key, w in transitions.items():
        total = t_totals.get(key, 0.0) + (step - t_stamps.get(key, 0)) * w
        avg = total / step
        if avg:
            averaged_t[key] = avg
    return TaggerModel(averaged, averaged_t, gazetteer, version=1, seed=seed)


def tag(model: TaggerModel, text: str) -> TagSequence:
    toks = tokenize(text)
    tokens = [t[0] for t in toks]
    feats = [
        token_features(tokens, i, model.gazetteer) for i in range(len(tokens))
    ]
    tags = _viterbi(feats, model.weights, model.transitions)
    return TagSequence(
        tuple(tokens), tuple(tags), tuple((s, e) for _, s, e in toks)
    )


def evaluate_tagger(
    model: TaggerModel, corpus: Sequence[AnnotatedRequirement]
) -> EvalMetrics:
    if not corpus:
        raise EmptyCorpus("evaluation corpus is empty")
    total_tokens = correct_tokens = 0
    correct_sents = 0
    tp: Dict[str, int] = {k: 0 for k in KEYS}
    fp: Dict[str, int] = {k: 0 for k in KEYS}
    fn: Dict[str, int] = {k: 0 for k in KEYS}
    for req in corpus:
        _, gold = gold_tags(req)
        seq = tag(model, req.text)
        pred = list(seq.tags)
        total_tokens += len(gold)
        sent_correct = sum(g == p for g, p in zip(gold, pred))
        correct_tokens += sent_correct
        if sent_correct == len(gold):
            correct_sents += 1
        gold_spans = {(s.start, s.end, s.key) for s in req.spans}
        pred_spans = set(seq.spans())
        for span in pred_spans:
            if span in gold_spans:
                tp[span[2]] += 1
            else:
                fp[span[2]] += 1
        for span in gold_spans - pred_spans:
            fn[span[2]] += 1

    def prf(tp_, fp_, fn_):
        p = tp_ / (tp_ + fp_) if tp_ + fp_ else 0.0
        r = tp_ / (tp_ + fn_) if tp_ + fn_ else 0.0
        f = 2 * p * r / (p + r) if p + r else 0.0
        return p, r, f

    per_key = {k: prf(tp[k], fp[k], fn[k])[2] for k in KEYS}
    precision, recall, f1 = prf(
        sum(tp.values()), sum(fp.values()), sum(fn.values())
    )
    return EvalMetrics(
        token_acc=correct_tokens / total_tokens,
        sent_acc=correct_sents / len(corpus),
        precision=precision,
        recall=recall,
        f1=f1,
        per_key_f1=per_key,
    )


# ---------------------------------------------------------------------------
# serialization


def save_model(model: TaggerModel, path) -> None:
    path = Path(path)
    lines = [f"#version\t{model.version}", f"#seed\t{model.seed}"]
    rows = []
    for (feat, tag_), w in model.weights.items():
        rows.append(f"{feat}\t{tag_}\t{w!r}")
    for (prev, tag_), w in model.transitions.items():
        rows.append(f"__trans__:{prev}\t{tag_}\t{w!r}")
    for key, entries in model.gazetteer.items():
        for token in sorted(entries):
            rows.append(f"__gaz__:{key}\t{token}\t0")
    lines.extend(sorted(rows))
    path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")


def load_model(path) -> TaggerModel:
    path = Path(path)
    weights: Dict[Tuple[str, str], float] = {}
    transitions: Dict[Tuple[str, str], float] = {}
    gaz: Dict[str, set] = {key: set() for key in KEYS}
    version = 1
    seed = 0
    for line in path.read_text(encoding="utf-8").splitlines():
        if not line:
            continue
        if line.startswith("#"):
            name, value = line[1:].split("\t")
            if name == "version":
                version = int(value)
            elif name == "seed":
                seed = int(value)
            continue
        feat, tag_, w = line.split("\t")
        if feat.startswith("__trans__:"):
            transitions[(feat.split(":", 1)[1], tag_)] = float(w)
        elif feat.startswith("__gaz__:"):
            gaz[feat.split(":", 1)[1]].add(tag_)
        else:
            weights[(feat, tag_)] = float(w)
    return TaggerModel(
        weights,
        transitions,
        {k: frozenset(v) for k, v in gaz.items()},
        version=version,
        seed=seed,
    )


class SequenceTagger(BaseEstimator):
    """Estimator-style wrapper: fit on annotated requirements, predict spans."""

    def __init__(self, epochs: int = 5, seed: int = 0):
        self.epochs = epochs
        self.seed = seed

    def fit(self, X: Sequence[AnnotatedRequirement], y=None, kb: Optional[KnowledgeBase] = None):
        self.model_ = train_tagger(
            X, kb or KnowledgeBase(), epochs=self.epochs, seed=self.seed
        )
        return self

    def predict(self, X: Sequence[str]) -> List[TagSequence]:
        return [tag(self.model_, text) for text in X]

    def score(self, X: Sequence[AnnotatedRequirement], y=None) -> float:
        return evaluate_tagger(self.model_, X).token_acc
