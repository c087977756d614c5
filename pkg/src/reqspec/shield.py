"""Two-filter shield over clarification inputs.

Filter one (literal correction) spell-checks each token against the corpus
vocabulary with a Damerau-Levenshtein budget and a trigram language model;
any correction, or an uncorrectable out-of-vocabulary token, is treated as
evidence of tampering.  Filter two (inferential mapping) scores a masked
hashed-character-n-gram embedding of the corrected phrase with a small
feed-forward discriminator trained on benign phrases versus perturbations.
"""
from __future__ import annotations

import hashlib
import json
import random
import re
import time
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from sklearn.neural_network import MLPClassifier

from .errors import UntrainedDiscriminator
from .knowledge import KnowledgeBase

EMBED_DIM = 256
_WORD_RE = re.compile(r"\S+")


def damerau_levenshtein(a: str, b: str) -> int:
    """Unrestricted Damerau-Levenshtein distance (a true metric)."""
    da: Dict[str, int] = {}
    maxdist = len(a) + len(b)
    d = [[0] * (len(b) + 2) for _ in range(len(a) + 2)]
    d[0][0] = maxdist
    for i in range(len(a) + 1):
        d[i + 1][0] = maxdist
        d[i + 1][1] = i
    for j in range(len(b) + 1):
        d[0][j + 1] = maxdist
        d[1][j + 1] = j
    for i in range(1, len(a) + 1):
        db = 0
        for j in range(1, len(b) + 1):
            k = da.get(b[j - 1], 0)
            l = db
            if a[i - 1] == b[j - 1]:
                cost = 0
                db = j
            else:
                cost = 1
            d[i + 1][j + 1] = min(
                d[i][j] + cost,  # substitution
                d[i + 1][j] + 1,  # insertion
                d[i][j + 1] + 1,  # deletion
                d[k][l] + (i - k - 1) + 1 + (j - l - 1),  # transposition
            )
        da[a[i - 1]] = i
    return d[len(a) + 1][len(b) + 1]


class NGramLM:
    """Word trigram counts over the requirement corpus, add-one smoothed."""

    def __init__(self, order: int = 3):
        if order < 1:
            raise ValueError("order must be >= 1")
        self.order = order
        self.counts: Dict[Tuple[str, ...], int] = {}
        self.vocabulary: set = set()

    def fit(self, sentences: Iterable[Sequence[str]]) -> "NGramLM":
        for sent in sentences:
            tokens = ["<s>"] * (self.order - 1) + [t.lower() for t in sent]
            self.vocabulary.update(tokens[self.order - 1:])
            for n in range(1, self.order + 1):
                for i in range(len(tokens) - n + 1):
                    gram = tuple(tokens[i:i + n])
                    self.counts[gram] = self.counts.get(gram, 0) + 1
        return self

    def logprob(self, word: str, context: Sequence[str]) -> float:
        word = word.lower()
        context = tuple(w.lower() for w in context)[-(self.order - 1):]
        v = max(len(self.vocabulary), 1)
        num = self.counts.get(context + (word,), 0) + 1
        den = self.counts.get(context, 0) + v
        return float(np.log(num / den))


@dataclass(frozen=True)
class FilterResult:
    triggered: bool
    corrected: Optional[str] = None
    score: float = 0.0


@dataclass(frozen=True)
class ShieldVerdict:
    malicious: bool
    literal: FilterResult
    inferential: FilterResult

    def __post_init__(self):
        if self.malicious != (self.literal.triggered or self.inferential.triggered):
            raise ValueError("verdict must equal the OR of its filter triggers")


def literal_correction(phrase: str, lm: NGramLM, budget: int = 2) -> FilterResult:
    """Spell-check each token; any repair or irreparable token triggers."""
    if budget < 0:
        raise ValueError("budget must be >= 0")
    tokens = _WORD_RE.findall(phrase)
    context: List[str] = ["<s>"] * (lm.order - 1)
    out: List[str] = []
    triggered = False
    for token in tokens:
        word = token.strip(".,;:!?\"'()")
        if not word or word.lower() in lm.vocabulary or not any(
            ch.isalnum() for ch in word
        ):
            out.append(token)
            context.append(word.lower() if word else token.lower())
            continue
        # vocabulary membership is case-insensitive; the edit distance is
        # measured on the raw token so leet-case tampering costs full edits
        best = None
        for cand in lm.vocabulary:
            if cand == "<s>" or damerau_levenshtein(word, cand) > budget:
                continue
            lp = lm.logprob(cand, context)
            if best is None or lp > best[1] or (lp == best[1] and cand < best[0]):
                best = (cand, lp)
        triggered = True  # out-of-vocabulary token: repaired or irreparable
        if best is None:
            out.append(token)
            context.append(word.lower())
        else:
            out.append(token.replace(word, best[0]))
            context.append(best[0])
    corrected = " ".join(out) if tokens else phrase
    return FilterResult(triggered=triggered, corrected=corrected)


def embed_phrase(
    phrase: str, mask: Optional[np.ndarray] = None, dim: int = EMBED_DIM
) -> np.ndarray:
    """Hashed char-2/3-gram counts plus token-count and length, L2-normalized."""
    if mask is not None and mask.shape != (dim,):
        raise ValueError("mask dimension mismatch")
    vec = np.zeros(dim)
    text = phrase.lower()
    if text.strip():
        padded = f" {text} "
        for n in (2, 3):
            for i in range(len(padded) - n + 1):
                gram = padded[i:i + n]
                idx = zlib.crc32(f"{n}:{gram}".encode("utf-8")) % (dim - 2)
                vec[idx] += 1.0
        for word in text.split():
            idx = zlib.crc32(f"w:{word}".encode("utf-8")) % (dim - 2)
            vec[idx] += 2.0
        vec[dim - 2] = len(text.split())
        vec[dim - 1] = len(text)
        vec /= np.linalg.norm(vec)
    if mask is not None:
        vec = vec * mask
    return vec


def inferential_mapping(vector: np.ndarray, discriminator) -> FilterResult:
    if discriminator is None or not hasattr(discriminator, "classes_"):
        raise UntrainedDiscriminator("discriminator has not been trained")
    score = float(discriminator.predict_proba(vector.reshape(1, -1))[0][1])
    return FilterResult(triggered=score > 0.5, score=score)


# ---------------------------------------------------------------------------
# training-time perturbation source (kept local so the attack harness can
# depend on this module without a cycle)

_HOMOGLYPHS = {"o": "0", "0": "o", "l": "1", "1": "l", "e": "3", "3": "e"}


def perturb_token(word: str, rng: random.Random) -> str:
    if len(word) < 2:
        return word + rng.choice("xz1")
    ops = ["swap", "delete", "insert", "glyph", "case"]
    op = rng.choice(ops)
    i = rng.randrange(len(word) - 1)
    if op == "swap":
        return word[:i] + word[i + 1] + word[i] + word[i + 2:]
    if op == "delete":
        return word[:i] + word[i + 1:]
    if op == "insert":
        return word[:i] + rng.choice("abcdefghijklmnopqrstuvwxyz") + word[i:]
    if op == "glyph":
        targets = [j for j, ch in enumerate(word) if ch.lower() in _HOMOGLYPHS]
        if not targets:
            return word[:i] + word[i + 1] + word[i] + word[i + 2:]
        j = rng.choice(targets)
        return word[:j] + _HOMOGLYPHS[word[j].lower()] + word[j + 1:]
    j = rng.randrange(len(word))
    ch = word[j]
    return word[:j] + (ch.upper() if ch.islower() else ch.lower()) + word[j + 1:]


def perturb_phrase(phrase: str, rng: random.Random, n_edits: int = 2) -> str:
    words = phrase.split()
    if not words:
        return phrase
    for _ in range(n_edits):
        i = rng.randrange(len(words))
        words[i] = perturb_token(words[i], rng)
    return " ".join(words)


@dataclass
class Shield:
    lm: NGramLM
    discriminator: object
    mask: np.ndarray
    budget: int = 2
    audit_path: Optional[Path] = None
    debug: bool = False
    _log: List[dict] = field(default_factory=list)

    def shield_check(self, phrase: str) -> ShieldVerdict:
        literal = literal_correction(phrase, self.lm, self.budget)
        if literal.triggered:
            inferential = FilterResult(triggered=False, score=0.0)
        else:
            vec = embed_phrase(literal.corrected or phrase, self.mask)
            inferential = inferential_mapping(vec, self.discriminator)
        verdict = ShieldVerdict(
            malicious=literal.triggered or inferential.triggered,
            literal=literal,
            inferential=inferential,
        )
        self._audit(phrase, verdict)
        return verdict

    def _audit(self, phrase: str, verdict: ShieldVerdict) -> None:
        record = {
            "phrase_sha256": hashlib.sha256(phrase.encode("utf-8")).hexdigest(),
            "malicious": verdict.malicious,
            "literal_triggered": verdict.literal.triggered,
            "inferential_triggered": verdict.inferential.triggered,
            "inferential_score": round(verdict.inferential.score, 6),
            "ts": time.time(),
        }
        if self.debug:
            record["phrase"] = phrase
        self._log.append(record)
        if self.audit_path is not None:
            with open(self.audit_path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(record) + "\n")

    def log_entries(self, since: float = 0.0) -> List[dict]:
        return [r for r in self._log if r["ts"] >= since]


def _benign_phrases(kb: KnowledgeBase) -> List[str]:
    phrases = [e.phrase for e in kb.vocabulary]
    phrases.extend(req.text for req in kb.corpus)
    return phrases


def train_shield(
    kb: KnowledgeBase,
    seed: int = 0,
    budget: int = 2,
    audit_path: Optional[Path] = None,
    debug: bool = False,
) -> Shield:
    """Fit the language model and discriminator from a knowledge base."""
    lm = NGramLM(order=3)
    sentences = [_WORD_RE.findall(req.text) for req in kb.corpus]
    sentences.extend(_WORD_RE.findall(e.phrase) for e in kb.vocabulary)
    lm.fit(s for s in sentences if s)

    rng = random.Random(seed)
    # secret per-deployment weight mask; embeddings leaving the embedder are
    # unusable without it
    mask_rng = np.random.default_rng(seed)
    mask = mask_rng.uniform(0.25, 1.75, EMBED_DIM)
    benign = [p for p in _benign_phrases(kb) if p.strip()]
    malicious = [perturb_phrase(p, rng) for p in benign for _ in range(2)]
    # synonym-free random word soup rounds out the malicious side
    alphabet = "abcdefghijklmnopqrstuvwxyz0123456789!#@"
    malicious.extend(
        "".join(rng.choice(alphabet) for _ in range(rng.randint(4, 20)))
        for _ in range(len(benign))
    )
    benign_train = benign * 3  # balance the classes
    X = np.vstack([embed_phrase(p, mask) for p in benign_train + malicious])
    y = np.array([0] * len(benign_train) + [1] * len(malicious))
    disc = MLPClassifier(
        hidden_layer_sizes=(64,), max_iter=3000, random_state=seed
    )
    disc.fit(X, y)
    return Shield(
        lm=lm,
        discriminator=disc,
        mask=mask,
        budget=budget,
        audit_path=Path(audit_path) if audit_path else None,
        debug=debug,
    )
