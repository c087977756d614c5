"""Clarification validation: key classification with ensemble uncertainty.

A single linear classifier is trained on hashed character-gram features for
the five keys plus an internal "junk" class fit on synthetic garbage.  The
feature vector is augmented with a coverage score against the knowledge-base
trigram bank and a handful of surface indicators (digits, clock patterns,
plural endings, ...).  Uncertainty is measured by re-classifying under
randomly masked feature subsets: the vote share of the winning real key
determines confidence, and junk votes count against every real key, so
garbage is rejected at any claimed key.
"""
from __future__ import annotations

import random
import re
import string
import zlib
from collections import Counter
from dataclasses import dataclass
from typing import FrozenSet, Optional, Tuple

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.linear_model import LogisticRegression

from .errors import UntrainedValidator
from .knowledge import KnowledgeBase
from .slots import KEYS

JUNK = "__junk__"
CLASSES = KEYS + (JUNK,)
HASH_DIM = 512
N_INDICATORS = 8
FEATURE_DIM = HASH_DIM + 2 + N_INDICATORS
MASK_FRACTION = 0.05
JUNK_WEIGHT = 0.25
GARBAGE_ALPHABET = string.ascii_letters + string.digits + "!#@$%^&*?"

_TIME_WORDS = frozenset(
    "am pm noon midnight day night hour hours daily every between from".split()
)
_LOC_WORDS = frozenset(
    "the all near within district area zone street park station center campus".split()
)
_NUMBER_UNIT = re.compile(r"\d+(\.\d+)?\s*[a-z]")
_CLOCK = re.compile(r"\b\d{1,2}(:\d{2})?\s*(am|pm)\b")


@dataclass(frozen=True)
class ValidationResult:
    predicted_key: str
    uncertainty: float
    accepted: bool
    claimed: str

    def __post_init__(self):
        if self.accepted and self.predicted_key != self.claimed:
            raise ValueError("accepted result must match the claimed key")


def random_garbage(rng: random.Random) -> str:
    """A random 6-20 character string over letters, digits, and punctuation."""
    length = rng.randint(6, 20)
    text = "".join(rng.choice(GARBAGE_ALPHABET + "  ") for _ in range(length))
    return text.strip() or "zzzzzz"


def _indicators(text: str) -> list:
    words = text.split()
    last = words[-1] if words else ""
    return [
        1.0 if any(ch.isdigit() for ch in text) else 0.0,
        1.0 if _TIME_WORDS & set(words) else 0.0,
        1.0 if _LOC_WORDS & set(words) else 0.0,
        1.0 if last.endswith("s") and not any(ch.isdigit() for ch in last) else 0.0,
        1.0 if _NUMBER_UNIT.search(text) else 0.0,
        1.0 if _CLOCK.search(text) else 0.0,
        min(len(words), 6) / 6.0,
        1.0 if any(not ch.isalnum() and ch not in " .:/^,-" for ch in text) else 0.0,
    ]


def _trigrams(text: str) -> list:
    return [text[i : i + 3] for i in range(len(text) - 2)] or [text]


def phrase_features(phrase: str, trigram_bank: FrozenSet[str]) -> np.ndarray:
    """Hashed character grams, trigram-bank coverage, and surface indicators."""
    text = phrase.lower()
    vec = np.zeros(HASH_DIM)
    if text.strip():
        padded = f" {text} "
        for n in (2, 3):
            for i in range(len(padded) - n + 1):
                gram = padded[i : i + n]
                vec[zlib.crc32(f"{n}:{gram}".encode()) % (HASH_DIM - 2)] += 1.0
        vec[HASH_DIM - 2] = len(text.split())
        vec[HASH_DIM - 1] = len(text)
        vec /= np.linalg.norm(vec)
    if text.strip():
        grams = _trigrams(text)
        coverage = sum(g in trigram_bank for g in grams) / len(grams)
    else:
        coverage = 0.0
    extra = np.array([coverage, 1.0 - coverage] + _indicators(text))
    return np.concatenate([vec, extra])


class Validator(BaseEstimator):
    """sklearn-style estimator: fit on a knowledge base, predict keys."""

    def __init__(self, seed: int = 0, junk_samples: int = 3000):
        self.seed = seed
        self.junk_samples = junk_samples
        self.classifier_: Optional[LogisticRegression] = None
        self.trigram_bank_: Optional[FrozenSet[str]] = None
        self.version_ = 0

    def fit(self, kb: KnowledgeBase, y=None) -> "Validator":
        phrases = [(e.phrase, e.category) for e in kb.vocabulary]
        if not phrases:
            raise UntrainedValidator("knowledge base has no vocabulary")
        bank_text = " ".join(e.phrase.lower() for e in kb.vocabulary)
        bank_text += " " + " ".join(r.text.lower() for r in kb.corpus)
        bank = frozenset(_trigrams(bank_text))
        rng = random.Random(self.seed)
        samples = phrases * 3
        samples += [(random_garbage(rng), JUNK) for _ in range(self.junk_samples)]
        X = np.vstack([phrase_features(p, bank) for p, _ in samples])
        y = np.array([CLASSES.index(c) for _, c in samples])
        freq = Counter(y)
        weights = {i: len(y) / (len(CLASSES) * freq[i]) for i in freq}
        weights[CLASSES.index(JUNK)] *= JUNK_WEIGHT
        clf = LogisticRegression(
            max_iter=5000, C=200.0, class_weight=weights, random_state=self.seed
        )
        clf.fit(X, y)
        self.classifier_ = clf
        self.trigram_bank_ = bank
        self.version_ += 1
        return self

    def _require_trained(self) -> LogisticRegression:
        if self.classifier_ is None or self.trigram_bank_ is None:
            raise UntrainedValidator("validator has not been fitted")
        return self.classifier_

    def classify_with_uncertainty(
        self, phrase: str, ensemble_size: int = 16, seed: int = 0
    ) -> Tuple[str, float]:
        clf = self._require_trained()
        if ensemble_size < 2:
            raise ValueError("ensemble_size must be >= 2")
        base = phrase_features(phrase, self.trigram_bank_)
        rng = np.random.default_rng(seed)
        votes: Counter = Counter()
        n_masked = int(FEATURE_DIM * MASK_FRACTION)
        for _ in range(ensemble_size):
            vec = base.copy()
            vec[rng.choice(FEATURE_DIM, size=n_masked, replace=False)] = 0.0
            label = int(clf.predict(vec.reshape(1, -1))[0])
            votes[CLASSES[label]] += 1
        real = {k: votes.get(k, 0) for k in KEYS}
        predicted = max(KEYS, key=lambda k: (real[k], -KEYS.index(k)))
        uncertainty = 1.0 - real[predicted] / ensemble_size
        return predicted, uncertainty

    def validate_pair(
        self,
        phrase: str,
        claimed: str,
        threshold: float = 0.5,
        ensemble_size: int = 16,
        seed: int = 0,
    ) -> ValidationResult:
        if claimed not in KEYS:
            raise ValueError(f"unknown key {claimed!r}")
        if not 0.0 < threshold <= 1.0:
            raise ValueError("threshold must be in (0, 1]")
        predicted, uncertainty = self.classify_with_uncertainty(
            phrase, ensemble_size=ensemble_size, seed=seed
        )
        accepted = predicted == claimed and uncertainty <= threshold
        return ValidationResult(predicted, uncertainty, accepted, claimed)

    def predict(self, X) -> list:
        return [self.classify_with_uncertainty(p)[0] for p in X]

    def score(self, X, y) -> float:
        preds = self.predict(X)
        return float(np.mean([p == t for p, t in zip(preds, y)]))
