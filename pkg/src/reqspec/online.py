"""Guarded online learning: session caches, shielded ingestion, gated retraining.

Clarification phrases live in a short-term per-session cache so repeated
questions are answered instantly.  Every phrase is screened by the shield
before it is cached or queued; queued phrases are additionally screened by
the validator before they are committed to the knowledge base, after which
the tagger and validator are retrained on the extended knowledge.  Nothing
reaches long-term knowledge without passing both gates.
"""
from __future__ import annotations

import logging
import time
import uuid
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

from .errors import SessionNotFound
from .knowledge import KnowledgeBase, VocabularyEntry
from .shield import Shield, ShieldVerdict, train_shield
from .slots import KEYS
from .synthesis import SynthesisConfig, synthesize
from .tagger import TaggerModel, train_tagger
from .validator import Validator

logger = logging.getLogger(__name__)

FLUSH_EVERY = 50


@dataclass(frozen=True)
class CacheEntry:
    key: str
    created: float


@dataclass
class SessionCache:
    """Short-term memory for one dialogue session; dropped at session end."""

    session_id: str
    entries: Dict[str, CacheEntry] = field(default_factory=dict)

    def put(self, phrase: str, key: str) -> None:
        if key not in KEYS:
            raise ValueError(f"unknown key {key!r}")
        self.entries[phrase] = CacheEntry(key, time.time())

    def lookup(self, phrase: str) -> Optional[str]:
        entry = self.entries.get(phrase)
        return entry.key if entry else None


@dataclass(frozen=True)
class PendingClarification:
    phrase: str
    claimed_key: str
    session_id: str
    verdict: ShieldVerdict

    def __post_init__(self):
        if self.claimed_key not in KEYS:
            raise ValueError(f"unknown key {self.claimed_key!r}")
        if self.verdict.malicious:
            raise ValueError("pending clarifications require a benign shield verdict")


@dataclass(frozen=True)
class IngestResult:
    cached: bool
    verdict: ShieldVerdict


@dataclass(frozen=True)
class FlushResult:
    accepted: int
    rejected: int
    kb: KnowledgeBase
    model: TaggerModel
    validator: Validator
    new_model_version: int


def flush_and_retrain(
    kb: KnowledgeBase,
    pending: Sequence[PendingClarification],
    validator: Validator,
    threshold: float = 0.5,
    epochs: int = 5,
    seed: int = 0,
    model_version: int = 1,
) -> FlushResult:
    """Validate queued clarifications, extend the KB, retrain tagger+validator.

    Partial acceptance is the normal case: items whose phrase fails
    validation against their claimed key are counted rejected and logged,
    never learned.
    """
    accepted = rejected = 0
    new_kb = kb
    for item in pending:
        result = validator.validate_pair(item.phrase, item.claimed_key, threshold)
        if result.accepted:
            grown = new_kb.add_vocabulary(
                VocabularyEntry(item.claimed_key, item.phrase, provenance="online")
            )
            accepted += 1
            new_kb = grown
        else:
            rejected += 1
            logger.info(
                "rejected clarification for key %s (predicted %s, uncertainty %.3f)",
                item.claimed_key,
                result.predicted_key,
                result.uncertainty,
            )
    vocabs = {k: v for k, v in new_kb.vocab_by_category().items() if v}
    synthesized = synthesize(vocabs, new_kb.patterns, SynthesisConfig(lambda_=1, seed=seed))
    model = train_tagger(
        list(new_kb.corpus) + synthesized, new_kb, epochs=epochs, seed=seed
    )
    model.version = model_version + 1
    new_validator = Validator(**validator.get_params())
    new_validator.version_ = validator.version_  # fit() increments it
    new_validator.fit(new_kb)
    return FlushResult(accepted, rejected, new_kb, model, new_validator, model.version)


class OnlineLearner:
    """Owns the live snapshot (KB, tagger, validator, shield) and the queues.

    Sessions get isolated caches; the pending queue feeds ``flush`` which
    publishes a new snapshot atomically (callers holding the old model keep
    a consistent view until they re-read).
    """

    def __init__(
        self,
        kb: KnowledgeBase,
        model: TaggerModel,
        validator: Validator,
        shield: Shield,
        threshold: float = 0.5,
        flush_every: int = FLUSH_EVERY,
        epochs: int = 5,
        seed: int = 0,
    ):
        if flush_every < 1:
            raise ValueError("flush_every must be >= 1")
        self.kb = kb
        self.model = model
        self.validator = validator
        self.shield = shield
        self.threshold = threshold
        self.flush_every = flush_every
        self.epochs = epochs
        self.seed = seed
        self.sessions: Dict[str, SessionCache] = {}
        self.pending: List[PendingClarification] = []

    @classmethod
    def bootstrap(
        cls,
        kb: KnowledgeBase,
        seed: int = 0,
        epochs: int = 5,
        shield_budget: int = 2,
        **kwargs,
    ):
        vocabs = {k: v for k, v in kb.vocab_by_category().items() if v}
        synthesized = synthesize(vocabs, kb.patterns, SynthesisConfig(lambda_=1, seed=seed))
        model = train_tagger(list(kb.corpus) + synthesized, kb, epochs=epochs, seed=seed)
        validator = Validator(seed=seed).fit(kb)
        shield = train_shield(kb, seed=seed, budget=shield_budget)
        return cls(kb, model, validator, shield, epochs=epochs, seed=seed, **kwargs)

    def open_session(self) -> SessionCache:
        cache = SessionCache(session_id=uuid.uuid4().hex)
        self.sessions[cache.session_id] = cache
        return cache

    def end_session(self, session_id: str) -> None:
        # short-term memory does not outlive the session
        self._session(session_id)
        del self.sessions[session_id]

    def _session(self, session_id: str) -> SessionCache:
        cache = self.sessions.get(session_id)
        if cache is None:
            raise SessionNotFound(session_id)
        return cache

    def ingest_clarification(
        self, session_id: str, phrase: str, claimed_key: str
    ) -> IngestResult:
        """Shield-gate a clarification; cache and queue it only if benign."""
        cache = self._session(session_id)
        if claimed_key not in KEYS:
            raise ValueError(f"unknown key {claimed_key!r}")
        verdict = self.shield.shield_check(phrase)
        if verdict.malicious:
            return IngestResult(cached=False, verdict=verdict)
        cache.put(phrase, claimed_key)
        self.pending.append(
            PendingClarification(phrase, claimed_key, session_id, verdict)
        )
        if len(self.pending) >= self.flush_every:
            self.flush()
        return IngestResult(cached=True, verdict=verdict)

    def flush(self) -> FlushResult:
        result = flush_and_retrain(
            self.kb,
            self.pending,
            self.validator,
            threshold=self.threshold,
            epochs=self.epochs,
            seed=self.seed,
            model_version=self.model.version,
        )
        self.kb = result.kb
        self.model = result.model
        self.validator = result.validator
        self.pending = []
        return result
