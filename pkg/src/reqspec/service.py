"""HTTP facade: dialogue sessions, batch translation, knowledge administration.

Each session walks the dialogue states collecting -> confirming -> done
(confirming may fall back to collecting on revision).  Sessions pin the
model snapshot that was live when they were created, so answers stay
consistent even if a retrain happens mid-dialogue.  Admin endpoints are
guarded by a static bearer token from configuration.
"""
from __future__ import annotations

import json
import os
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

from fastapi import Depends, FastAPI, Header, HTTPException, UploadFile

from . import sastl
from .knowledge import load_knowledge, load_seed_knowledge
from .online import OnlineLearner, SessionCache
from .slots import AMBIGUOUS, KEYS, MISSING
from .tagger import TaggerModel
from .translator import TranslationResult, translate

COLLECTING = "collecting"
CONFIRMING = "confirming"
DONE = "done"

_ENV_PREFIX = "REQSPEC_"


@dataclass
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8000
    kb_path: Optional[str] = None
    admin_token: str = "change-me"
    shield_budget: int = 2
    threshold: float = 0.5
    flush_every: int = 50
    seed: int = 0

    @classmethod
    def load(cls, path: Optional[Path] = None) -> "ServiceConfig":
        """File values (JSON) first, then environment overrides."""
        values: Dict = {}
        if path is not None:
            values.update(json.loads(Path(path).read_text(encoding="utf-8")))
        for name, caster in (
            ("host", str),
            ("port", int),
            ("kb_path", str),
            ("admin_token", str),
            ("shield_budget", int),
            ("threshold", float),
            ("flush_every", int),
            ("seed", int),
        ):
            raw = os.environ.get(_ENV_PREFIX + name.upper())
            if raw is not None:
                values[name] = caster(raw)
        return cls(**values)


@dataclass
class Session:
    id: str
    cache: SessionCache
    model: TaggerModel  # snapshot pinned at creation
    model_version: int
    state: str = COLLECTING
    requirement: Optional[str] = None
    current: Optional[TranslationResult] = None
    answers: Dict[str, str] = field(default_factory=dict)
    outputs: List[str] = field(default_factory=list)


def _open_keys(result: TranslationResult) -> List[str]:
    return [
        key
        for key in KEYS
        if result.slots.get(key).status in (MISSING, AMBIGUOUS)
    ]


def _result_payload(result: Optional[TranslationResult]) -> Optional[dict]:
    if result is None:
        return None
    return {
        "slots": [
            {"key": key, "text": slot.text, "status": slot.status}
            for key, slot in result.slots.items()
        ],
        "queries": list(result.queries),
        "formula": sastl.render_formula(result.formula) if result.formula else None,
        "template": result.template,
    }


def _confirm_reply(result: TranslationResult) -> str:
    fields = "; ".join(
        f"{key}: {slot.text or '(default)'}" for key, slot in result.slots.items()
    )
    return (
        "Here is what I understood.\n"
        f"Sentence: {result.template}\n"
        f"Formula: {sastl.render_formula(result.formula)}\n"
        f"Fields: {fields}\n"
        'Reply "confirm" to accept or "revise <key>: <text>" to change a field.'
    )


def create_app(learner: OnlineLearner, config: Optional[ServiceConfig] = None) -> FastAPI:
    config = config or ServiceConfig()
    app = FastAPI(title="reqspec")
    sessions: Dict[str, Session] = {}

    def _session(session_id: str) -> Session:
        session = sessions.get(session_id)
        if session is None:
            raise HTTPException(status_code=404, detail="unknown session")
        return session

    def _admin(authorization: Optional[str] = Header(default=None)) -> None:
        if authorization != f"Bearer {config.admin_token}":
            raise HTTPException(status_code=401, detail="admin token required")

    def _session_payload(session: Session) -> dict:
        return {
            "id": session.id,
            "state": session.state,
            "model_version": session.model_version,
            "result": _result_payload(session.current),
            "outputs": list(session.outputs),
        }

    def _retranslate(session: Session) -> dict:
        result = translate(
            session.requirement, session.model, session.cache, session.answers
        )
        session.current = result
        if result.queries:
            session.state = COLLECTING
            return {"reply": result.queries[0]}
        # formula must round-trip before the session may ever reach done
        sastl.parse_formula(sastl.render_formula(result.formula))
        session.state = CONFIRMING
        return {"reply": _confirm_reply(result)}

    @app.get("/healthz")
    def healthz() -> dict:
        return {"status": "ok", "model_version": learner.model.version}

    @app.post("/sessions", status_code=201)
    def create_session() -> dict:
        cache = learner.open_session()
        session = Session(
            id=cache.session_id,
            cache=cache,
            model=learner.model,
            model_version=learner.model.version,
        )
        sessions[session.id] = session
        return _session_payload(session)

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str) -> dict:
        return _session_payload(_session(session_id))

    @app.post("/sessions/{session_id}/message")
    def post_message(session_id: str, body: dict) -> dict:
        session = _session(session_id)
        text = (body.get("text") or "").strip()
        if not text:
            raise HTTPException(status_code=422, detail="text is required")
        if session.state == DONE:
            raise HTTPException(status_code=409, detail="session is done")

        if session.requirement is None:
            session.requirement = text
            reply = _retranslate(session)["reply"]
        elif session.state == COLLECTING:
            key = _open_keys(session.current)[0]
            query = session.current.queries[0]
            ingest = learner.ingest_clarification(session.id, text, key)
            if not ingest.cached:
                reply = (
                    f"That answer was rejected by the input filter. {query}"
                )
            else:
                session.answers[key] = text
                reply = _retranslate(session)["reply"]
        else:  # confirming
            if text.lower() == "confirm":
                session.outputs.append(sastl.render_formula(session.current.formula))
                session.state = DONE
                reply = "Requirement recorded. This session is complete."
            elif text.lower().startswith("revise "):
                try:
                    key, _, value = text[len("revise "):].partition(":")
                    key = key.strip().lower()
                    value = value.strip()
                    if key not in KEYS or not value:
                        raise ValueError
                except ValueError:
                    raise HTTPException(
                        status_code=422, detail='expected "revise <key>: <text>"'
                    )
                ingest = learner.ingest_clarification(session.id, value, key)
                if not ingest.cached:
                    reply = (
                        "That answer was rejected by the input filter. "
                        f"what is the {key} for this requirement?"
                    )
                else:
                    session.answers[key] = value
                    reply = _retranslate(session)["reply"]
            else:
                reply = (
                    'Reply "confirm" to accept or "revise <key>: <text>" '
                    "to change a field."
                )
        return {
            "reply": reply,
            "state": session.state,
            "result": _result_payload(session.current),
        }

    @app.post("/translate-file")
    async def translate_file(file: UploadFile) -> dict:
        raw = (await file.read()).decode("utf-8")
        lines = [line.strip() for line in raw.splitlines() if line.strip()]
        results = []
        for line in lines:
            result = translate(line, learner.model)
            results.append({"text": line, **_result_payload(result)})
        return {"results": results}

    @app.post("/admin/flush-retrain", dependencies=[Depends(_admin)])
    def flush_retrain() -> dict:
        result = learner.flush()
        return {
            "accepted": result.accepted,
            "rejected": result.rejected,
            "new_model_version": result.new_model_version,
        }

    @app.get("/admin/shield-log", dependencies=[Depends(_admin)])
    def shield_log(since: float = 0.0) -> dict:
        return {"entries": learner.shield.log_entries(since=since)}

    return app


def build_learner(config: ServiceConfig) -> OnlineLearner:
    kb = (
        load_knowledge(Path(config.kb_path))
        if config.kb_path
        else load_seed_knowledge()
    )
    return OnlineLearner.bootstrap(
        kb,
        seed=config.seed,
        shield_budget=config.shield_budget,
        threshold=config.threshold,
        flush_every=config.flush_every,
    )
