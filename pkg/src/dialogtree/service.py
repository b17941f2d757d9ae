"""HTTP facade over sessions, verification, retraining and stats.

Plain request/response JSON over HTTP — dialog turns map 1:1 onto requests.
Every response names the tree version it was computed against; sessions
always finish on the version they started with, even across a retrain.
Errors always use the closed ApiError shape::

    {"code": "...", "message": "...", "detail": ...}

codes: invalid_request, no_tree, not_found, session_not_found,
attribute_mismatch, invalid_answer, session_closed, session_not_classified,
unknown_label, invalid_score, version_conflict, internal.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from typing import Any, Optional

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel
from starlette.exceptions import HTTPException as StarletteHTTPException

from .data import NUMERIC
from .dialog import (
    ACTIVE,
    BELIEF,
    CLASSIFIED,
    GREEDY,
    DialogSession,
    next_question,
    start_session,
    submit_answer,
)
from .errors import (
    AttributeMismatchError,
    InvalidAnswerError,
    NotFoundError,
    SchemaError,
    SessionClosedError,
    UnknownAttributeError,
    VerificationError,
)
from .persistence import Store, dumps_tree
from .tree import DecisionTree, InductionConfig, retrain_with_feedback


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str, detail: Any = None):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message
        self.detail = detail

    def response(self) -> JSONResponse:
        body = {"code": self.code, "message": self.message}
        if self.detail is not None:
            body["detail"] = self.detail
        return JSONResponse(status_code=self.status, content=body)


@dataclass
class ServiceConfig:
    dataset_name: str = "train"
    default_mode: str = GREEDY
    confirm_threshold: float = 0.5
    induction: InductionConfig = field(default_factory=InductionConfig)


class CreateSessionBody(BaseModel):
    mode: Optional[str] = None


class AnswerBody(BaseModel):
    attribute: str
    value: Any = None
    unknown: bool = False
    confidence: Optional[float] = None
    volunteered: Optional[dict[str, Any]] = None


class VerifyBody(BaseModel):
    corrected_label: str
    operator_id: str


class SatisfactionBody(BaseModel):
    score: Any


class _State:
    def __init__(self, store: Store, config: ServiceConfig):
        self.store = store
        self.config = config
        self.trees: dict[int, DecisionTree] = {}
        self.current_version: Optional[int] = store.latest_tree_version()
        self.sessions: dict[str, DialogSession] = {}
        self.session_locks: dict[str, threading.Lock] = {}
        self.registry_lock = threading.Lock()
        self.retrain_lock = threading.Lock()
        self.idempotency: dict[tuple[str, str, str], tuple[int, Any]] = {}

    def tree(self, version: int) -> DecisionTree:
        if version not in self.trees:
            self.trees[version] = self.store.load_tree(version)
        return self.trees[version]

    def current_tree(self) -> DecisionTree:
        if self.current_version is None:
            raise ApiError(409, "no_tree", "no decision tree has been trained yet")
        return self.tree(self.current_version)

    def lock_for(self, session_id: str) -> threading.Lock:
        with self.registry_lock:
            return self.session_locks.setdefault(session_id, threading.Lock())


def _coerce_value(tree: DecisionTree, attribute: str, value: Any):
    """Accept JSON-native values; numeric attributes also accept numeric strings."""
    schema = tree.attribute(attribute)
    if schema.kind == NUMERIC and isinstance(value, str):
        try:
            return float(value.replace(",", ""))
        except ValueError:
            raise InvalidAnswerError(f"{value!r} is not a number for {attribute!r}")
    if isinstance(value, bool):
        raise InvalidAnswerError(f"boolean is not a valid value for {attribute!r}")
    return value


def session_state(session: DialogSession) -> dict:
    from .persistence import turn_to_record

    question = None
    if session.status == ACTIVE and session.pending is not None:
        question = {
            "attribute": session.pending,
            "text": session.tree.attribute(session.pending).question_text,
        }
    result = None
    if session.result is not None:
        result = {"label": session.result[0], "probability": session.result[1]}
    return {
        "session_id": session.id,
        "tree_version": session.tree_version,
        "mode": session.mode,
        "status": session.status,
        "novel": session.novel,
        "question": question,
        "result": result,
        "questions": session.system_question_count(),
        "transcript": [turn_to_record(t) for t in session.transcript],
        "frontier": [[node_id, mass] for node_id, mass in session.frontier_view()],
    }


def create_app(
    store: Store, config: Optional[ServiceConfig] = None, console_dir: Optional[str] = None
) -> FastAPI:
    config = config or ServiceConfig()
    app = FastAPI(title="dialogtree service")
    state = _State(store, config)
    app.state.engine = state

    if console_dir:
        from starlette.staticfiles import StaticFiles

        app.mount("/console", StaticFiles(directory=console_dir, html=True), name="console")

    @app.exception_handler(ApiError)
    async def on_api_error(request: Request, exc: ApiError):
        return exc.response()

    @app.exception_handler(RequestValidationError)
    async def on_validation_error(request: Request, exc: RequestValidationError):
        return ApiError(422, "invalid_request", "malformed request body", exc.errors()).response()

    @app.exception_handler(StarletteHTTPException)
    async def on_http_error(request: Request, exc: StarletteHTTPException):
        code = "not_found" if exc.status_code == 404 else "invalid_request"
        return ApiError(exc.status_code, code, str(exc.detail)).response()

    @app.exception_handler(Exception)
    async def on_internal_error(request: Request, exc: Exception):
        return ApiError(500, "internal", f"{type(exc).__name__}: {exc}").response()

    def idem_key(request: Request) -> Optional[tuple[str, str, str]]:
        key = request.headers.get("Idempotency-Key")
        if not key:
            return None
        return (request.method, request.url.path, key)

    def idem_replay(request: Request) -> Optional[JSONResponse]:
        key = idem_key(request)
        if key and key in state.idempotency:
            status, payload = state.idempotency[key]
            return JSONResponse(status_code=status, content=payload)
        return None

    def idem_store(request: Request, status: int, payload: Any) -> JSONResponse:
        key = idem_key(request)
        if key:
            state.idempotency[key] = (status, payload)
        return JSONResponse(status_code=status, content=payload)

    def sync_session(session: DialogSession) -> None:
        # completed dialogs go to the append-only log exactly once
        if session.status == CLASSIFIED and not store.has_session(session.id):
            store.append_session_log(session)

    def fetch_session(session_id: str) -> DialogSession:
        session = state.sessions.get(session_id)
        if session is None:
            raise ApiError(404, "session_not_found", f"no live session {session_id!r}")
        return session

    # -- sessions --------------------------------------------------------

    @app.get("/sessions")
    def list_sessions(
        status: Optional[str] = None,
        novel: Optional[bool] = None,
        version: Optional[int] = None,
    ):
        summaries = store.list_sessions(status=status, novel=novel, version=version)
        return {
            "tree_version": state.current_version,
            "sessions": [
                {
                    "session_id": s.id,
                    "tree_version": s.tree_version,
                    "mode": s.mode,
                    "status": s.status,
                    "result": {"label": s.result[0], "probability": s.result[1]}
                    if s.result
                    else None,
                    "novel": s.novel,
                    "questions": s.questions,
                }
                for s in summaries
            ],
        }

    @app.post("/sessions")
    def create_session(body: CreateSessionBody, request: Request):
        replay = idem_replay(request)
        if replay:
            return replay
        mode = body.mode or config.default_mode
        if mode not in (GREEDY, BELIEF):
            raise ApiError(422, "invalid_request", f"unknown mode {mode!r}")
        tree = state.current_tree()
        session = start_session(
            tree, mode, confirm_threshold=config.confirm_threshold, clock=store.clock
        )
        state.sessions[session.id] = session
        sync_session(session)
        return idem_store(request, 201, session_state(session))

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        # live sessions first; completed ones can be read back from the log
        session = state.sessions.get(session_id)
        if session is not None:
            return session_state(session)
        try:
            header, turns = store.load_session(session_id)
        except NotFoundError:
            raise ApiError(404, "session_not_found", f"no session {session_id!r}")
        from .persistence import turn_to_record

        result = header.get("result")
        return {
            "session_id": header["id"],
            "tree_version": header["tree_version"],
            "mode": header["mode"],
            "status": header["status"],
            "novel": header.get("novel", False),
            "question": None,
            "result": {"label": result[0], "probability": result[1]} if result else None,
            "questions": header.get("questions", 0),
            "transcript": [turn_to_record(t) for t in turns],
            "frontier": [],
        }

    @app.post("/sessions/{session_id}/answer")
    def answer(session_id: str, body: AnswerBody, request: Request):
        replay = idem_replay(request)
        if replay:
            return replay
        session = fetch_session(session_id)
        lock = state.lock_for(session_id)
        if not lock.acquire(blocking=False):
            raise ApiError(
                409, "version_conflict", "another answer for this session is in flight"
            )
        try:
            tree = session.tree
            extras = None
            if body.volunteered:
                extras = {
                    name: _coerce_value(tree, name, value)
                    for name, value in body.volunteered.items()
                }
            if body.unknown or body.value is None:
                submit_answer(session, body.attribute, unknown=True, extras=extras)
            else:
                value = _coerce_value(tree, body.attribute, body.value)
                submit_answer(
                    session,
                    body.attribute,
                    value,
                    confidence=body.confidence if body.confidence is not None else 1.0,
                    extras=extras,
                )
            if session.status == ACTIVE:
                next_question(session)
            sync_session(session)
        except SessionClosedError as exc:
            raise ApiError(409, "session_closed", str(exc))
        except AttributeMismatchError as exc:
            raise ApiError(409, "attribute_mismatch", str(exc))
        except (InvalidAnswerError, UnknownAttributeError, SchemaError) as exc:
            raise ApiError(422, "invalid_answer", str(exc))
        finally:
            lock.release()
        return idem_store(request, 200, session_state(session))

    @app.post("/sessions/{session_id}/verify")
    def verify(session_id: str, body: VerifyBody, request: Request):
        replay = idem_replay(request)
        if replay:
            return replay
        live = state.sessions.get(session_id)
        if live is not None and live.status == ACTIVE:
            raise ApiError(
                409, "session_not_classified", f"session {session_id!r} is still active"
            )
        try:
            record = store.record_verification(session_id, body.operator_id, body.corrected_label)
        except NotFoundError as exc:
            raise ApiError(404, "session_not_found", str(exc))
        except VerificationError as exc:
            code = (
                "unknown_label"
                if "not one of the classes" in str(exc)
                else "session_not_classified"
            )
            raise ApiError(409 if code == "session_not_classified" else 422, code, str(exc))
        payload = record.to_record()
        payload["tree_version"] = state.current_version
        return idem_store(request, 201, payload)

    @app.post("/sessions/{session_id}/satisfaction")
    def satisfaction(session_id: str, body: SatisfactionBody, request: Request):
        replay = idem_replay(request)
        if replay:
            return replay
        score = body.score
        if not isinstance(score, int) or isinstance(score, bool):
            raise ApiError(422, "invalid_score", f"score must be an integer 1..5, got {score!r}")
        try:
            record = store.record_satisfaction(session_id, score)
        except ValueError as exc:
            raise ApiError(422, "invalid_score", str(exc))
        except NotFoundError as exc:
            raise ApiError(404, "session_not_found", str(exc))
        except VerificationError as exc:
            raise ApiError(409, "session_not_classified", str(exc))
        payload = dict(record)
        payload["tree_version"] = state.current_version
        return idem_store(request, 201, payload)

    # -- admin / read-only -------------------------------------------------

    @app.post("/admin/retrain")
    def retrain(request: Request):
        replay = idem_replay(request)
        if replay:
            return replay
        with state.retrain_lock:
            if state.current_version is None:
                raise ApiError(409, "no_tree", "train an initial tree before retraining")
            try:
                dataset = store.load_dataset(config.dataset_name)
            except NotFoundError as exc:
                raise ApiError(409, "no_tree", f"training dataset unavailable: {exc}")
            pending = store.pending_verifications()
            cases = {
                record.session_id: store.session_observed_values(record.session_id)
                for record in pending
            }
            try:
                tree = retrain_with_feedback(
                    dataset,
                    pending,
                    config.induction,
                    cases=cases,
                    previous_version=state.current_version,
                )
            except VerificationError as exc:
                raise ApiError(422, "unknown_label", str(exc))
            store.save_tree(tree)
            applied = store.mark_verifications_applied(tree.version)
            state.trees[tree.version] = tree
            state.current_version = tree.version
        payload = {"tree_version": tree.version, "applied_verifications": applied}
        return idem_store(request, 200, payload)

    @app.get("/tree")
    def get_tree(version: Optional[int] = None):
        if version is None:
            tree = state.current_tree()
        else:
            try:
                tree = state.tree(version)
            except NotFoundError as exc:
                raise ApiError(404, "not_found", str(exc))
        doc = json.loads(dumps_tree(tree))
        return doc

    @app.get("/stats")
    def stats():
        summaries = store.list_sessions(status="classified")
        per_version: dict[str, dict] = {}
        for summary in summaries:
            bucket = per_version.setdefault(
                str(summary.tree_version), {"sessions": 0, "question_total": 0}
            )
            bucket["sessions"] += 1
            bucket["question_total"] += summary.questions
        turn_means = {
            version: bucket["question_total"] / bucket["sessions"]
            for version, bucket in per_version.items()
        }
        records = store.verifications()
        verified_accuracy = None
        if records:
            hits = sum(1 for r in records if r.original_label == r.corrected_label)
            verified_accuracy = hits / len(records)
        return {
            "tree_version": state.current_version,
            "sessions_classified": len(summaries),
            "per_version_turn_means": turn_means,
            "verified_accuracy": verified_accuracy,
            "satisfaction_mean": store.satisfaction_mean(),
            "novel_sessions": sum(1 for s in summaries if s.novel),
        }

    return app
