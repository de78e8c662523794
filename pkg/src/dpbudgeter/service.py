"""HTTP surface for budgeting sessions.

JSON in, JSON out; every engine error maps to a machine-readable code.
Mutating requests on one session are serialized behind a per-session lock;
distinct sessions proceed concurrently. With a store directory configured,
every mutation is persisted, and finalize persists the spent budget before
the response leaves the process, so a crash cannot enable double spending.
"""

from __future__ import annotations

import threading
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from . import budget, session as sessions
from .data import load_csv
from .errors import BudgeterError, UnknownSessionError
from .rng import RandomSource
from .variables import StatisticKind, VariableKind, VariableMetadata


class MetadataBody(BaseModel):
    kind: str
    lower: float | None = None
    upper: float | None = None
    categories: list[str] | None = None
    grid_cells: int | None = None

    def to_metadata(self) -> VariableMetadata:
        return VariableMetadata(
            kind=VariableKind(self.kind),
            lower=self.lower,
            upper=self.upper,
            categories=tuple(self.categories) if self.categories is not None else None,
            grid_cells=self.grid_cells,
        )


class CreateSessionBody(BaseModel):
    dataset_path: str
    epsilon: float
    delta: float
    population_size: int | None = None
    acknowledge_warnings: bool = False


class ParamsBody(BaseModel):
    epsilon: float | None = None
    delta: float | None = None
    population_size: int | None = None
    acknowledge_warnings: bool = False


class ConfidenceBody(BaseModel):
    alpha: float


class ReserveBody(BaseModel):
    fraction: float


class AddStatisticBody(BaseModel):
    variable: str
    kind: str
    metadata: MetadataBody
    p: float | None = None


class ErrorTargetBody(BaseModel):
    value: float


class HoldBody(BaseModel):
    held: bool


class FinalizeBody(BaseModel):
    zero_noise: bool = False
    seed: int | None = None


class SessionStore:
    """In-memory sessions with per-session write locks and optional persistence."""

    def __init__(self, directory: Path | None = None):
        self._sessions: dict[str, sessions.Session] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._registry_lock = threading.Lock()
        self.directory = directory
        if directory is not None:
            directory.mkdir(parents=True, exist_ok=True)

    def add(self, session: sessions.Session) -> None:
        with self._registry_lock:
            self._sessions[session.id] = session
            self._locks[session.id] = threading.Lock()
        self.persist(session)

    def get(self, session_id: str) -> sessions.Session:
        try:
            return self._sessions[session_id]
        except KeyError:
            raise UnknownSessionError(f"no session with id {session_id!r}") from None

    def lock(self, session_id: str) -> threading.Lock:
        self.get(session_id)
        return self._locks[session_id]

    def persist(self, session: sessions.Session) -> None:
        if self.directory is not None:
            sessions.save_session_file(session, self.directory / f"{session.id}.json")


def create_app(store_dir: str | Path | None = None, allow_test_rng: bool = False) -> FastAPI:
    app = FastAPI(title="dp-budgeter", version=sessions.ENGINE_VERSION)
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    store = SessionStore(Path(store_dir) if store_dir is not None else None)
    app.state.store = store
    app.state.allow_test_rng = allow_test_rng

    @app.exception_handler(BudgeterError)
    async def engine_error(_request: Request, exc: BudgeterError) -> JSONResponse:
        payload = {"code": exc.code, "message": str(exc)}
        payload.update(exc.details)
        return JSONResponse(status_code=exc.http_status, content={"error": payload})

    @app.get("/params/recommendations")
    def recommendations() -> dict:
        tiers = []
        for tier, description in budget.TIER_DESCRIPTIONS.items():
            preset = budget.TIER_PRESETS.get(tier)
            tiers.append(
                {
                    "tier": tier,
                    "description": description,
                    "epsilon": preset.epsilon if preset else None,
                    "delta": preset.delta if preset else None,
                    "supported": preset is not None,
                }
            )
        return {"tiers": tiers}

    @app.post("/sessions", status_code=201)
    def create(body: CreateSessionBody) -> dict:
        handle = load_csv(body.dataset_path)
        session = sessions.create_session(
            handle,
            epsilon=body.epsilon,
            delta=body.delta,
            population_size=body.population_size,
            acknowledge_warnings=body.acknowledge_warnings,
        )
        store.add(session)
        return sessions.session_view(session)

    @app.get("/sessions/{session_id}")
    def show(session_id: str) -> dict:
        return sessions.session_view(store.get(session_id))

    @app.put("/sessions/{session_id}/params")
    def params(session_id: str, body: ParamsBody) -> dict:
        session = store.get(session_id)
        with store.lock(session_id):
            kwargs: dict = {
                "epsilon": body.epsilon,
                "delta": body.delta,
                "acknowledge_warnings": body.acknowledge_warnings,
            }
            if "population_size" in body.model_fields_set:
                kwargs["population_size"] = body.population_size
            warnings = sessions.update_params(session, **kwargs)
            store.persist(session)
        view = sessions.session_view(session)
        view["warnings"] = warnings
        return view

    @app.put("/sessions/{session_id}/confidence")
    def confidence(session_id: str, body: ConfidenceBody) -> dict:
        session = store.get(session_id)
        with store.lock(session_id):
            sessions.set_confidence(session, body.alpha)
            store.persist(session)
        return sessions.session_view(session)

    @app.put("/sessions/{session_id}/reserve")
    def reserve(session_id: str, body: ReserveBody) -> dict:
        session = store.get(session_id)
        with store.lock(session_id):
            warnings = sessions.set_reserve(session, body.fraction)
            store.persist(session)
        view = sessions.session_view(session)
        view["warnings"] = warnings
        return view

    @app.post("/sessions/{session_id}/statistics", status_code=201)
    def add_stat(session_id: str, body: AddStatisticBody) -> dict:
        session = store.get(session_id)
        with store.lock(session_id):
            spec = sessions.add_statistic(
                session,
                variable=body.variable,
                kind=StatisticKind(body.kind),
                metadata=body.metadata.to_metadata(),
                p=body.p,
            )
            store.persist(session)
        view = sessions.session_view(session)
        view["created_statistic_id"] = spec.id
        return view

    @app.delete("/sessions/{session_id}/statistics/{stat_id}")
    def delete_stat(session_id: str, stat_id: str) -> dict:
        session = store.get(session_id)
        with store.lock(session_id):
            sessions.delete_statistic(session, stat_id)
            store.persist(session)
        return sessions.session_view(session)

    @app.put("/sessions/{session_id}/statistics/{stat_id}/error-target")
    def error_target(session_id: str, stat_id: str, body: ErrorTargetBody) -> dict:
        session = store.get(session_id)
        with store.lock(session_id):
            sessions.set_error_target(session, stat_id, body.value)
            store.persist(session)
        return sessions.session_view(session)

    @app.put("/sessions/{session_id}/statistics/{stat_id}/hold")
    def hold(session_id: str, stat_id: str, body: HoldBody) -> dict:
        session = store.get(session_id)
        with store.lock(session_id):
            sessions.toggle_hold(session, stat_id, body.held)
            store.persist(session)
        return sessions.session_view(session)

    @app.post("/sessions/{session_id}/finalize")
    def finalize(session_id: str, body: FinalizeBody | None = None) -> dict:
        session = store.get(session_id)
        body = body or FinalizeBody()
        rng = _pick_rng(body, app.state.allow_test_rng)
        with store.lock(session_id):
            sessions.finalize(session, rng)
            # Spend is on disk before the response leaves the process.
            store.persist(session)
        return sessions.releases_document(session)

    @app.get("/sessions/{session_id}/releases")
    def releases(session_id: str) -> dict:
        return sessions.releases_document(store.get(session_id))

    return app


def _pick_rng(body: FinalizeBody, allow_test_rng: bool) -> RandomSource:
    if body.zero_noise or body.seed is not None:
        if not allow_test_rng:
            raise BudgeterError(
                "this server does not accept test randomness modes"
            )
        return (
            RandomSource.zero_noise()
            if body.zero_noise
            else RandomSource.seeded(body.seed)
        )
    return RandomSource.secure()
