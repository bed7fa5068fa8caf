"""Thin HTTP layer over the session store.

POST /sessions                    create a session from a campaign config
GET  /sessions/{sid}/queries      pending queries with rollout payloads
POST /sessions/{sid}/feedback     submit one verdict
GET  /sessions/{sid}/rollouts/{rid}
GET  /sessions/{sid}/report
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware

from .configio import ConfigError
from .service import (
    DuplicateSubmissionError,
    SessionCompletedError,
    SessionStore,
    StaleVersionError,
    UnknownQueryError,
    UnknownSessionError,
)


def create_app(store: SessionStore | None = None) -> FastAPI:
    store = store or SessionStore()
    app = FastAPI(title="safetune campaign service")
    app.add_middleware(CORSMiddleware, allow_origins=["*"], allow_methods=["*"],
                       allow_headers=["*"])
    app.state.store = store

    @app.post("/sessions", status_code=201)
    def create_session(config: dict):
        try:
            sid = store.create_session(config)
        except ConfigError as e:
            raise HTTPException(status_code=422, detail=str(e))
        return {"session_id": sid}

    @app.get("/sessions")
    def list_sessions():
        return {"sessions": store.list_sessions()}

    @app.get("/sessions/{sid}/queries")
    def next_queries(sid: str):
        try:
            return store.next_queries(sid)
        except UnknownSessionError as e:
            raise HTTPException(status_code=404, detail=str(e))

    @app.post("/sessions/{sid}/feedback")
    def submit_feedback(sid: str, submission: dict):
        try:
            return store.submit_feedback(sid, submission)
        except UnknownSessionError as e:
            raise HTTPException(status_code=404, detail=str(e))
        except UnknownQueryError as e:
            raise HTTPException(status_code=404, detail=str(e))
        except DuplicateSubmissionError as e:
            raise HTTPException(status_code=409, detail=str(e))
        except StaleVersionError as e:
            raise HTTPException(status_code=409, detail=str(e))
        except SessionCompletedError as e:
            raise HTTPException(status_code=409, detail=str(e))
        except ValueError as e:
            raise HTTPException(status_code=422, detail=str(e))

    @app.get("/sessions/{sid}/rollouts/{rid}")
    def get_rollout(sid: str, rid: str):
        try:
            return store.get_rollout(sid, rid)
        except UnknownSessionError as e:
            raise HTTPException(status_code=404, detail=str(e))
        except UnknownQueryError as e:
            raise HTTPException(status_code=404, detail=str(e))

    @app.get("/sessions/{sid}/report")
    def get_report(sid: str):
        try:
            return store.get_report(sid)
        except UnknownSessionError as e:
            raise HTTPException(status_code=404, detail=str(e))

    return app
