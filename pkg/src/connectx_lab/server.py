"""HTTP game service: session-keeping API for human-vs-agent play, plus static UI hosting.

Sessions live in memory. Per-session operations are mutually exclusive
(concurrent move posts to one session: exactly one wins, the rest get 409) and
agent computation runs on worker threads so one slow move never blocks other
sessions. Finished games are evicted least-recently-used beyond a cap; active
games are never evicted.
"""

from __future__ import annotations

import secrets
import threading
import time
from dataclasses import dataclass, field

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .agents import Agent
from .arena import AgentSpecError, agent_catalog, make_agent, parse_agent_spec
from .game import Board, GameConfig, IllegalMoveError, Mark

MAX_SIDE = 12  # encoder bound: boards beyond 12x12 are rejected at creation


class CreateGameRequest(BaseModel):
    rows: int = 6
    cols: int = 7
    inarow: int = 4
    agent: str = "greedy"
    human_plays_first: bool = True
    seed: int | None = None
    time_limit: float | None = None


class MoveRequest(BaseModel):
    column: int


@dataclass
class GameSession:
    id: str
    config: GameConfig
    board: Board
    human_mark: Mark
    agent: Agent
    agent_spec: str
    time_limit: float
    moves: list[int] = field(default_factory=list)
    last_agent_move: int | None = None
    agent_think_time: float | None = None
    created_at: float = field(default_factory=time.time)
    updated_at: float = field(default_factory=time.time)
    lock: threading.Lock = field(default_factory=threading.Lock)

    def status(self) -> str:
        outcome = self.board.outcome(self.moves[-1] if self.moves else None)
        if not outcome.is_terminal:
            return "ongoing"
        if outcome.is_draw:
            return "draw"
        return "human_won" if outcome.winner == self.human_mark else "agent_won"

    def state(self) -> dict:
        return {
            "id": self.id,
            "rows": self.config.rows,
            "cols": self.config.cols,
            "inarow": self.config.inarow,
            "agent": self.agent_spec,
            "human_mark": int(self.human_mark),
            "to_move": int(self.board.to_move),
            "status": self.status(),
            "board_text": self.board.serialize(),
            "cells": self.board.grid.tolist(),
            "moves": list(self.moves),
            "last_agent_move": self.last_agent_move,
            "agent_think_time": self.agent_think_time,
        }


def create_app(static_dir: str | None = None, finished_cap: int = 100,
               default_time_limit: float = 5.0) -> FastAPI:
    app = FastAPI(title="connectx-lab", version="0.1.0")
    sessions: dict[str, GameSession] = {}
    store_lock = threading.Lock()

    @app.exception_handler(RequestValidationError)
    async def validation_handler(request: Request, exc: RequestValidationError):
        # game creation reports invalid payloads as 400; bad move bodies keep 422
        if request.url.path.rstrip("/") == "/api/games":
            return JSONResponse(status_code=400, content={"detail": exc.errors()})
        return JSONResponse(status_code=422, content={"detail": exc.errors()})

    def agent_reply(session: GameSession) -> None:
        started = time.perf_counter()
        col = session.agent.choose(session.board, session.board.to_move,
                                   session.time_limit)
        session.agent_think_time = time.perf_counter() - started
        session.board = session.board.apply(col)
        session.moves.append(col)
        session.last_agent_move = col

    def evict_finished() -> None:
        with store_lock:
            finished = [s for s in sessions.values() if s.status() != "ongoing"]
            if len(finished) <= finished_cap:
                return
            finished.sort(key=lambda s: s.updated_at)
            for session in finished[:len(finished) - finished_cap]:
                sessions.pop(session.id, None)

    @app.post("/api/games", status_code=201)
    def create_game(body: CreateGameRequest):
        if not (1 <= body.rows <= MAX_SIDE and 1 <= body.cols <= MAX_SIDE):
            return JSONResponse(status_code=400, content={
                "detail": f"rows and cols must be within 1..{MAX_SIDE}"})
        try:
            config = GameConfig(body.rows, body.cols, body.inarow)
            spec = parse_agent_spec(body.agent)
            seed = body.seed if body.seed is not None else secrets.randbelow(2 ** 31)
            agent = make_agent(spec, seed=seed)
        except (AgentSpecError, ValueError, OSError) as exc:
            return JSONResponse(status_code=400, content={"detail": str(exc)})
        session = GameSession(
            id=secrets.token_urlsafe(12),
            config=config,
            board=Board.empty(config),
            human_mark=Mark.P1 if body.human_plays_first else Mark.P2,
            agent=agent,
            agent_spec=spec.canonical(),
            time_limit=body.time_limit or default_time_limit,
        )
        if session.board.to_move != session.human_mark:
            agent_reply(session)
        with store_lock:
            sessions[session.id] = session
        evict_finished()
        return session.state()

    @app.get("/api/games/{game_id}")
    def get_game(game_id: str):
        session = sessions.get(game_id)
        if session is None:
            return JSONResponse(status_code=404, content={"detail": "unknown game id"})
        return session.state()

    @app.post("/api/games/{game_id}/moves")
    def post_move(game_id: str, body: MoveRequest):
        session = sessions.get(game_id)
        if session is None:
            return JSONResponse(status_code=404, content={"detail": "unknown game id"})
        if not session.lock.acquire(blocking=False):
            return JSONResponse(status_code=409, content={"detail": "a move is in flight"})
        try:
            if session.status() != "ongoing":
                return JSONResponse(status_code=409, content={"detail": "game is over"})
            if session.board.to_move != session.human_mark:
                return JSONResponse(status_code=409, content={"detail": "not your turn"})
            try:
                session.board = session.board.apply(body.column)
            except IllegalMoveError as exc:
                return JSONResponse(status_code=422, content={"detail": str(exc)})
            session.moves.append(body.column)
            if session.status() == "ongoing":
                agent_reply(session)
            session.updated_at = time.time()
            return session.state()
        finally:
            session.lock.release()

    @app.get("/api/agents")
    def list_agents():
        return {"agents": agent_catalog()}

    if static_dir is not None:
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")

    return app
