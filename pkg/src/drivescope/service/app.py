"""HTTP/JSON control plane: sessions, stepping, interventions, analysis.

JSON-in/JSON-out everywhere; failures use the ApiError envelope
{"error": {"code", "message", "detail"}} with matching HTTP status.
"""
from __future__ import annotations

import os
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from ..causality.interventions import Intervention
from ..config import BevConfig, ModelConfig, PidConfig, SimConfig
from ..data.routes import load_route
from ..model.params import load_checkpoint
from ..sim.scenario import load_scenario
from .sessions import SessionConflict, SessionManager

STATUS = {"NOT_FOUND": 404, "INVALID_ARGUMENT": 400, "CONFLICT": 409, "INTERNAL": 500}


class ApiError(Exception):
    def __init__(self, code, message, detail=None):
        super().__init__(message)
        self.code = code
        self.message = message
        self.detail = detail or {}

    def response(self):
        return JSONResponse(
            status_code=STATUS.get(self.code, 500),
            content={"error": {"code": self.code, "message": self.message,
                               "detail": self.detail}})


class AssetRegistry:
    """Scenario/route/checkpoint files under one root, addressed by stem."""

    def __init__(self, root):
        self.root = Path(root)

    def _find(self, kind, asset_id, suffixes):
        base = self.root / kind
        for suffix in suffixes:
            p = base / f"{asset_id}{suffix}"
            if p.exists():
                return p
        raise ApiError("NOT_FOUND", f"{kind[:-1]} {asset_id!r} not found",
                       {"root": str(self.root)})

    def list(self, kind):
        base = self.root / kind
        if not base.exists():
            return []
        return sorted({p.stem for p in base.iterdir()
                       if p.suffix in (".json", ".jsonl", ".npz")})

    def scenario(self, asset_id):
        return load_scenario(self._find("scenarios", asset_id, (".json",)))

    def route(self, asset_id):
        return load_route(self._find("routes", asset_id, (".json",)))

    def checkpoint(self, asset_id):
        params, cfg, _ = load_checkpoint(self._find("checkpoints", asset_id, (".npz",)))
        return params, cfg


def create_app(asset_root=None, sim_cfg=SimConfig(), model_cfg=ModelConfig(),
               bev_cfg=BevConfig(), pid_cfg=PidConfig(), static_dir=None) -> FastAPI:
    asset_root = asset_root or os.environ.get("DRIVESCOPE_ASSET_ROOT", "assets")
    registry = AssetRegistry(asset_root)
    manager = SessionManager(registry, sim_cfg, model_cfg, bev_cfg, pid_cfg)
    app = FastAPI(title="drivescope debug service")
    app.state.manager = manager
    app.state.registry = registry

    @app.exception_handler(ApiError)
    async def _api_error(request: Request, exc: ApiError):
        return exc.response()

    @app.exception_handler(RequestValidationError)
    async def _validation(request: Request, exc: RequestValidationError):
        return ApiError("INVALID_ARGUMENT", "request validation failed",
                        {"errors": exc.errors()}).response()

    @app.exception_handler(Exception)
    async def _internal(request: Request, exc: Exception):
        return ApiError("INTERNAL", repr(exc)).response()

    def _session(sid):
        try:
            return manager.get(sid)
        except KeyError:
            raise ApiError("NOT_FOUND", f"session {sid!r} not found")

    @app.get("/assets/{kind}")
    def list_assets(kind: str):
        if kind not in ("scenarios", "routes", "checkpoints"):
            raise ApiError("NOT_FOUND", f"unknown asset kind {kind!r}")
        return {"ids": registry.list(kind)}

    @app.post("/sessions")
    def create_session(body: dict):
        for key in ("scenario_id", "route_id", "ckpt_id"):
            if key not in body:
                raise ApiError("INVALID_ARGUMENT", f"missing field {key!r}")
        session = manager.create(body["scenario_id"], body["route_id"],
                                 body["ckpt_id"], seed=int(body.get("seed", 0)))
        return {"session_id": session.id, "snapshot": manager.snapshot(session)}

    @app.get("/sessions/{sid}")
    def get_session(sid: str):
        return manager.snapshot(_session(sid))

    @app.post("/sessions/{sid}/step")
    def step_session(sid: str, body: dict = None):
        session = _session(sid)
        n = int((body or {}).get("n", 1))
        if n < 0:
            raise ApiError("INVALID_ARGUMENT", "n must be >= 0")
        if session.terminated and n > 0:
            raise ApiError("CONFLICT", f"session {sid} already terminated",
                           {"terminated": session.terminated})
        try:
            if n == 0:
                return manager.snapshot(session)
            return manager.step(session, n)
        except SessionConflict:
            raise ApiError("CONFLICT", f"a step is already in flight for {sid}")

    @app.put("/sessions/{sid}/interventions")
    def set_interventions(sid: str, body: list[dict]):
        session = _session(sid)
        try:
            ivs = [Intervention.from_dict(d) for d in body]
        except (ValueError, TypeError) as exc:
            raise ApiError("INVALID_ARGUMENT", str(exc))
        session.driver.interventions = ivs
        return {"active": [iv.as_dict() for iv in ivs]}

    @app.get("/sessions/{sid}/analysis/{kind}")
    def analysis(sid: str, kind: str, tick: int = None, layer: str = "fused"):
        session = _session(sid)
        if kind not in ("token_gradients", "head_response", "activation_map"):
            raise ApiError("INVALID_ARGUMENT", f"unknown analysis kind {kind!r}")
        try:
            return manager.analysis(session, kind, tick=tick, layer=layer)
        except SessionConflict:
            raise ApiError("CONFLICT", f"a request is already in flight for {sid}")
        except KeyError as exc:
            raise ApiError("INVALID_ARGUMENT", f"unknown layer: {exc}")
        except ValueError as exc:
            raise ApiError("INVALID_ARGUMENT", str(exc))

    if static_dir and Path(static_dir).exists():
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")
    return app
