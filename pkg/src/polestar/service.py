"""HTTP front of the engine.

Three JSON endpoints under /v1 plus optional static serving of the web UI
bundle at /.  Route-level failures (degenerate query, no station in range,
unreachable) come back as structured 404-class bodies; malformed parameters
are 400; a not-yet-loaded engine is 503.
"""

from __future__ import annotations

import logging
import os
import time

from fastapi import FastAPI, HTTPException, Query
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from . import binding, engine as engine_mod
from .geo import GeoPoint
from .kernels import KERNEL
from .search import STATUS_UNREACHABLE

log = logging.getLogger(__name__)

_NOT_FOUND_STATUSES = {
    engine_mod.DEGENERATE,
    binding.NO_STATION_IN_RANGE,
    STATUS_UNREACHABLE,
    "walk_only",
}


def _parse_latlon(raw: str, name: str) -> GeoPoint:
    try:
        lat_s, lon_s = raw.split(",")
        return GeoPoint(float(lat_s), float(lon_s))
    except (ValueError, TypeError) as exc:
        raise HTTPException(status_code=400, detail=f"invalid {name}: {raw!r} ({exc})")


def _timings_ms(t) -> dict:
    return {
        "bind_ms": round(t.bind_s * 1000.0, 3),
        "routing_ms": round(t.routing_s * 1000.0, 3),
        "ranking_ms": round(t.ranking_s * 1000.0, 3),
    }


def create_app(engine=None, webui_dir: str = "") -> FastAPI:
    """Build the service; ``engine`` may arrive later via app.state.engine."""
    app = FastAPI(title="polestar", docs_url=None, redoc_url=None)
    app.state.engine = engine
    app.state.started = time.time()

    def _engine():
        eng = app.state.engine
        if eng is None:
            raise HTTPException(status_code=503, detail="engine not loaded")
        return eng

    @app.get("/v1/health")
    def health():
        eng = app.state.engine
        if eng is None:
            return JSONResponse(status_code=503, content={"status": "loading"})
        return {
            "status": "ok",
            "city": eng.dataset.city,
            "kernel": KERNEL,
            "uptime_s": round(time.time() - app.state.started, 1),
            "stations": len(eng.cp.physical.stations),
            "lines": len(eng.cp.lines),
            "rerank": "enabled" if eng.model is not None else "disabled, primary order served",
        }

    @app.get("/v1/routes")
    def routes(
        o: str = Query(...),
        d: str = Query(...),
        t: int | None = Query(None),
        weather: str | None = Query(None),
    ):
        eng = _engine()
        origin = _parse_latlon(o, "o")
        dest = _parse_latlon(d, "d")
        depart = int(time.time()) if t is None else t
        try:
            result = eng.query(origin, dest, depart, weather_hint=weather)
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        body = {
            "query": {"o": o, "d": d, "t": depart, "weather": weather},
            "status": result.status,
            "flags": result.flags,
            "timings": _timings_ms(result.timings),
            "routes": result.routes,
        }
        if result.status in _NOT_FOUND_STATUSES and not result.routes:
            return JSONResponse(status_code=404, content=body)
        return body

    @app.get("/v1/stations")
    def stations(bbox: str = Query(...)):
        eng = _engine()
        try:
            min_lat, min_lon, max_lat, max_lon = (float(v) for v in bbox.split(","))
        except ValueError:
            raise HTTPException(status_code=400, detail=f"invalid bbox: {bbox!r}")
        if min_lat > max_lat or min_lon > max_lon:
            raise HTTPException(status_code=400, detail="inverted bbox")
        return {"stations": eng.stations_in_bbox(min_lat, min_lon, max_lat, max_lon)}

    if webui_dir and os.path.isdir(webui_dir):
        app.mount("/", StaticFiles(directory=webui_dir, html=True), name="webui")
        log.info("serving web UI from %s", webui_dir)

    return app
