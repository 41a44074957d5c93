"""JSON-over-HTTP annotation service.

Run with `python -m gridlab.service --data-dir DIR --port N`; environment
variables GRIDLAB_DATA_DIR and GRIDLAB_PORT supply defaults. Images and
importance maps travel as PNG, everything else as JSON. The built annotator
UI (frontend/dist) is served under /ui when present.
"""
from __future__ import annotations

import argparse
import base64
import binascii
import os
from pathlib import Path

from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .convergence import DEFAULT_ORDERS, DEFAULT_THRESHOLD, convergence
from .errors import (
    ConflictError,
    DataIntegrityError,
    GridLabError,
    InputError,
    MetricUndefinedError,
    NotEnoughAnnotationsError,
    NotFoundError,
)
from .importance import Annotation
from .metrics import METRIC_NAMES
from .regions import GridMode
from .store import AnnotationStore

_STATUS = {
    InputError: 400,
    NotFoundError: 404,
    ConflictError: 409,
    NotEnoughAnnotationsError: 409,
    DataIntegrityError: 422,
    MetricUndefinedError: 422,
}


class StimulusUpload(BaseModel):
    image_png_base64: str
    task_prompt: str
    question: str = ""
    tile_size: int = Field(default=32, ge=1)
    static_n: int = Field(default=8, ge=1)
    text_boxes: list[dict] | None = None
    budget_ms: float = Field(default=5000.0, gt=0)


class SessionRequest(BaseModel):
    participant_id: str
    # explicit override of the round-robin static/adaptive assignment
    mode: str | None = None


def _mode(value: str) -> GridMode:
    try:
        return GridMode(value)
    except ValueError:
        raise InputError(f"mode must be 'static' or 'adaptive', got {value!r}")


def create_app(data_dir: str | Path) -> FastAPI:
    store = AnnotationStore(data_dir)
    app = FastAPI(title="gridlab annotation service")
    app.state.store = store

    @app.exception_handler(GridLabError)
    def _gridlab_error(_req: Request, exc: GridLabError):
        status = next(
            (code for cls, code in _STATUS.items() if isinstance(exc, cls)), 500
        )
        body = {"error": type(exc).__name__, "message": str(exc)}
        if isinstance(exc, NotEnoughAnnotationsError):
            body["needed"] = exc.needed
            body["present"] = exc.present
        return JSONResponse(status_code=status, content=body)

    @app.post("/api/stimuli")
    def post_stimulus(upload: StimulusUpload):
        try:
            image = base64.b64decode(upload.image_png_base64, validate=True)
        except (binascii.Error, ValueError) as exc:
            raise InputError(f"image_png_base64 is not valid base64: {exc}")
        meta = store.create_stimulus(
            image,
            task_prompt=upload.task_prompt,
            question=upload.question,
            tile_size=upload.tile_size,
            static_n=upload.static_n,
            text_boxes=upload.text_boxes,
            budget_ms=upload.budget_ms,
        )
        return meta

    @app.get("/api/stimuli")
    def list_stimuli():
        return {"stimuli": store.stimulus_ids()}

    @app.get("/api/stimuli/{sid}")
    def get_stimulus(sid: str):
        return store.get_stimulus(sid)

    @app.get("/api/stimuli/{sid}/image")
    def get_image(sid: str):
        return Response(content=store.image_bytes(sid), media_type="image/png")

    @app.get("/api/stimuli/{sid}/grid")
    def get_grid(sid: str, mode: str):
        return store.grid_spec(sid, _mode(mode)).to_json()

    @app.get("/api/stimuli/{sid}/annotations")
    def get_annotations(sid: str, mode: str):
        anns = store.annotations(sid, _mode(mode))
        return {"count": len(anns), "annotations": [a.to_json() for a in anns]}

    @app.get("/api/stimuli/{sid}/importance")
    def get_importance(sid: str, mode: str, request: Request):
        imap = store.importance(sid, _mode(mode))
        if "image/png" in request.headers.get("accept", ""):
            return Response(content=imap.to_png_bytes(), media_type="image/png")
        return imap.to_json()

    @app.get("/api/stimuli/{sid}/convergence")
    def get_convergence(
        sid: str,
        mode: str,
        metric: str = "all",
        orders: int = DEFAULT_ORDERS,
        threshold: float = DEFAULT_THRESHOLD,
        seed: int = 0,
    ):
        anns = store.annotations(sid, _mode(mode))
        if len(anns) < 2:
            raise NotEnoughAnnotationsError(needed=2, present=len(anns))
        spec = store.grid_spec(sid, _mode(mode))
        names = METRIC_NAMES if metric == "all" else (metric,)
        reports = {
            name: convergence(anns, spec, name, orders=orders, threshold=threshold, seed=seed).to_json()
            for name in names
        }
        return reports[metric] if metric != "all" else reports

    @app.post("/api/sessions")
    def post_session(req: SessionRequest):
        mode = _mode(req.mode) if req.mode is not None else None
        return store.create_session(req.participant_id, mode)

    @app.get("/api/sessions/{session_id}")
    def get_session(session_id: str):
        return store.get_session(session_id)

    @app.get("/api/sessions/{session_id}/next")
    def get_next(session_id: str):
        return store.session_progress(session_id)

    @app.post("/api/annotations")
    def post_annotation(doc: dict):
        session_id = doc.pop("session_id", None)
        ann = Annotation.from_json(doc)
        return store.submit_annotation(ann, session_id=session_id)

    ui_dir = Path(os.environ.get("GRIDLAB_UI_DIR", Path(__file__).resolve().parents[2] / "frontend" / "dist"))
    if ui_dir.is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app


def main(argv: list[str] | None = None) -> None:
    parser = argparse.ArgumentParser(description="gridlab annotation service")
    parser.add_argument(
        "--data-dir", default=os.environ.get("GRIDLAB_DATA_DIR", "gridlab-data")
    )
    parser.add_argument(
        "--port", type=int, default=int(os.environ.get("GRIDLAB_PORT", "8000"))
    )
    parser.add_argument("--host", default="127.0.0.1")
    args = parser.parse_args(argv)

    import uvicorn

    uvicorn.run(create_app(args.data_dir), host=args.host, port=args.port, log_level="warning")


if __name__ == "__main__":
    main()
