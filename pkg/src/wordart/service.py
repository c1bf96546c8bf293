"""REST service over the pipeline: one-stop jobs, deform-only, texturize-only.

Jobs run asynchronously in worker threads and are polled through the job
manifest on disk; artifact URLs mirror the job directory layout exactly.
"""

from __future__ import annotations

import base64
import binascii
import json
import os
import threading
from dataclasses import dataclass
from pathlib import Path

from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse

from . import diffrast, genbackends, orchestrator, planner, svgio
from .errors import (
    BackendMalformedReply,
    BackendUnavailable,
    CorruptJob,
    SchemaViolation,
)
from .deform import DeformConfig, make_target, optimize_deformation
from .fontparse import extract_glyph, normalize_outline
from .genbackends import TexturizeRequest, image_to_b64
from .image import from_png_bytes, to_png_bytes
from .orchestrator import (
    JobRecord,
    JobRequest,
    PipelineConfig,
    load_font_ref,
    load_job,
    new_job_id,
    persist_job,
    run_pipeline,
)
from .shapeparam import from_params

CONFIG_ENV_VAR = "WORDART_CONFIG"

_CONTENT_TYPES = {
    ".png": "image/png",
    ".svg": "image/svg+xml",
    ".json": "application/json",
}


@dataclass(frozen=True)
class ServiceConfig:
    listen_address: str = "127.0.0.1:8765"
    job_root: str = "./jobs"
    font_dir: str | None = None
    backend: str = "mock"
    worker_pool_size: int = 4
    threshold: float = genbackends.DEFAULT_THRESHOLD
    deform_steps: int = 200
    studio_dir: str | None = None  # built frontend to mount at /studio

    def __post_init__(self):
        if self.worker_pool_size < 1:
            raise ValueError("worker_pool_size must be >= 1")
        if self.deform_steps < 1:
            raise ValueError("deform_steps must be >= 1")

    @property
    def host(self) -> str:
        return self.listen_address.rsplit(":", 1)[0]

    @property
    def port(self) -> int:
        return int(self.listen_address.rsplit(":", 1)[1])


def load_config(path=None, **overrides) -> ServiceConfig:
    """Config file (flat JSON, keys = field names), then flag overrides."""
    doc = {}
    path = path or os.environ.get(CONFIG_ENV_VAR)
    if path:
        doc = json.loads(Path(path).read_text())
        if not isinstance(doc, dict):
            raise ValueError("config file must hold one flat JSON object")
    doc.update({k: v for k, v in overrides.items() if v is not None})
    known = {f for f in ServiceConfig.__dataclass_fields__}
    return ServiceConfig(**{k: v for k, v in doc.items() if k in known})


def _error(status: int, message: str) -> JSONResponse:
    return JSONResponse({"error": message}, status_code=status)


def _candidate_view(record: JobRecord, base: str) -> list[dict]:
    out = []
    for cand in record.candidates:
        doc = cand.to_jsonable()
        for char_doc, char_art in zip(doc["chars"], cand.chars):
            char_doc["artifacts"] = {
                name: f"{base}/artifacts/{rel}"
                for name, rel in char_art.paths().items()
            }
        out.append(doc)
    return out


def create_app(config: ServiceConfig | None = None) -> FastAPI:
    config = config or ServiceConfig()
    app = FastAPI(title="wordart", docs_url=None, redoc_url=None)
    from fastapi.middleware.cors import CORSMiddleware

    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"],
        allow_headers=["*"],
    )
    if config.studio_dir and Path(config.studio_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount(
            "/studio",
            StaticFiles(directory=config.studio_dir, html=True),
            name="studio",
        )
    app.state.config = config
    app.state.backend = genbackends.make_backend(config.backend)
    app.state.threads: dict[str, threading.Thread] = {}
    job_root = Path(config.job_root)
    job_root.mkdir(parents=True, exist_ok=True)

    pipeline_cfg = PipelineConfig(
        threshold=config.threshold,
        pool_size=config.worker_pool_size,
        deform_steps=config.deform_steps,
    )

    @app.get("/api/health")
    def health():
        return {"status": "ok"}

    @app.post("/api/jobs", status_code=202)
    async def submit_job(request: Request):
        try:
            body = await request.json()
        except (ValueError, UnicodeDecodeError):
            return _error(400, "body is not valid JSON")
        if not isinstance(body, dict):
            return _error(400, "body must be a JSON object")
        text = body.get("text")
        user_text = body.get("user_text", "")
        if not isinstance(text, str) or not text:
            return _error(400, "text must be a non-empty string")
        if not isinstance(user_text, str) or not user_text.strip():
            return _error(400, "user_text must be a non-empty string")
        overrides = body.get("overrides")
        if overrides is not None and not isinstance(overrides, dict):
            return _error(400, "overrides must be an object")
        font_ref = body.get("font_ref", "demo")
        backend_config = body.get("backend_config", config.backend)
        if backend_config != config.backend and backend_config != "mock":
            # Jobs may only downgrade to the local mock, never call out to
            # arbitrary URLs supplied by clients.
            return _error(400, "backend_config must match the service backend or 'mock'")

        try:
            face = load_font_ref(font_ref, config.font_dir)
        except FileNotFoundError as exc:
            return _error(400, str(exc))
        except Exception as exc:  # noqa: BLE001 - malformed font uploads
            return _error(400, f"font failed to load: {exc}")
        for ch in text:
            if ch not in face.glyph_index_map:
                return _error(422, f"character {ch!r} is not mappable in the font")
        if overrides:
            try:
                base = planner.validate_directives({})
                merged = base.to_jsonable()
                merged.update(overrides)
                planner.validate_directives(merged)
            except SchemaViolation as exc:
                return _error(400, f"invalid overrides: {', '.join(exc.paths)}")

        req = JobRequest(
            text=text,
            user_text=user_text,
            font_ref=font_ref,
            overrides=overrides,
            backend_config=backend_config,
        )
        job_id = new_job_id()
        record = JobRecord(
            id=job_id,
            request=req,
            status=orchestrator.STATUS_PLANNING,
            created=orchestrator.now_iso(),
            updated=orchestrator.now_iso(),
        )
        persist_job(record, job_root)
        backend = (
            app.state.backend
            if backend_config == config.backend
            else genbackends.make_backend(backend_config)
        )

        def runner():
            run_pipeline(
                req, job_root, job_id=job_id, backend=backend, cfg=pipeline_cfg
            )

        thread = threading.Thread(target=runner, name=f"job-{job_id}", daemon=True)
        app.state.threads[job_id] = thread
        thread.start()
        return JSONResponse({"job_id": job_id}, status_code=202)

    @app.get("/api/jobs/{job_id}")
    def get_job(job_id: str):
        try:
            record = load_job(job_root, job_id)
        except CorruptJob as exc:
            return _error(404, str(exc))
        doc = record.to_jsonable()
        doc["candidates"] = _candidate_view(record, f"/api/jobs/{job_id}")
        return doc

    @app.get("/api/jobs/{job_id}/artifacts/{artifact_path:path}")
    def get_artifact(job_id: str, artifact_path: str):
        parts = artifact_path.split("/")
        if (
            not artifact_path
            or artifact_path.startswith("/")
            or any(p in ("", ".", "..") for p in parts)
        ):
            return _error(400, "invalid artifact path")
        job_dir = (job_root / job_id).resolve()
        if not (job_dir / orchestrator.MANIFEST).exists():
            return _error(404, "unknown job")
        target = (job_dir / artifact_path).resolve()
        if not str(target).startswith(str(job_dir) + os.sep):
            return _error(400, "invalid artifact path")
        if not target.is_file():
            return _error(404, "unknown artifact")
        media = _CONTENT_TYPES.get(target.suffix, "application/octet-stream")
        return Response(target.read_bytes(), media_type=media)

    @app.post("/api/deform")
    async def deform(request: Request):
        try:
            body = await request.json()
        except (ValueError, UnicodeDecodeError):
            return _error(400, "body is not valid JSON")
        if not isinstance(body, dict):
            return _error(400, "body must be a JSON object")
        text = body.get("text")
        if not isinstance(text, str) or len(text) != 1:
            return _error(400, "text must be a single character")
        overrides = body.get("overrides") or {}
        if not isinstance(overrides, dict):
            return _error(400, "overrides must be an object")
        steps = body.get("steps", 60)
        if not isinstance(steps, int) or isinstance(steps, bool) or steps < 1:
            return _error(400, "steps must be a positive integer")
        try:
            base = planner.validate_directives({})
            merged = base.to_jsonable()
            merged.update(overrides)
            directives = planner.validate_directives(merged)
        except SchemaViolation as exc:
            return _error(400, f"invalid overrides: {', '.join(exc.paths)}")
        font_ref = body.get("font_ref", "demo")
        try:
            face = load_font_ref(font_ref, config.font_dir)
        except FileNotFoundError as exc:
            return _error(400, str(exc))
        if text not in face.glyph_index_map:
            return _error(422, f"character {text!r} is not mappable in the font")

        raster = pipeline_cfg.raster()
        outline = extract_glyph(face, text, pipeline_cfg.em_size_px)
        if outline.contours:
            outline = normalize_outline(outline)
        target = make_target(
            directives.target_shape, raster.width, raster.height, scale=0.8
        )
        cfg = DeformConfig(raster=raster, steps=steps)
        result = optimize_deformation(
            outline, directives.region_policy, target, cfg
        )
        deformed = from_params(
            result.final_params, outline.em_size_px, outline.advance_px
        )
        render = diffrast.rasterize(result.final_params, raster)
        return {
            "svg": svgio.svg_document(deformed, raster.width, raster.height),
            "png_b64": image_to_b64(render),
            "iou_before": result.target_iou_before,
            "iou_after": result.target_iou_after,
            "flags": list(result.flags),
        }

    @app.post("/api/texturize")
    async def texturize(request: Request):
        try:
            body = await request.json()
        except (ValueError, UnicodeDecodeError):
            return _error(400, "body is not valid JSON")
        if not isinstance(body, dict):
            return _error(400, "body must be a JSON object")
        payload = body.get("stylized_png_b64")
        prompt = body.get("texture_prompt", "")
        seed = body.get("seed", 0)
        if not isinstance(payload, str):
            return _error(400, "stylized_png_b64 must be a string")
        if not isinstance(prompt, str):
            return _error(400, "texture_prompt must be a string")
        if not isinstance(seed, int) or isinstance(seed, bool):
            return _error(400, "seed must be an integer")
        try:
            image = from_png_bytes(base64.b64decode(payload, validate=True))
        except (binascii.Error, ValueError, OSError):
            return _error(400, "stylized_png_b64 is not a decodable PNG")
        control = genbackends.control_map(image)
        try:
            textured = app.state.backend.texturize(
                TexturizeRequest(prompt=prompt, control=control, seed=seed)
            )
        except (BackendUnavailable, BackendMalformedReply) as exc:
            return _error(502, str(exc))
        return Response(to_png_bytes(textured), media_type="image/png")

    return app


def serve(config: ServiceConfig) -> None:
    import uvicorn

    uvicorn.run(create_app(config), host=config.host, port=config.port, log_level="warning")
