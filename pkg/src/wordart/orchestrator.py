"""Pipeline state machine with the quality-gate retry loop.

One job: plan -> per iteration, deform / stylize / score num_variants
candidates -> gate on cumulative passes -> texturize the survivors or
replan and retry while budget remains.  Every stage's artifacts land on
disk before the next stage starts, and later stages consume the persisted
files, so a killed job resumes without repeating completed backend calls.

Job directory layout (names are a stable contract):

    <root>/<job_id>/job.json
    <root>/<job_id>/iter_<j>/cand_<i>/deformed.svg
    <root>/<job_id>/iter_<j>/cand_<i>/deformed.png
    <root>/<job_id>/iter_<j>/cand_<i>/depth.png
    <root>/<job_id>/iter_<j>/cand_<i>/stylized.png
    <root>/<job_id>/iter_<j>/cand_<i>/score.json
    <root>/<job_id>/iter_<j>/cand_<i>/textured.png   (passers only)

Multi-character jobs add a char_<k>/ level inside each candidate.
"""

from __future__ import annotations

import json
import os
import secrets
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from pathlib import Path

from . import diffrast, fontbuild, fontparse, genbackends, planner, deform, svgio
from .errors import CorruptJob, IoFailure, MissingGlyph
from .genbackends import ScoreReport, StylizeRequest, TexturizeRequest
from .image import read_png, write_png
from .planner import Directives, PlanFeedback
from .shapeparam import from_params, select_region
from .deform import DeformConfig, make_target

GATE_PASS = "pass"
GATE_RETRY = "retry"
GATE_EXHAUSTED = "exhausted"

STATUS_PLANNING = "planning"
STATUS_DEFORMING = "deforming"
STATUS_STYLIZING = "stylizing"
STATUS_GATING = "gating"
STATUS_TEXTURIZING = "texturizing"
STATUS_DONE = "done"
STATUS_FAILED_BUDGET = "failed_budget"
STATUS_FAILED_ERROR = "failed_error"

_TERMINAL = (STATUS_DONE, STATUS_FAILED_BUDGET)

DEFAULT_STRENGTH = 0.8


@dataclass(frozen=True)
class JobRequest:
    text: str
    user_text: str
    font_ref: str = "demo"
    overrides: dict | None = None
    backend_config: str = "mock"

    def __post_init__(self):
        if not self.text:
            raise ValueError("text must be non-empty")

    def to_jsonable(self) -> dict:
        return {
            "text": self.text,
            "user_text": self.user_text,
            "font_ref": self.font_ref,
            "overrides": self.overrides,
            "backend_config": self.backend_config,
        }

    @staticmethod
    def from_jsonable(doc: dict) -> "JobRequest":
        return JobRequest(
            text=doc["text"],
            user_text=doc["user_text"],
            font_ref=doc.get("font_ref", "demo"),
            overrides=doc.get("overrides"),
            backend_config=doc.get("backend_config", "mock"),
        )


@dataclass(frozen=True)
class CharArtifacts:
    char: str
    rel_dir: str
    iou_before: float
    iou_after: float
    deform_flags: tuple[str, ...]
    score: ScoreReport | None = None
    textured: bool = False
    # Optimization state as plain JSON shapes: the final parameter vector
    # ({"values": [...], "contour_sizes": [...]}) and the freedom mask.
    params: dict | None = None
    free_mask: list | None = None

    def paths(self) -> dict[str, str]:
        base = {
            "deformed_svg": f"{self.rel_dir}/deformed.svg",
            "deformed_png": f"{self.rel_dir}/deformed.png",
            "depth_png": f"{self.rel_dir}/depth.png",
            "stylized_png": f"{self.rel_dir}/stylized.png",
            "score_json": f"{self.rel_dir}/score.json",
        }
        if self.textured:
            base["textured_png"] = f"{self.rel_dir}/textured.png"
        return base

    def to_jsonable(self) -> dict:
        return {
            "char": self.char,
            "rel_dir": self.rel_dir,
            "iou_before": self.iou_before,
            "iou_after": self.iou_after,
            "deform_flags": list(self.deform_flags),
            "score": self.score.to_jsonable() if self.score else None,
            "textured": self.textured,
            "params": self.params,
            "free_mask": self.free_mask,
        }

    @staticmethod
    def from_jsonable(doc: dict) -> "CharArtifacts":
        score = doc.get("score")
        return CharArtifacts(
            char=doc["char"],
            rel_dir=doc["rel_dir"],
            iou_before=doc["iou_before"],
            iou_after=doc["iou_after"],
            deform_flags=tuple(doc.get("deform_flags", [])),
            score=ScoreReport(**score) if score else None,
            textured=doc.get("textured", False),
            params=doc.get("params"),
            free_mask=doc.get("free_mask"),
        )


@dataclass(frozen=True)
class CandidateRecord:
    iteration: int
    index: int
    seed: int
    chars: tuple[CharArtifacts, ...]
    score: ScoreReport | None = None
    textured: bool = False

    def to_jsonable(self) -> dict:
        return {
            "iteration": self.iteration,
            "index": self.index,
            "seed": self.seed,
            "chars": [c.to_jsonable() for c in self.chars],
            "score": self.score.to_jsonable() if self.score else None,
            "textured": self.textured,
        }

    @staticmethod
    def from_jsonable(doc: dict) -> "CandidateRecord":
        score = doc.get("score")
        return CandidateRecord(
            iteration=doc["iteration"],
            index=doc["index"],
            seed=doc["seed"],
            chars=tuple(CharArtifacts.from_jsonable(c) for c in doc["chars"]),
            score=ScoreReport(**score) if score else None,
            textured=doc.get("textured", False),
        )


@dataclass(frozen=True)
class JobRecord:
    id: str
    request: JobRequest
    directives_history: tuple[Directives, ...] = ()
    candidates: tuple[CandidateRecord, ...] = ()
    status: str = STATUS_PLANNING
    created: str = ""
    updated: str = ""
    error: str | None = None

    def to_jsonable(self) -> dict:
        history = []
        for d in self.directives_history:
            doc = d.to_jsonable()
            doc["provenance"] = d.provenance
            history.append(doc)
        return {
            "id": self.id,
            "request": self.request.to_jsonable(),
            "directives_history": history,
            "candidates": [c.to_jsonable() for c in self.candidates],
            "status": self.status,
            "created": self.created,
            "updated": self.updated,
            "error": self.error,
        }

    @staticmethod
    def from_jsonable(doc: dict) -> "JobRecord":
        history = []
        for d in doc["directives_history"]:
            directives = planner.validate_directives(d)
            history.append(replace(directives, provenance=d.get("provenance", "rules")))
        return JobRecord(
            id=doc["id"],
            request=JobRequest.from_jsonable(doc["request"]),
            directives_history=tuple(history),
            candidates=tuple(
                CandidateRecord.from_jsonable(c) for c in doc["candidates"]
            ),
            status=doc["status"],
            created=doc.get("created", ""),
            updated=doc.get("updated", ""),
            error=doc.get("error"),
        )


@dataclass(frozen=True)
class PipelineConfig:
    canvas: int = 64
    em_size_px: float = 64.0
    threshold: float = genbackends.DEFAULT_THRESHOLD
    pool_size: int = 4
    deform_steps: int = 200
    strength: float = DEFAULT_STRENGTH

    def raster(self) -> diffrast.RasterConfig:
        return diffrast.RasterConfig(self.canvas, self.canvas)


def quality_gate(scores, min_successes: int, budget_remaining: bool) -> str:
    """Pure gate decision on a batch of score reports."""
    if min_successes < 1:
        raise ValueError("min_successes must be >= 1")
    passes = sum(1 for s in scores if s.passed)
    if passes >= min_successes:
        return GATE_PASS
    return GATE_RETRY if budget_remaining else GATE_EXHAUSTED


def now_iso() -> str:
    return datetime.now(timezone.utc).isoformat()


_now = now_iso


def new_job_id() -> str:
    return secrets.token_hex(8)


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------

MANIFEST = "job.json"
_MANIFEST = MANIFEST
_REQUIRED_KEYS = ("id", "request", "directives_history", "candidates", "status")


def persist_job(record: JobRecord, root) -> None:
    """Write the manifest atomically (tmp + rename)."""
    try:
        job_dir = Path(root) / record.id
        job_dir.mkdir(parents=True, exist_ok=True)
        payload = json.dumps(record.to_jsonable(), indent=2)
        tmp = job_dir / (_MANIFEST + ".tmp")
        tmp.write_text(payload)
        os.replace(tmp, job_dir / _MANIFEST)
    except OSError as exc:
        raise IoFailure(f"cannot persist job {record.id}: {exc}") from exc


def load_job(root, job_id: str) -> JobRecord:
    path = Path(root) / job_id / _MANIFEST
    if not path.exists():
        raise CorruptJob(f"job {job_id} not found under {root}")
    try:
        doc = json.loads(path.read_text())
    except (OSError, ValueError) as exc:
        raise CorruptJob(f"job {job_id}: unreadable manifest: {exc}") from exc
    if not isinstance(doc, dict) or any(k not in doc for k in _REQUIRED_KEYS):
        raise CorruptJob(f"job {job_id}: manifest missing required keys")
    try:
        return JobRecord.from_jsonable(doc)
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptJob(f"job {job_id}: malformed manifest: {exc}") from exc


# ---------------------------------------------------------------------------
# Font resolution
# ---------------------------------------------------------------------------


def load_font_ref(font_ref: str, font_dir=None) -> fontparse.FontFace:
    """Resolve a built-in name, a path, or a file inside font_dir."""
    if font_ref in fontbuild.builtin_font_names():
        return fontparse.load_font(fontbuild.builtin_font_bytes(font_ref))
    candidates = [Path(font_ref)]
    if font_dir is not None:
        candidates.append(Path(font_dir) / font_ref)
    for path in candidates:
        if path.is_file():
            return fontparse.load_font(path.read_bytes())
    raise FileNotFoundError(f"font {font_ref!r} is neither built-in nor a file")


def check_text_mappable(face: fontparse.FontFace, text: str) -> None:
    for ch in text:
        if ch not in face.glyph_index_map:
            raise MissingGlyph(f"character {ch!r} not mapped by the font")


# ---------------------------------------------------------------------------
# The pipeline
# ---------------------------------------------------------------------------


class _JobContext:
    """Mutable coordinator state for one run; all writes happen here."""

    def __init__(self, record: JobRecord, root, backend, cfg: PipelineConfig):
        self.record = record
        self.root = Path(root)
        self.backend = backend
        self.cfg = cfg
        self.job_dir = self.root / record.id
        self.write_lock = threading.Lock()

    def update(self, **changes) -> JobRecord:
        self.record = replace(self.record, updated=_now(), **changes)
        persist_job(self.record, self.root)
        return self.record

    def cand_rel_dir(self, iteration: int, index: int, char_pos: int, n_chars: int) -> str:
        base = f"iter_{iteration}/cand_{index}"
        if n_chars > 1:
            return f"{base}/char_{char_pos}"
        return base

    def abspath(self, rel: str) -> Path:
        return self.job_dir / rel


def _deform_one(ctx: _JobContext, outline, directives: Directives, seed: int):
    raster = ctx.cfg.raster()
    target = make_target(directives.target_shape, raster.width, raster.height, scale=0.8)
    deform_cfg = DeformConfig(raster=raster, steps=ctx.cfg.deform_steps, seed=seed)
    result = deform.optimize_deformation(
        outline, directives.region_policy, target, deform_cfg
    )
    mask = select_region(outline, directives.region_policy)
    deformed = from_params(
        result.final_params, outline.em_size_px, outline.advance_px
    )
    render = diffrast.rasterize(result.final_params, raster)
    return result, mask, deformed, render


def _write_deform(ctx: _JobContext, rel_dir: str, deformed_outline, render):
    out_dir = ctx.abspath(rel_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    svg = svgio.svg_document(deformed_outline, ctx.cfg.canvas, ctx.cfg.canvas)
    (out_dir / "deformed.svg").write_text(svg)
    write_png(render, out_dir / "deformed.png")


def _stage_deform(ctx: _JobContext, outlines: dict, directives: Directives,
                  iteration: int, indices: list[int], text: str):
    """Deform any candidate/char missing its deformed.png.

    Workers compute in parallel; artifact writes are serialized through the
    coordinator in candidate order.  Returns {(index, pos): DeformResult}.
    """
    tasks = []
    for index in indices:
        seed = directives.base_seed + index
        for pos, ch in enumerate(text):
            rel = ctx.cand_rel_dir(iteration, index, pos, len(text))
            if not ctx.abspath(rel + "/deformed.png").exists():
                tasks.append((index, pos, ch, seed, rel))

    def work(task):
        index, pos, ch, seed, rel = task
        result, mask, deformed, render = _deform_one(ctx, outlines[ch], directives, seed)
        return task, result, mask, deformed, render

    results = {}
    if tasks:
        with ThreadPoolExecutor(max_workers=ctx.cfg.pool_size) as pool:
            for task, result, mask, deformed, render in pool.map(work, tasks):
                results[(task[0], task[1])] = (task, result, mask, deformed, render)
        for key in sorted(results):
            task, result, mask, deformed, render = results[key]
            _write_deform(ctx, task[4], deformed, render)
    return {
        key: (result, mask)
        for key, (task, result, mask, _, _) in results.items()
    }


def _run_and_persist(ctx: _JobContext, tasks, work, persist_one):
    """Parallel backend calls with streaming persistence.

    Every finished result is written immediately (coordinator thread), and
    the first failure is re-raised only after all in-flight work settles,
    so completed backend calls survive a mid-stage crash.
    """
    if not tasks:
        return
    from concurrent.futures import as_completed

    with ThreadPoolExecutor(max_workers=ctx.cfg.pool_size) as pool:
        futures = {pool.submit(work, task): task for task in tasks}
        first_error = None
        for future in as_completed(futures):
            task = futures[future]
            try:
                result = future.result()
            except Exception as exc:  # noqa: BLE001 - re-raised below
                if first_error is None:
                    first_error = exc
                continue
            persist_one(task, result)
    if first_error is not None:
        raise first_error


def _stage_depth(ctx: _JobContext, iteration: int, indices, text: str):
    for index in indices:
        for pos in range(len(text)):
            rel = ctx.cand_rel_dir(iteration, index, pos, len(text))
            depth_path = ctx.abspath(rel + "/depth.png")
            if depth_path.exists():
                continue
            render = read_png(ctx.abspath(rel + "/deformed.png"))
            write_png(genbackends.depth_map(render), depth_path)


def _stage_stylize(ctx: _JobContext, directives: Directives, iteration: int,
                   indices, text: str):
    tasks = []
    for index in indices:
        seed = directives.base_seed + index
        for pos in range(len(text)):
            rel = ctx.cand_rel_dir(iteration, index, pos, len(text))
            if not ctx.abspath(rel + "/stylized.png").exists():
                tasks.append((index, pos, seed, rel))

    def work(task):
        index, pos, seed, rel = task
        depth = read_png(ctx.abspath(rel + "/depth.png"))
        req = StylizeRequest(
            prompt=directives.style_prompt,
            depth=depth,
            seed=seed,
            strength=ctx.cfg.strength,
        )
        return ctx.backend.stylize(req)

    # Results are written as they land so a crash mid-stage never throws
    # away a completed backend call; writes stay on the coordinator thread.
    _run_and_persist(
        ctx, tasks, work, lambda task, img: write_png(
            img, ctx.abspath(task[3] + "/stylized.png")
        )
    )


def _stage_score(ctx: _JobContext, iteration: int, indices, text: str):
    """Score every candidate/char from the persisted artifacts."""
    for index in indices:
        for pos in range(len(text)):
            rel = ctx.cand_rel_dir(iteration, index, pos, len(text))
            score_path = ctx.abspath(rel + "/score.json")
            if score_path.exists():
                continue
            stylized = read_png(ctx.abspath(rel + "/stylized.png"))
            mask = read_png(ctx.abspath(rel + "/deformed.png"))
            report = ctx.backend.score(stylized, mask, ctx.cfg.threshold)
            score_path.write_text(json.dumps(report.to_jsonable()))


def _read_score(ctx: _JobContext, rel: str) -> ScoreReport:
    doc = json.loads(ctx.abspath(rel + "/score.json").read_text())
    return ScoreReport(doc["legibility"], doc["passed"], doc["threshold"])


def _stage_texturize(ctx: _JobContext, text: str):
    """Texture every passing candidate/char that is not textured yet."""
    directives = ctx.record.directives_history[-1]
    tasks = []
    for cand in ctx.record.candidates:
        for pos, char_art in enumerate(cand.chars):
            if char_art.score is None or not char_art.score.passed:
                continue
            rel = char_art.rel_dir
            if not ctx.abspath(rel + "/textured.png").exists():
                tasks.append((cand.seed, rel))

    def work(task):
        seed, rel = task
        stylized = read_png(ctx.abspath(rel + "/stylized.png"))
        control = genbackends.control_map(stylized)
        req = TexturizeRequest(
            prompt=directives.texture_prompt, control=control, seed=seed
        )
        return ctx.backend.texturize(req)

    _run_and_persist(
        ctx, tasks, work, lambda task, img: write_png(
            img, ctx.abspath(task[1] + "/textured.png")
        )
    )

    # Mark textured flags on the records.
    new_cands = []
    for cand in ctx.record.candidates:
        chars = tuple(
            replace(c, textured=bool(c.score and c.score.passed))
            for c in cand.chars
        )
        all_passed = bool(cand.score and cand.score.passed)
        new_cands.append(replace(cand, chars=chars, textured=all_passed))
    ctx.update(candidates=tuple(new_cands))


def _collect_candidates(ctx: _JobContext, directives: Directives, iteration: int,
                        indices, text: str, deform_results) -> list[CandidateRecord]:
    records = []
    for index in indices:
        seed = directives.base_seed + index
        chars = []
        for pos, ch in enumerate(text):
            rel = ctx.cand_rel_dir(iteration, index, pos, len(text))
            score = _read_score(ctx, rel)
            summary = deform_results.get((index, pos))
            if summary is not None:
                result, mask = summary
                iou_b, iou_a, flags = (
                    result.target_iou_before,
                    result.target_iou_after,
                    result.flags,
                )
                params_doc = result.final_params.to_jsonable()
                mask_doc = mask.to_jsonable()
            else:
                prior = _find_char(ctx.record, iteration, index, pos)
                iou_b = prior.iou_before if prior else 0.0
                iou_a = prior.iou_after if prior else 0.0
                flags = prior.deform_flags if prior else ()
                params_doc = prior.params if prior else None
                mask_doc = prior.free_mask if prior else None
            chars.append(
                CharArtifacts(
                    char=ch,
                    rel_dir=rel,
                    iou_before=iou_b,
                    iou_after=iou_a,
                    deform_flags=flags,
                    score=score,
                    params=params_doc,
                    free_mask=mask_doc,
                )
            )
        aggregate = ScoreReport.from_legibility(
            min(c.score.legibility for c in chars), ctx.cfg.threshold
        )
        records.append(
            CandidateRecord(
                iteration=iteration,
                index=index,
                seed=seed,
                chars=tuple(chars),
                score=aggregate,
            )
        )
    return records


def _find_char(record: JobRecord, iteration: int, index: int, pos: int):
    for cand in record.candidates:
        if cand.iteration == iteration and cand.index == index and pos < len(cand.chars):
            return cand.chars[pos]
    return None


def _per_char_pass_counts(record: JobRecord, n_chars: int) -> list[int]:
    counts = [0] * n_chars
    for cand in record.candidates:
        for pos, char_art in enumerate(cand.chars):
            if char_art.score is not None and char_art.score.passed:
                counts[pos] += 1
    return counts


def _cause_chain(exc: BaseException) -> str:
    parts = []
    seen = set()
    current: BaseException | None = exc
    while current is not None and id(current) not in seen:
        seen.add(id(current))
        parts.append(f"{type(current).__name__}: {current}")
        current = current.__cause__ or current.__context__
    return " <- ".join(parts)


def run_pipeline(
    req: JobRequest,
    job_root,
    *,
    job_id: str | None = None,
    backend=None,
    cfg: PipelineConfig | None = None,
) -> JobRecord:
    """Run (or resume) one job to a terminal status.

    Unmappable characters raise MissingGlyph before any state is created;
    later failures are recorded as status=failed_error with a cause chain,
    never raised.
    """
    cfg = cfg or PipelineConfig()
    backend = backend or genbackends.make_backend(req.backend_config)
    face = load_font_ref(req.font_ref)
    check_text_mappable(face, req.text)

    job_id = job_id or new_job_id()
    manifest = Path(job_root) / job_id / _MANIFEST
    if manifest.exists():
        record = load_job(job_root, job_id)
        if record.status in _TERMINAL:
            return record
        record = replace(record, request=req, error=None)
    else:
        record = JobRecord(
            id=job_id, request=req, status=STATUS_PLANNING, created=_now()
        )
    ctx = _JobContext(record, job_root, backend, cfg)

    try:
        return _run(ctx, face)
    except Exception as exc:  # noqa: BLE001 - terminal failures become state
        try:
            return ctx.update(status=STATUS_FAILED_ERROR, error=_cause_chain(exc))
        except IoFailure:
            raise


def _run(ctx: _JobContext, face) -> JobRecord:
    req = ctx.record.request
    text = req.text
    cfg = ctx.cfg

    ctx.update(status=STATUS_PLANNING)
    if not ctx.record.directives_history:
        directives = planner.plan(req.user_text, ctx.backend)
        if req.overrides:
            merged = directives.to_jsonable()
            merged.update(req.overrides)
            directives = replace(
                planner.validate_directives(merged), provenance=directives.provenance
            )
        ctx.update(directives_history=(directives,))

    outlines = {}
    for ch in set(text):
        outline = fontparse.extract_glyph(face, ch, cfg.em_size_px)
        if outline.contours:
            outline = fontparse.normalize_outline(outline)
        outlines[ch] = outline

    first = ctx.record.directives_history[0]
    max_iterations = first.retry_budget + 1
    min_successes = first.min_successes_K

    iteration = 0
    while iteration < max_iterations:
        directives = ctx.record.directives_history[iteration]
        indices = list(range(directives.num_variants))

        ctx.update(status=STATUS_DEFORMING)
        deform_results = _stage_deform(
            ctx, outlines, directives, iteration, indices, text
        )
        _stage_depth(ctx, iteration, indices, text)

        ctx.update(status=STATUS_STYLIZING)
        _stage_stylize(ctx, directives, iteration, indices, text)

        ctx.update(status=STATUS_GATING)
        _stage_score(ctx, iteration, indices, text)
        fresh = _collect_candidates(
            ctx, directives, iteration, indices, text, deform_results
        )
        kept = tuple(
            c for c in ctx.record.candidates if c.iteration != iteration
        )
        ctx.update(candidates=tuple(sorted(
            kept + tuple(fresh), key=lambda c: (c.iteration, c.index)
        )))

        counts = _per_char_pass_counts(ctx.record, len(text))
        budget_remaining = iteration + 1 < max_iterations
        if min(counts) >= min_successes:
            decision = GATE_PASS
        elif budget_remaining:
            decision = GATE_RETRY
        else:
            decision = GATE_EXHAUSTED

        if decision == GATE_PASS:
            ctx.update(status=STATUS_TEXTURIZING)
            _stage_texturize(ctx, text)
            return ctx.update(status=STATUS_DONE)
        if decision == GATE_EXHAUSTED:
            return ctx.update(status=STATUS_FAILED_BUDGET)

        # retry: replan for the next iteration
        if iteration + 1 >= len(ctx.record.directives_history):
            failures = [
                c.score.legibility
                for c in ctx.record.candidates
                if c.score is not None and not c.score.passed
            ]
            successes = sum(
                1 for c in ctx.record.candidates
                if c.score is not None and c.score.passed
            )
            feedback = PlanFeedback(
                iteration=iteration + 1,
                successes_so_far=successes,
                failure_scores=tuple(failures),
            )
            new_directives = planner.replan(
                directives, feedback, ctx.backend, user_text=req.user_text
            )
            ctx.update(
                directives_history=ctx.record.directives_history + (new_directives,)
            )
        iteration += 1

    return ctx.update(status=STATUS_FAILED_BUDGET)
