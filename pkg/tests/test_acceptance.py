"""Acceptance criteria, one test per criterion.

Run with ``pytest tests/test_acceptance.py -v -s`` to see one PASS line per
criterion.  Every tolerance is pinned here, not configurable.
"""

import base64
import json
import random
import subprocess
import sys
import time

import numpy as np

from wordart import fontbuild, fontparse
from wordart.diffrast import RasterConfig, loss_gradient, rasterize
from wordart.errors import BackendMalformedReply, SchemaViolation
from wordart.genbackends import StylizeRequest
from wordart.image import Image
from wordart.orchestrator import (
    JobRequest,
    PipelineConfig,
    load_job,
    persist_job,
    run_pipeline,
)
from wordart.planner import plan, validate_directives
from wordart.shapeparam import ParamVector, RegionPolicy, select_region, to_params
from wordart.deform import DeformConfig, make_target, optimize_deformation

from oracles import central_differences, quad_point, cubic_point, random_closed_params
from test_diffrast import circle_params, ring_params, square_params
from test_orchestrator import CountingBackend, FaultyBackend


def _report(number: int, message: str):
    print(f"\nACCEPTANCE {number}: PASS - {message}")


def test_criterion_1_gradient_correctness():
    start = time.monotonic()
    cfg = RasterConfig(48, 48, smoothing_tau=0.8, subdiv=8, supersample=1)
    rng = np.random.default_rng(20240801)
    passes = 0
    total = 100
    for trial in range(total):
        params = random_closed_params(
            rng, 1 + trial % 2, segment_range=(3, 5), control_noise=0.015
        )
        upstream = rng.random((48, 48))

        def loss(flat):
            img = rasterize(ParamVector(flat, params.contour_sizes), cfg)
            return float((img.data * upstream).sum())

        analytic = loss_gradient(params, cfg, upstream).values
        numeric = central_differences(loss, params.values.copy(), h=1e-3)
        rel = np.linalg.norm(analytic - numeric) / np.linalg.norm(numeric)
        passes += rel < 1e-3
    elapsed = time.monotonic() - start
    assert passes >= 95, f"only {passes}/100 shapes under 1e-3"
    assert elapsed < 60.0, f"took {elapsed:.1f}s"
    _report(1, f"gradient vs FD: {passes}/100 under 1e-3 in {elapsed:.1f}s")


def test_criterion_2_rasterizer_conservation():
    # circle coverage mass
    r = 20.0
    circle = circle_params(32.0, 32.0, r)
    img = rasterize(circle, RasterConfig(64, 64))
    area = np.pi * r * r
    mass_err = abs(img.data.sum() - area) / area
    assert mass_err < 0.02

    # exact translation equivariance of a square
    square = square_params(10.25, 30.75)
    cfg = RasterConfig(48, 48)
    base = rasterize(square, cfg).data
    moved = ParamVector(square.values + np.tile([5.0, 3.0], 16), (4,))
    shifted = rasterize(moved, cfg).data
    equiv_err = np.abs(base[0:45, 0:43] - shifted[3:48, 5:48]).max()
    assert equiv_err <= 1e-12

    # even-odd hole: hole half-width 8 px > 5 * tau
    ring = ring_params(8.0, 56.0, 24.0, 40.0)
    hole = rasterize(ring, RasterConfig(64, 64, smoothing_tau=1.0)).data[32, 32]
    assert hole < 0.05
    _report(
        2,
        f"circle mass err {mass_err:.4f} < 2%, translation err {equiv_err:.1e} "
        f"<= 1e-12, hole coverage {hole:.4f} < 0.05",
    )


def test_criterion_3_degree_elevation():
    rng = np.random.default_rng(3)
    ts = np.arange(0.0, 1.0001, 0.01)
    worst_ratio = 0.0
    for _ in range(1000):
        pts = rng.uniform(-1000.0, 1000.0, size=(3, 2))
        seg = fontparse.elevate_quadratic(tuple(pts[0]), tuple(pts[1]), tuple(pts[2]))
        scale = max(1.0, float(np.abs(pts).max()))
        for t in ts:
            q = quad_point(pts[0], pts[1], pts[2], t)
            c = cubic_point(*seg.points(), t)
            worst_ratio = max(worst_ratio, float(np.hypot(*(q - c))) / scale)
    assert worst_ratio < 1e-9
    _report(3, f"1000 random elevations, worst relative deviation {worst_ratio:.2e}")


def test_criterion_4_deformation_golden_run():
    start = time.monotonic()
    face = fontparse.load_font(fontbuild.builtin_font_bytes("square"))
    outline = fontparse.normalize_outline(fontparse.extract_glyph(face, "A", 64.0))
    raster = RasterConfig(64, 64)
    target = make_target("circle", 64, 64, scale=0.8)
    cfg = DeformConfig(raster=raster)  # defaults: 200 steps
    policy = RegionPolicy("all", deform_ratio=1.0)

    first = optimize_deformation(outline, policy, target, cfg)
    assert first.target_iou_after > first.target_iou_before
    assert first.target_iou_after >= 0.90
    assert len(first.loss_trace) == 200
    monotone = sum(
        1 for a, b in zip(first.loss_trace, first.loss_trace[1:])
        if b <= a + 1e-6
    )
    assert monotone >= 0.9 * (len(first.loss_trace) - 1)

    second = optimize_deformation(outline, policy, target, cfg)
    assert np.array_equal(first.final_params.values, second.final_params.values)
    assert first.loss_trace == second.loss_trace
    assert first.target_iou_after == second.target_iou_after

    # anchoring (non-vacuous): a partial-freedom run keeps anchored bits
    partial_policy = RegionPolicy("saliency_ratio", deform_ratio=0.5)
    mask = select_region(outline, partial_policy)
    params0 = to_params(outline)
    short = optimize_deformation(
        outline, partial_policy, target,
        DeformConfig(raster=raster, steps=20),
    )
    anchored = ~mask.free
    assert anchored.any()
    assert np.array_equal(
        short.final_params.values[anchored], params0.values[anchored]
    )

    elapsed = time.monotonic() - start
    assert elapsed < 120.0, f"took {elapsed:.1f}s"
    _report(
        4,
        f"square->circle IoU {first.target_iou_before:.4f} -> "
        f"{first.target_iou_after:.4f} (>= 0.90), {monotone}/199 monotone "
        f"steps, bit-identical rerun, anchored unchanged, {elapsed:.1f}s",
    )


def test_criterion_5_gate_loop_arithmetic(tmp_path):
    request = JobRequest(
        text="A", user_text="A cat in jewelry design",
        font_ref="square", backend_config="mock",
    )

    impossible = CountingBackend()
    record = run_pipeline(
        request, tmp_path / "impossible", job_id="5impossible55555",
        backend=impossible,
        cfg=PipelineConfig(deform_steps=4, threshold=1.01),
    )
    assert record.status == "failed_budget"
    assert len(record.candidates) == 12
    assert len(record.directives_history) == 3
    assert impossible.calls["stylize"] == 12
    assert impossible.calls["texturize"] == 0

    always = CountingBackend()
    record2 = run_pipeline(
        request, tmp_path / "always", job_id="5alwayspass55555",
        backend=always,
        cfg=PipelineConfig(deform_steps=4, threshold=0.0),
    )
    assert record2.status == "done"
    assert len(record2.candidates) == 4
    assert all(c.score.passed and c.textured for c in record2.candidates)
    textured = list((tmp_path / "always" / "5alwayspass55555").rglob("textured.png"))
    assert len(textured) == 4
    _report(
        5,
        "impossible gate: failed_budget at 12 candidates / 3 directives; "
        "always-pass gate: done at 4 candidates, 4 textured",
    )


def test_criterion_6_end_to_end_cli(tmp_path):
    start = time.monotonic()
    job_root = tmp_path / "cli-jobs"

    result = subprocess.run(
        [sys.executable, "-m", "wordart.cli", "generate",
         "--text", "A", "--request", "A cat in jewelry design",
         "--font", "square", "--backend", "mock",
         "--out", str(job_root), "--seed", "7",
         "--job-id", "6e2ecli666666666"],
        capture_output=True, text=True, timeout=170,
    )
    assert result.returncode == 0, result.stderr

    record = load_job(job_root, "6e2ecli666666666")
    assert record.status == "done"
    passed = [c for c in record.candidates if c.score.passed]
    assert len(passed) >= 2

    job_dir = job_root / "6e2ecli666666666"
    assert (job_dir / "job.json").exists()
    for cand in record.candidates:
        base = job_dir / f"iter_{cand.iteration}" / f"cand_{cand.index}"
        for name in ("deformed.svg", "deformed.png", "depth.png",
                     "stylized.png", "score.json"):
            assert (base / name).exists(), f"{base}/{name}"
        if cand.score.passed:
            assert (base / "textured.png").exists()

    # persist/load round trip
    persist_job(record, tmp_path / "copy")
    again = load_job(tmp_path / "copy", record.id)
    assert again == record

    # crash mid-stylize, then resume: completed backend calls never repeat
    crash_root = tmp_path / "crash"
    crashing = FaultyBackend(fail_on_call=2)
    request = JobRequest(
        text="A", user_text="A cat in jewelry design",
        font_ref="square", backend_config="mock",
    )
    broken = run_pipeline(
        request, crash_root, job_id="6crashresume6666",
        backend=crashing, cfg=PipelineConfig(deform_steps=4),
    )
    assert broken.status == "failed_error"
    persisted = {
        p: p.stat().st_mtime_ns
        for p in (crash_root / "6crashresume6666").rglob("stylized.png")
    }
    assert persisted, "no stylize results survived the crash"

    healthy = CountingBackend()
    resumed = run_pipeline(
        request, crash_root, job_id="6crashresume6666",
        backend=healthy, cfg=PipelineConfig(deform_steps=4),
    )
    assert resumed.status == "done"
    assert healthy.calls["stylize"] == 4 - len(persisted)
    for path, mtime in persisted.items():
        assert path.stat().st_mtime_ns == mtime, f"{path} was rewritten"

    elapsed = time.monotonic() - start
    assert elapsed < 180.0, f"took {elapsed:.1f}s"
    _report(
        6,
        f"CLI generate done with {len(passed)} passes, exact layout, "
        f"round-trip equal, resume re-called only "
        f"{healthy.calls['stylize']}/4 stylizations, {elapsed:.1f}s",
    )


def test_criterion_7_protocol_conformance():
    import threading
    from http.server import ThreadingHTTPServer

    from test_protocol import _StubHandler, EXPECTED_FIELDS
    from wordart.genbackends import RemoteBackend, TexturizeRequest

    _StubHandler.seen = []
    server = ThreadingHTTPServer(("127.0.0.1", 0), _StubHandler)
    threading.Thread(target=server.serve_forever, daemon=True).start()
    try:
        backend = RemoteBackend(f"http://127.0.0.1:{server.server_port}")
        depth = Image(np.zeros((8, 8)))
        backend.stylize(StylizeRequest("p", depth, seed=1, strength=0.5))
        backend.texturize(TexturizeRequest("p", depth, seed=1))
        backend.score(Image(np.zeros((8, 8, 3))), depth, threshold=0.5)
        plan("a plant", backend)
        for path, fields, _ in _StubHandler.seen:
            assert fields == EXPECTED_FIELDS[path], (path, fields)
    finally:
        server.shutdown()

    # 200 seeded malformed replies -> BackendMalformedReply, never a crash
    import httpx

    rng = random.Random(7777)
    failures = 0
    for _ in range(200):
        kind = rng.randrange(5)
        if kind == 0:
            content = bytes(rng.randrange(256) for _ in range(rng.randrange(48)))
        elif kind == 1:
            content = json.dumps(rng.choice([[], 17, "zzz", None])).encode()
        elif kind == 2:
            content = json.dumps({"image_png_b64": rng.choice(
                [None, 9, [], "%%%", ""])}).encode()
        elif kind == 3:
            content = json.dumps({"image_png_b64": base64.b64encode(
                bytes(rng.randrange(256) for _ in range(rng.randrange(1, 32)))
            ).decode()}).encode()
        else:
            content = b'{"image_png_b64": '

        def handler(request, content=content):
            return httpx.Response(200, content=content)

        client = httpx.Client(transport=httpx.MockTransport(handler))
        backend = RemoteBackend("http://backend.test", client=client)
        try:
            backend.stylize(StylizeRequest("x", Image(np.zeros((4, 4))), seed=1))
        except BackendMalformedReply:
            failures += 1
        # anything else propagates and fails the test
    assert failures == 200
    _report(7, "bit-exact request fields on all four endpoints; "
               "200/200 malformed replies -> BackendMalformedReply")


def test_criterion_8_planner_fallback():
    a = plan("A cat in jewelry design")
    b = plan("A cat in jewelry design")
    assert a == b
    assert "cat" in a.semantic_concept
    assert "jewelry" in a.texture_prompt
    assert a.num_variants == 4

    rng = random.Random(31337)

    def random_value(depth=0):
        kind = rng.randrange(7)
        if kind == 0:
            return rng.randint(-1000, 1000)
        if kind == 1:
            return rng.random() * 6 - 3
        if kind == 2:
            return rng.choice(["cat", "", "circle", "diamond", "\x00weird", "1"])
        if kind == 3:
            return rng.choice([True, False, None])
        if kind == 4 and depth < 2:
            return [random_value(depth + 1) for _ in range(rng.randrange(4))]
        if kind == 5 and depth < 2:
            return {str(rng.randrange(5)): random_value(depth + 1)
                    for _ in range(rng.randrange(3))}
        return rng.choice([0, 1, 0.5, "leaf"])

    keys = ["semantic_concept", "target_shape", "style_prompt", "texture_prompt",
            "region_policy", "num_variants", "min_successes_K", "retry_budget",
            "base_seed", "extra", "mode"]
    accepted = 0
    rejected = 0
    for _ in range(1000):
        doc = {rng.choice(keys): random_value() for _ in range(rng.randrange(7))}
        if rng.randrange(10) == 0:
            doc["region_policy"] = {
                "mode": random_value(), "deform_ratio": random_value(),
                "contour_indices": random_value(),
            }
        try:
            directives = validate_directives(doc)
            accepted += 1
            assert directives.min_successes_K <= (
                directives.num_variants * (directives.retry_budget + 1)
            )
        except SchemaViolation:
            rejected += 1
        # any other exception crashes the test
    assert accepted + rejected == 1000
    _report(
        8,
        f"jewelry directives deterministic; fuzz: {accepted} accepted / "
        f"{rejected} rejected / 0 crashes over 1000 seeds",
    )
