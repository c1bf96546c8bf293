"""Command line interface: generate / deform / texturize / serve.

Exit codes: 0 done, 2 failed_budget, 3 failed_error, 64 usage error.
"""

from __future__ import annotations

import sys
from pathlib import Path

import click

from . import diffrast, genbackends, orchestrator, planner, svgio
from .deform import DeformConfig, make_target, optimize_deformation
from .errors import MissingGlyph, SchemaViolation, WordartError
from .fontparse import extract_glyph, normalize_outline
from .image import from_png_bytes, write_png
from .orchestrator import (
    JobRequest,
    PipelineConfig,
    load_font_ref,
    run_pipeline,
)
from .service import load_config
from .shapeparam import from_params

EXIT_DONE = 0
EXIT_FAILED_BUDGET = 2
EXIT_FAILED_ERROR = 3
EXIT_USAGE = 64


@click.group()
def cli():
    """Artistic typography synthesis."""


@cli.command()
@click.option("--text", required=True, help="Character(s) to render.")
@click.option("--request", "user_text", required=True, help="Free-form design request.")
@click.option("--font", "font_ref", default="demo", show_default=True,
              help="Font file path or built-in name (square, demo).")
@click.option("--backend", default="mock", show_default=True,
              help="'mock' or backend base URL.")
@click.option("--out", "out_dir", required=True, type=click.Path(), help="Job root directory.")
@click.option("--variants", type=int, default=None, help="Candidates per iteration.")
@click.option("--k", "min_k", type=int, default=None, help="Required successes.")
@click.option("--budget", type=int, default=None, help="Retry budget.")
@click.option("--seed", type=int, default=None, help="Base seed override.")
@click.option("--steps", type=int, default=200, show_default=True, help="Deformation steps.")
@click.option("--threshold", type=float, default=genbackends.DEFAULT_THRESHOLD,
              show_default=True, help="Legibility gate threshold.")
@click.option("--job-id", default=None, help="Explicit job id (resume if it exists).")
def generate(text, user_text, font_ref, backend, out_dir, variants, min_k, budget,
             seed, steps, threshold, job_id):
    """One-stop generation: deform, stylize, gate, texturize."""
    overrides = {}
    if variants is not None:
        overrides["num_variants"] = variants
    if min_k is not None:
        overrides["min_successes_K"] = min_k
    if budget is not None:
        overrides["retry_budget"] = budget
    if seed is not None:
        overrides["base_seed"] = seed

    req = JobRequest(
        text=text,
        user_text=user_text,
        font_ref=font_ref,
        overrides=overrides or None,
        backend_config=backend,
    )
    cfg = PipelineConfig(threshold=threshold, deform_steps=steps)
    try:
        record = run_pipeline(req, out_dir, job_id=job_id, cfg=cfg)
    except (MissingGlyph, SchemaViolation, FileNotFoundError, ValueError) as exc:
        raise click.UsageError(str(exc)) from exc

    click.echo(f"job {record.id}: {record.status}")
    passed = sum(1 for c in record.candidates if c.score and c.score.passed)
    click.echo(f"candidates: {len(record.candidates)}, passed: {passed}")
    click.echo(f"artifacts: {Path(out_dir) / record.id}")
    if record.error:
        click.echo(f"error: {record.error}", err=True)
    if record.status == orchestrator.STATUS_DONE:
        sys.exit(EXIT_DONE)
    if record.status == orchestrator.STATUS_FAILED_BUDGET:
        sys.exit(EXIT_FAILED_BUDGET)
    sys.exit(EXIT_FAILED_ERROR)


@cli.command()
@click.option("--text", required=True, help="Single character to deform.")
@click.option("--font", "font_ref", default="demo", show_default=True)
@click.option("--target", "target_name", default="circle", show_default=True,
              help="Target silhouette name.")
@click.option("--ratio", type=float, default=0.5, show_default=True,
              help="Deformation ratio in [0, 1].")
@click.option("--steps", type=int, default=200, show_default=True)
@click.option("--size", type=int, default=64, show_default=True, help="Canvas size in px.")
@click.option("--out", "out_dir", required=True, type=click.Path())
def deform(text, font_ref, target_name, ratio, steps, size, out_dir):
    """Deform only: writes deformed.svg and deformed.png."""
    if len(text) != 1:
        raise click.UsageError("--text must be a single character")
    try:
        directives = planner.validate_directives(
            {"target_shape": target_name,
             "region_policy": {"mode": "saliency_ratio", "deform_ratio": ratio}}
        )
        face = load_font_ref(font_ref)
        if text not in face.glyph_index_map:
            raise MissingGlyph(f"character {text!r} not mapped by the font")
    except (SchemaViolation, MissingGlyph, FileNotFoundError, WordartError) as exc:
        raise click.UsageError(str(exc)) from exc

    raster = diffrast.RasterConfig(size, size)
    outline = extract_glyph(face, text, float(size))
    if outline.contours:
        outline = normalize_outline(outline)
    target = make_target(directives.target_shape, size, size, scale=0.8)
    cfg = DeformConfig(raster=raster, steps=steps)
    result = optimize_deformation(
        outline, directives.region_policy, target, cfg
    )
    deformed = from_params(result.final_params, outline.em_size_px, outline.advance_px)
    render = diffrast.rasterize(result.final_params, raster)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "deformed.svg").write_text(svgio.svg_document(deformed, size, size))
    write_png(render, out / "deformed.png")
    click.echo(
        f"IoU {result.target_iou_before:.4f} -> {result.target_iou_after:.4f}; "
        f"artifacts in {out}"
    )
    sys.exit(EXIT_DONE)


@cli.command()
@click.option("--image", "image_path", required=True, type=click.Path(exists=True),
              help="Stylized PNG to texture.")
@click.option("--prompt", default="", help="Texture prompt.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--backend", default="mock", show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path(), help="Output PNG path.")
def texturize(image_path, prompt, seed, backend, out_path):
    """Texture an existing stylized image."""
    try:
        image = from_png_bytes(Path(image_path).read_bytes())
    except (ValueError, OSError) as exc:
        raise click.UsageError(f"cannot decode {image_path}: {exc}") from exc
    handle = genbackends.make_backend(backend)
    control = genbackends.control_map(image)
    textured = handle.texturize(
        genbackends.TexturizeRequest(prompt=prompt, control=control, seed=seed)
    )
    write_png(textured, out_path)
    click.echo(f"wrote {out_path}")
    sys.exit(EXIT_DONE)


@cli.command()
@click.option("--config", "config_path", default=None, type=click.Path(),
              help=f"Config file (flat JSON); ${'{'}WORDART_CONFIG{'}'} by default.")
@click.option("--listen", default=None, help="host:port override.")
@click.option("--job-root", default=None, type=click.Path())
@click.option("--font-dir", default=None, type=click.Path())
@click.option("--backend", default=None)
def serve(config_path, listen, job_root, font_dir, backend):
    """Run the REST service."""
    from .service import serve as run_server

    try:
        cfg = load_config(
            config_path,
            listen_address=listen,
            job_root=job_root,
            font_dir=font_dir,
            backend=backend,
        )
    except (ValueError, OSError, TypeError) as exc:
        raise click.UsageError(f"bad config: {exc}") from exc
    click.echo(f"serving on http://{cfg.listen_address} (backend: {cfg.backend})")
    run_server(cfg)


def main(argv=None):
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.UsageError as exc:
        click.echo(f"error: {exc.format_message()}", err=True)
        sys.exit(EXIT_USAGE)
    except click.ClickException as exc:
        exc.show()
        sys.exit(EXIT_USAGE)
    except click.exceptions.Abort:
        sys.exit(EXIT_USAGE)


if __name__ == "__main__":
    main()
