"""Artistic typography synthesis.

Glyph outlines are parsed from TrueType binaries, deformed toward semantic
silhouettes through a differentiable rasterizer, stylized and textured by
pluggable generative backends (with deterministic local mocks), and gated
by a legibility scorer inside a bounded retry loop.
"""

from .diffrast import ParamGradient, RasterConfig, flatten, loss_gradient, rasterize
from .errors import WordartError
from .fontparse import (
    Contour,
    CubicSegment,
    FontFace,
    GlyphOutline,
    elevate_quadratic,
    extract_glyph,
    load_font,
    normalize_outline,
)
from .genbackends import (
    MockBackend,
    RemoteBackend,
    ScoreReport,
    StylizeRequest,
    TexturizeRequest,
    control_map,
    depth_map,
    legibility_score,
    make_backend,
)
from .image import Image
from .orchestrator import (
    CandidateRecord,
    JobRecord,
    JobRequest,
    PipelineConfig,
    load_job,
    persist_job,
    quality_gate,
    run_pipeline,
)
from .planner import Directives, PlanFeedback, plan, replan, validate_directives
from .deform import (
    DeformConfig,
    DeformResult,
    TargetShape,
    make_target,
    optimize_deformation,
    smoothness_penalty,
    target_loss,
    tone_loss,
)
from .shapeparam import (
    FreedomMask,
    ParamVector,
    RegionPolicy,
    apply_update,
    from_params,
    select_region,
    to_params,
)

__version__ = "0.1.0"
