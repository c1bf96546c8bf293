"""One full job: plan -> deform -> stylize -> gate -> texturize.

Equivalent to `wordart generate --text A --request "A cat in jewelry design"
--font square --backend mock --out demos/out/jobs`.
"""

from pathlib import Path

from wordart.orchestrator import JobRequest, PipelineConfig, run_pipeline

OUT = Path(__file__).parent / "out" / "jobs"

request = JobRequest(
    text="A",
    user_text="A cat in jewelry design",
    font_ref="square",
    backend_config="mock",
)
record = run_pipeline(
    request, OUT, job_id="demo000000000005",
    cfg=PipelineConfig(deform_steps=60),
)

print(f"job {record.id}: {record.status}")
directives = record.directives_history[0]
print(f"planner: concept={directives.semantic_concept!r} "
      f"shape={directives.target_shape!r}")
print(f"         texture={directives.texture_prompt!r}")
for cand in record.candidates:
    char = cand.chars[0]
    mark = "PASS" if cand.score.passed else "fail"
    tex = " + textured" if char.textured else ""
    print(f"  candidate {cand.iteration}/{cand.index} seed={cand.seed}: "
          f"legibility {cand.score.legibility:.3f} [{mark}]{tex}")
print(f"\nbrowse the artifacts under {OUT / record.id}")
