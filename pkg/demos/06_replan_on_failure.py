"""Watch the quality gate exhaust its budget and the planner adapt.

A rigged impossible threshold forces every candidate to fail, so the job
replans (advancing seeds, shrinking the deformation ratio) until the retry
budget runs out.
"""

from pathlib import Path

from wordart.orchestrator import JobRequest, PipelineConfig, run_pipeline

OUT = Path(__file__).parent / "out" / "jobs"

request = JobRequest(
    text="A",
    user_text="metal cat",
    font_ref="square",
    backend_config="mock",
)
record = run_pipeline(
    request, OUT, job_id="demo000000000006",
    cfg=PipelineConfig(deform_steps=10, threshold=1.01),  # impossible gate
)

print(f"job {record.id}: {record.status}")
print(f"candidates generated: {len(record.candidates)} "
      f"(= variants x (budget + 1))")
for i, directives in enumerate(record.directives_history):
    print(f"iteration {i}: base_seed={directives.base_seed} "
          f"deform_ratio={directives.region_policy.deform_ratio:.1f}")
scores = [c.score.legibility for c in record.candidates]
print(f"legibility range: {min(scores):.3f} .. {max(scores):.3f} "
      f"(threshold was 1.01, nothing can pass)")
