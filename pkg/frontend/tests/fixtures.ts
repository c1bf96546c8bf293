// Job documents shaped exactly like GET /api/jobs/{id} replies.

import type { CandidateView, JobView } from "../src/types";

export function candidate(
  iteration: number,
  index: number,
  passed: boolean,
  opts: { textured?: boolean; legibility?: number } = {},
): CandidateView {
  const rel = `iter_${iteration}/cand_${index}`;
  const legibility = opts.legibility ?? (passed ? 0.8 : 0.3);
  const artifacts: Record<string, string> = {
    deformed_svg: `/api/jobs/j1/artifacts/${rel}/deformed.svg`,
    deformed_png: `/api/jobs/j1/artifacts/${rel}/deformed.png`,
    depth_png: `/api/jobs/j1/artifacts/${rel}/depth.png`,
    stylized_png: `/api/jobs/j1/artifacts/${rel}/stylized.png`,
    score_json: `/api/jobs/j1/artifacts/${rel}/score.json`,
  };
  if (opts.textured) {
    artifacts.textured_png = `/api/jobs/j1/artifacts/${rel}/textured.png`;
  }
  return {
    iteration,
    index,
    seed: 100 + iteration * 4 + index,
    chars: [{
      char: "A",
      rel_dir: rel,
      iou_before: 0.82,
      iou_after: 0.92,
      deform_flags: [],
      score: { legibility, passed, threshold: 0.55 },
      textured: Boolean(opts.textured),
      artifacts,
    }],
    score: { legibility, passed, threshold: 0.55 },
    textured: Boolean(opts.textured),
  };
}

export function doneJob(): JobView {
  return {
    id: "j1",
    status: "done",
    request: {
      text: "A",
      user_text: "A cat in jewelry design",
      font_ref: "square",
      overrides: null,
      backend_config: "mock",
    },
    directives_history: [{
      semantic_concept: "cat",
      target_shape: "diamond",
      style_prompt: "cat themed artistic typography",
      texture_prompt: "sparkling jewelry",
      region_policy: { mode: "saliency_ratio", contour_indices: [], deform_ratio: 0.5 },
      num_variants: 4,
      min_successes_K: 2,
      retry_budget: 2,
      base_seed: 100,
    }],
    candidates: [
      candidate(0, 0, true, { textured: true }),
      candidate(0, 1, true, { textured: true }),
      candidate(0, 2, false),
      candidate(0, 3, true, { textured: true }),
    ],
    created: "2024-01-01T00:00:00+00:00",
    updated: "2024-01-01T00:01:00+00:00",
    error: null,
  };
}

export function exhaustedJob(): JobView {
  const job = doneJob();
  return {
    ...job,
    status: "failed_budget",
    candidates: [
      candidate(0, 0, false, { legibility: 0.31 }),
      candidate(0, 1, false, { legibility: 0.28 }),
      candidate(1, 0, false, { legibility: 0.33 }),
      candidate(1, 1, false, { legibility: 0.30 }),
    ],
  };
}

export function runningJob(): JobView {
  const job = doneJob();
  return { ...job, status: "stylizing", candidates: [] };
}
