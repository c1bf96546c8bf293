// Shapes of the documents the REST API serves.

export interface ScoreReport {
  legibility: number;
  passed: boolean;
  threshold: number;
}

export interface RegionPolicyDoc {
  mode: "all" | "contour_indices" | "saliency_ratio";
  contour_indices: number[];
  deform_ratio: number;
}

export interface DirectivesDoc {
  semantic_concept: string;
  target_shape: string;
  style_prompt: string;
  texture_prompt: string;
  region_policy: RegionPolicyDoc;
  num_variants: number;
  min_successes_K: number;
  retry_budget: number;
  base_seed: number;
  provenance?: string;
}

export interface CharView {
  char: string;
  rel_dir: string;
  iou_before: number;
  iou_after: number;
  deform_flags: string[];
  score: ScoreReport | null;
  textured: boolean;
  artifacts: Record<string, string>;
}

export interface CandidateView {
  iteration: number;
  index: number;
  seed: number;
  chars: CharView[];
  score: ScoreReport | null;
  textured: boolean;
}

export type JobStatus =
  | "planning"
  | "deforming"
  | "stylizing"
  | "gating"
  | "texturizing"
  | "done"
  | "failed_budget"
  | "failed_error";

export interface JobView {
  id: string;
  status: JobStatus;
  request: {
    text: string;
    user_text: string;
    font_ref: string;
    overrides: Record<string, unknown> | null;
    backend_config: string;
  };
  directives_history: DirectivesDoc[];
  candidates: CandidateView[];
  created: string;
  updated: string;
  error: string | null;
}

export const TERMINAL_STATUSES: ReadonlySet<string> = new Set([
  "done",
  "failed_budget",
  "failed_error",
]);

export const TARGET_SHAPES = ["circle", "diamond", "heart", "leaf", "star"] as const;
