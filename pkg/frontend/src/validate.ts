// Client-side mirror of the server's directive validation: same rules,
// same field paths in the error list, so 400s rarely surprise the user.

import { TARGET_SHAPES } from "./types";

export interface OverrideForm {
  target_shape?: string;
  style_prompt?: string;
  texture_prompt?: string;
  deform_ratio?: number;
  num_variants?: number;
  min_successes_K?: number;
  retry_budget?: number;
  base_seed?: number;
}

const isInt = (v: unknown): v is number =>
  typeof v === "number" && Number.isInteger(v);

export function validateOverrides(form: OverrideForm): string[] {
  const problems: string[] = [];
  if (form.target_shape !== undefined &&
      !(TARGET_SHAPES as readonly string[]).includes(form.target_shape)) {
    problems.push("target_shape");
  }
  if (form.deform_ratio !== undefined) {
    const r = form.deform_ratio;
    if (typeof r !== "number" || Number.isNaN(r) || r < 0 || r > 1) {
      problems.push("region_policy.deform_ratio");
    }
  }
  if (form.num_variants !== undefined &&
      (!isInt(form.num_variants) || form.num_variants < 1)) {
    problems.push("num_variants");
  }
  if (form.min_successes_K !== undefined &&
      (!isInt(form.min_successes_K) || form.min_successes_K < 1)) {
    problems.push("min_successes_K");
  }
  if (form.retry_budget !== undefined &&
      (!isInt(form.retry_budget) || form.retry_budget < 0)) {
    problems.push("retry_budget");
  }
  if (form.base_seed !== undefined && !isInt(form.base_seed)) {
    problems.push("base_seed");
  }
  const variants = form.num_variants ?? 4;
  const k = form.min_successes_K ?? 2;
  const budget = form.retry_budget ?? 2;
  if (
    isInt(variants) && variants >= 1 &&
    isInt(budget) && budget >= 0 &&
    isInt(k) && k >= 1 &&
    k > variants * (budget + 1)
  ) {
    problems.push("min_successes_K");
  }
  return [...new Set(problems)].sort();
}

// The wire document: only supplied fields are sent; deform_ratio nests
// under region_policy exactly as the server expects.
export function overridesToWire(form: OverrideForm): Record<string, unknown> | null {
  const wire: Record<string, unknown> = {};
  if (form.target_shape !== undefined) wire.target_shape = form.target_shape;
  if (form.style_prompt) wire.style_prompt = form.style_prompt;
  if (form.texture_prompt) wire.texture_prompt = form.texture_prompt;
  if (form.num_variants !== undefined) wire.num_variants = form.num_variants;
  if (form.min_successes_K !== undefined) wire.min_successes_K = form.min_successes_K;
  if (form.retry_budget !== undefined) wire.retry_budget = form.retry_budget;
  if (form.base_seed !== undefined) wire.base_seed = form.base_seed;
  if (form.deform_ratio !== undefined) {
    wire.region_policy = {
      mode: "saliency_ratio",
      contour_indices: [],
      deform_ratio: form.deform_ratio,
    };
  }
  return Object.keys(wire).length ? wire : null;
}
