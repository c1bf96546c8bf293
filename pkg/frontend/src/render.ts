// Pure state -> HTML string rendering.  No pixels are produced here: every
// image is an <img> pointing at an API artifact URL, and the textured
// result is shown through an object URL created by main.ts from the exact
// bytes the API returned.

import type { StudioState } from "./state";
import { iterationScores, passedCount } from "./state";
import type { CandidateView, JobView } from "./types";

const esc = (text: string): string =>
  text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;")
      .replace(/"/g, "&quot;");

function scoreBadge(candidate: CandidateView): string {
  if (!candidate.score) return '<span class="badge pending">scoring…</span>';
  const value = candidate.score.legibility.toFixed(3);
  return candidate.score.passed
    ? `<span class="badge pass">PASS ${value}</span>`
    : `<span class="badge fail">fail ${value}</span>`;
}

function stageThumb(label: string, url: string | undefined, base: string): string {
  if (!url) return `<figure class="stage missing"><figcaption>${label}</figcaption></figure>`;
  return (
    `<figure class="stage"><img src="${esc(base + url)}" alt="${label}">` +
    `<figcaption>${label}</figcaption></figure>`
  );
}

export function candidateCard(
  candidate: CandidateView, apiBase: string, selected: boolean,
): string {
  const char = candidate.chars[0];
  const art = char?.artifacts ?? {};
  const klass = selected ? "card selected" : "card";
  return `
<article class="${klass}" data-iteration="${candidate.iteration}" data-index="${candidate.index}">
  <header>
    <span>iter ${candidate.iteration} · #${candidate.index} · seed ${candidate.seed}</span>
    ${scoreBadge(candidate)}
  </header>
  <div class="stages">
    ${stageThumb("deformed", art.deformed_png, apiBase)}
    ${stageThumb("depth", art.depth_png, apiBase)}
    ${stageThumb("stylized", art.stylized_png, apiBase)}
    ${stageThumb("textured", art.textured_png, apiBase)}
  </div>
  <footer>IoU ${char ? char.iou_before.toFixed(3) : "?"} → ${char ? char.iou_after.toFixed(3) : "?"}</footer>
</article>`;
}

export function exhaustionBanner(job: JobView): string {
  const rows = iterationScores(job)
    .map(({ iteration, scores }) =>
      `<li>iteration ${iteration}: ${scores.map((s) => s.toFixed(3)).join(", ")}</li>`)
    .join("");
  return `
<div class="banner exhausted">
  <strong>Retry budget exhausted.</strong>
  The gate needed more passing designs than the ${job.candidates.length}
  candidates produced. Per-iteration legibility scores:
  <ul>${rows}</ul>
</div>`;
}

export function errorBanner(job: JobView): string {
  return `
<div class="banner error">
  <strong>Job failed.</strong> ${esc(job.error ?? "unknown cause")}
</div>`;
}

export function render(state: StudioState, apiBase: string): string {
  const parts: string[] = [];

  if (state.submitError) {
    parts.push(`<div class="banner error">submit failed: ${esc(state.submitError)}</div>`);
  }
  if (state.overrideErrors.length) {
    parts.push(
      `<div class="banner warn">invalid overrides: ${state.overrideErrors
        .map(esc).join(", ")}</div>`,
    );
  }
  if (state.jobError) {
    parts.push(`<div class="banner error">${esc(state.jobError)}</div>`);
    return parts.join("\n");
  }

  const job = state.job;
  if (!job) {
    if (state.jobId) {
      parts.push(`<div class="banner info">waiting for job ${esc(state.jobId)}…</div>`);
    }
    return parts.join("\n");
  }

  parts.push(
    `<div class="jobline">job <code>${esc(job.id)}</code> — ` +
    `<span class="status ${esc(job.status)}">${esc(job.status)}</span>` +
    (state.polling ? " (polling)" : "") + `</div>`,
  );

  if (job.status === "failed_budget") parts.push(exhaustionBanner(job));
  if (job.status === "failed_error") parts.push(errorBanner(job));
  if (job.status === "done") {
    parts.push(
      `<div class="banner ok">${passedCount(job)} designs passed the ` +
      `legibility gate (needed ${job.directives_history[0]?.min_successes_K ?? "?"}).</div>`,
    );
  }

  const cards = job.candidates
    .map((candidate) => candidateCard(
      candidate, apiBase,
      state.selected?.iteration === candidate.iteration &&
      state.selected?.index === candidate.index,
    ))
    .join("\n");
  parts.push(`<section class="cards">${cards}</section>`);

  if (state.selected) {
    const pendingNote = state.texturePending ? " (working…)" : "";
    parts.push(
      `<section class="texturize">` +
      `<h2>Texturize selection${pendingNote}</h2>` +
      (state.textureError
        ? `<div class="banner error">${esc(state.textureError)}</div>` : "") +
      `<div id="texture-result"></div>` +
      `</section>`,
    );
  }
  return parts.join("\n");
}
