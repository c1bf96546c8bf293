// Studio state machine: submit, poll, select, texturize.
//
// Everything observable by the UI lives in one immutable-ish state object;
// render() maps it to DOM.  The store never touches pixels: candidate
// thumbnails are artifact URLs and the textured result is the raw bytes the
// API returned, exposed for display and download.

import { ApiError, StudioApi, bytesToBase64 } from "./api";
import type { CandidateView, JobView } from "./types";
import { TERMINAL_STATUSES } from "./types";
import { OverrideForm, overridesToWire, validateOverrides } from "./validate";

export interface Selection {
  iteration: number;
  index: number;
}

export interface TextureResult {
  bytes: ArrayBuffer;
  seed: number;
  prompt: string;
}

export interface StudioState {
  jobId: string | null;
  job: JobView | null;
  jobError: string | null;
  submitError: string | null;
  submitting: boolean;
  polling: boolean;
  selected: Selection | null;
  overrides: OverrideForm;
  overrideErrors: string[];
  texturePrompt: string;
  textureSeed: number;
  texturePending: boolean;
  textureError: string | null;
  texture: TextureResult | null;
}

export const POLL_INTERVAL_MS = 2000;

type Listener = (state: StudioState) => void;
type Scheduler = (fn: () => void, ms: number) => void;

const defaultScheduler: Scheduler = (fn, ms) => setTimeout(fn, ms);

export class StudioStore {
  state: StudioState = {
    jobId: null,
    job: null,
    jobError: null,
    submitError: null,
    submitting: false,
    polling: false,
    selected: null,
    overrides: {},
    overrideErrors: [],
    texturePrompt: "",
    textureSeed: 1,
    texturePending: false,
    textureError: null,
    texture: null,
  };

  private listeners: Listener[] = [];
  private pollGeneration = 0;

  constructor(
    public readonly api: StudioApi,
    private readonly schedule: Scheduler = defaultScheduler,
  ) {}

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  private patch(changes: Partial<StudioState>) {
    this.state = { ...this.state, ...changes };
    for (const listener of this.listeners) listener(this.state);
  }

  setOverrides(form: OverrideForm) {
    this.patch({ overrides: form, overrideErrors: validateOverrides(form) });
  }

  canSubmit(text: string, userText: string): boolean {
    return (
      text.trim().length > 0 &&
      userText.trim().length > 0 &&
      !this.state.submitting &&
      validateOverrides(this.state.overrides).length === 0
    );
  }

  async submit(text: string, userText: string, fontRef = "square"): Promise<string | null> {
    if (!this.canSubmit(text, userText)) return null;
    this.patch({ submitting: true, submitError: null });
    try {
      const wire = overridesToWire(this.state.overrides);
      const jobId = await this.api.submitJob(text, userText, wire, fontRef);
      this.patch({
        submitting: false,
        jobId,
        job: null,
        jobError: null,
        selected: null,
        texture: null,
        textureError: null,
      });
      this.startPolling();
      return jobId;
    } catch (error) {
      const message = error instanceof ApiError ? error.message : String(error);
      this.patch({ submitting: false, submitError: message });
      return null;
    }
  }

  /** Attach to an existing job (reload with #job=<id> in the URL). */
  attach(jobId: string) {
    this.patch({
      jobId,
      job: null,
      jobError: null,
      selected: null,
      texture: null,
      textureError: null,
    });
    this.startPolling();
  }

  /** One in-flight poll per job; rearms itself until the job is terminal. */
  startPolling() {
    const generation = ++this.pollGeneration;
    const jobId = this.state.jobId;
    if (!jobId) return;
    this.patch({ polling: true });

    const tick = async () => {
      if (generation !== this.pollGeneration) return; // superseded
      try {
        const job = await this.api.getJob(jobId);
        if (generation !== this.pollGeneration) return;
        this.ingestJob(job);
        if (!TERMINAL_STATUSES.has(job.status)) {
          this.schedule(tick, POLL_INTERVAL_MS);
          return;
        }
      } catch (error) {
        if (generation !== this.pollGeneration) return;
        const message = error instanceof ApiError && error.status === 404
          ? `job ${jobId} not found`
          : String(error instanceof ApiError ? error.message : error);
        this.patch({ jobError: message });
      }
      this.patch({ polling: false });
    };
    void tick();
  }

  /** Poll exactly once and stop (used by tests and manual refresh). */
  async refreshOnce(): Promise<void> {
    const jobId = this.state.jobId;
    if (!jobId) return;
    try {
      this.ingestJob(await this.api.getJob(jobId));
    } catch (error) {
      const message = error instanceof ApiError && error.status === 404
        ? `job ${jobId} not found`
        : String(error instanceof ApiError ? error.message : error);
      this.patch({ jobError: message });
    }
  }

  private ingestJob(job: JobView) {
    let selected = this.state.selected;
    if (selected && !this.findCandidate(job, selected)) {
      selected = null; // the invariant: selection always among polled records
    }
    this.patch({ job, jobError: null, selected });
  }

  private findCandidate(job: JobView, sel: Selection): CandidateView | undefined {
    return job.candidates.find(
      (c) => c.iteration === sel.iteration && c.index === sel.index,
    );
  }

  select(iteration: number, index: number) {
    const job = this.state.job;
    if (!job) return;
    const found = this.findCandidate(job, { iteration, index });
    if (!found) return;
    this.patch({ selected: { iteration, index }, texture: null, textureError: null });
  }

  selectedCandidate(): CandidateView | null {
    const { job, selected } = this.state;
    if (!job || !selected) return null;
    return this.findCandidate(job, selected) ?? null;
  }

  canTexturize(): boolean {
    const candidate = this.selectedCandidate();
    return Boolean(
      candidate &&
      candidate.chars[0]?.artifacts?.stylized_png &&
      !this.state.texturePending,
    );
  }

  setTexturePrompt(prompt: string) {
    this.patch({ texturePrompt: prompt });
  }

  setTextureSeed(seed: number) {
    this.patch({ textureSeed: seed });
  }

  async texturizeSelected(): Promise<TextureResult | null> {
    const candidate = this.selectedCandidate();
    if (!candidate || !this.canTexturize()) return null;
    const stylizedUrl = candidate.chars[0].artifacts.stylized_png;
    this.patch({ texturePending: true, textureError: null });
    try {
      const stylized = await this.api.fetchArtifact(stylizedUrl);
      const bytes = await this.api.texturize(
        bytesToBase64(stylized),
        this.state.texturePrompt,
        this.state.textureSeed,
      );
      const result: TextureResult = {
        bytes,
        seed: this.state.textureSeed,
        prompt: this.state.texturePrompt,
      };
      this.patch({ texturePending: false, texture: result });
      return result;
    } catch (error) {
      const message = error instanceof ApiError ? error.message : String(error);
      this.patch({ texturePending: false, textureError: message });
      return null;
    }
  }
}

/** Per-iteration score summary for the budget-exhaustion banner. */
export function iterationScores(job: JobView): { iteration: number; scores: number[] }[] {
  const byIteration = new Map<number, number[]>();
  for (const candidate of job.candidates) {
    if (!candidate.score) continue;
    const bucket = byIteration.get(candidate.iteration) ?? [];
    bucket.push(candidate.score.legibility);
    byIteration.set(candidate.iteration, bucket);
  }
  return [...byIteration.entries()]
    .sort((a, b) => a[0] - b[0])
    .map(([iteration, scores]) => ({ iteration, scores }));
}

export function passedCount(job: JobView): number {
  return job.candidates.filter((c) => c.score?.passed).length;
}
