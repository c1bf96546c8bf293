// Typed client for the wordart REST API.  fetch is injectable for tests.

import type { JobView } from "./types";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

async function errorMessage(response: Response): Promise<string> {
  try {
    const doc = await response.json();
    if (doc && typeof doc.error === "string") return doc.error;
  } catch {
    // fall through to the status line
  }
  return `HTTP ${response.status}`;
}

export class StudioApi {
  constructor(
    public readonly base: string,
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private url(path: string): string {
    return this.base.replace(/\/$/, "") + path;
  }

  async health(): Promise<boolean> {
    try {
      const response = await this.fetchImpl(this.url("/api/health"));
      return response.ok;
    } catch {
      return false;
    }
  }

  async submitJob(
    text: string,
    userText: string,
    overrides: Record<string, unknown> | null,
    fontRef = "square",
  ): Promise<string> {
    const response = await this.fetchImpl(this.url("/api/jobs"), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({
        text,
        user_text: userText,
        font_ref: fontRef,
        overrides,
      }),
    });
    if (response.status !== 202) {
      throw new ApiError(response.status, await errorMessage(response));
    }
    const doc = await response.json();
    return doc.job_id as string;
  }

  async getJob(jobId: string): Promise<JobView> {
    const response = await this.fetchImpl(
      this.url(`/api/jobs/${encodeURIComponent(jobId)}`),
    );
    if (!response.ok) {
      throw new ApiError(response.status, await errorMessage(response));
    }
    return (await response.json()) as JobView;
  }

  artifactUrl(relative: string): string {
    // Candidate artifact URLs arrive server-rooted (/api/jobs/...).
    return this.url(relative);
  }

  async fetchArtifact(relative: string): Promise<ArrayBuffer> {
    const response = await this.fetchImpl(this.artifactUrl(relative));
    if (!response.ok) {
      throw new ApiError(response.status, await errorMessage(response));
    }
    return response.arrayBuffer();
  }

  async texturize(
    stylizedPngB64: string,
    texturePrompt: string,
    seed: number,
  ): Promise<ArrayBuffer> {
    const response = await this.fetchImpl(this.url("/api/texturize"), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({
        stylized_png_b64: stylizedPngB64,
        texture_prompt: texturePrompt,
        seed,
      }),
    });
    if (!response.ok) {
      throw new ApiError(response.status, await errorMessage(response));
    }
    return response.arrayBuffer();
  }
}

export function bytesToBase64(buffer: ArrayBuffer): string {
  const bytes = new Uint8Array(buffer);
  let binary = "";
  const block = 0x8000;
  for (let i = 0; i < bytes.length; i += block) {
    binary += String.fromCharCode(...bytes.subarray(i, i + block));
  }
  return btoa(binary);
}
