// Typed client for the colorization service. Every method maps 1:1 onto
// an HTTP endpoint; no response is reinterpreted client-side beyond JSON
// parsing. Artifact bytes are fetched raw so exports stay bit-identical
// to what the server wrote.

export type JobState = 'queued' | 'running' | 'done' | 'failed';

export interface HealthResponse {
  status: string;
  codec: string;
  denoiser_loaded: boolean;
  ranker_loaded: boolean;
}

export interface SubmitResponse {
  job_id: string;
  status: string;
  config_hash: string;
}

export interface TracePoint {
  step: number;
  t: number;
  colorfulness: number;
}

export interface ColorizeResult {
  image: string; // base64 PNG
  chosen_scale: number | null;
  steps: number;
  guidance: number;
  color_scale: number;
  trace?: TracePoint[];
}

export interface ManifestEntry {
  row: number;
  col: number;
  seed: number;
  start: number;
  failed: boolean;
  error: string | null;
  file: string | null;
}

export interface JobStatus {
  id: string;
  kind: 'colorize' | 'enhance';
  status: JobState;
  error: string | null;
  config_hash: string;
  artifacts: string[];
  result?: ColorizeResult;
  manifest?: ManifestEntry[];
}

export interface ColorizeRequest {
  image: string; // base64 PNG
  prompt?: string;
  negative?: string;
  steps?: number;
  guidance?: number;
  color_scale?: number;
  use_ranker?: boolean;
  trace?: boolean;
}

export interface EnhanceRequest {
  image: string;
  seeds?: number[];
  starts?: number[];
  steps?: number;
  guidance?: number;
  prompt?: string;
  negative?: string;
}

export interface RescaleResponse {
  job_id: string;
  color_scale: number;
  image: string;
}

export interface RankResponse {
  job_id: string;
  best_scale: number;
  scores: { scale: number; score: number }[];
}

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
    this.name = 'ApiError';
  }
}

/** Structural interface so views can take a fake in tests. */
export interface ChromadiffApi {
  health(): Promise<HealthResponse>;
  colorize(req: ColorizeRequest): Promise<SubmitResponse>;
  enhance(req: EnhanceRequest): Promise<SubmitResponse>;
  rescale(jobId: string, colorScale: number): Promise<RescaleResponse>;
  rank(jobId: string): Promise<RankResponse>;
  getJob(jobId: string): Promise<JobStatus>;
  artifactUrl(jobId: string, name: string): string;
}

type FetchFn = typeof fetch;

export class ApiClient implements ChromadiffApi {
  constructor(
    private base: string = '',
    private fetchFn: FetchFn = (...args) => fetch(...args),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const res = await this.fetchFn(this.base + path, init);
    if (!res.ok) {
      const detail = await res
        .json()
        .then((d: { detail?: string }) => d.detail)
        .catch(() => undefined);
      throw new ApiError(res.status, detail ?? `HTTP ${res.status}`);
    }
    return (await res.json()) as T;
  }

  private post<T>(path: string, body: unknown): Promise<T> {
    return this.request<T>(path, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify(body),
    });
  }

  health(): Promise<HealthResponse> {
    return this.request('/healthz');
  }

  colorize(req: ColorizeRequest): Promise<SubmitResponse> {
    return this.post('/colorize', req);
  }

  enhance(req: EnhanceRequest): Promise<SubmitResponse> {
    return this.post('/enhance', req);
  }

  rescale(jobId: string, colorScale: number): Promise<RescaleResponse> {
    return this.post('/rescale', { job_id: jobId, color_scale: colorScale });
  }

  rank(jobId: string): Promise<RankResponse> {
    return this.post('/rank', { job_id: jobId });
  }

  getJob(jobId: string): Promise<JobStatus> {
    return this.request(`/jobs/${encodeURIComponent(jobId)}`);
  }

  artifactUrl(jobId: string, name: string): string {
    return `${this.base}/jobs/${encodeURIComponent(jobId)}/artifacts/${encodeURIComponent(name)}`;
  }

  /** Raw artifact bytes, untouched. Exports must never recompress. */
  async fetchArtifact(jobId: string, name: string): Promise<ArrayBuffer> {
    const res = await this.fetchFn(this.artifactUrl(jobId, name));
    if (!res.ok) {
      throw new ApiError(res.status, `no artifact ${name}`);
    }
    return res.arrayBuffer();
  }
}
