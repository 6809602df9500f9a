import { expect } from 'vitest';
import type {
  ChromadiffApi,
  ColorizeRequest,
  EnhanceRequest,
  HealthResponse,
  JobStatus,
  RankResponse,
  RescaleResponse,
  SubmitResponse,
} from '../src/api';

export function tick(): Promise<void> {
  return new Promise((r) => setTimeout(r, 0));
}

export async function waitFor(pred: () => boolean, timeoutMs = 2000): Promise<void> {
  const start = Date.now();
  while (!pred()) {
    if (Date.now() - start > timeoutMs) {
      expect.fail('waitFor timed out');
    }
    await tick();
  }
}

export interface Deferred<T> {
  promise: Promise<T>;
  resolve: (value: T) => void;
  reject: (err: unknown) => void;
}

export function deferred<T>(): Deferred<T> {
  let resolve!: (value: T) => void;
  let reject!: (err: unknown) => void;
  const promise = new Promise<T>((res, rej) => {
    resolve = res;
    reject = rej;
  });
  return { promise, resolve, reject };
}

/**
 * In-memory stand-in for the HTTP client. Jobs submitted through it flip
 * to "done" with the canned payload on the next poll unless a test queues
 * explicit statuses.
 */
export class FakeApi implements ChromadiffApi {
  colorizeCalls: ColorizeRequest[] = [];
  enhanceCalls: EnhanceRequest[] = [];
  rescaleCalls: { jobId: string; colorScale: number }[] = [];
  rankCalls: string[] = [];
  statusQueue: JobStatus[] = [];
  doneStatus: JobStatus | null = null;
  rescaleImage = 'UkVTQ0FMRUQ=';
  bestScale = 1.2;

  async health(): Promise<HealthResponse> {
    return { status: 'ok', codec: 'identity', denoiser_loaded: true, ranker_loaded: true };
  }

  async colorize(req: ColorizeRequest): Promise<SubmitResponse> {
    this.colorizeCalls.push(req);
    return { job_id: 'job-c1', status: 'queued', config_hash: 'cfg1' };
  }

  async enhance(req: EnhanceRequest): Promise<SubmitResponse> {
    this.enhanceCalls.push(req);
    return { job_id: 'job-e1', status: 'queued', config_hash: 'cfg2' };
  }

  async rescale(jobId: string, colorScale: number): Promise<RescaleResponse> {
    this.rescaleCalls.push({ jobId, colorScale });
    return { job_id: jobId, color_scale: colorScale, image: this.rescaleImage };
  }

  async rank(jobId: string): Promise<RankResponse> {
    this.rankCalls.push(jobId);
    return {
      job_id: jobId,
      best_scale: this.bestScale,
      scores: [{ scale: this.bestScale, score: 1 }],
    };
  }

  async getJob(jobId: string): Promise<JobStatus> {
    const queued = this.statusQueue.shift();
    if (queued) return queued;
    if (this.doneStatus) return { ...this.doneStatus, id: jobId };
    throw new Error(`no such job ${jobId}`);
  }

  artifactUrl(jobId: string, name: string): string {
    return `/jobs/${jobId}/artifacts/${name}`;
  }
}

export function doneColorizeJob(overrides: Partial<JobStatus> = {}): JobStatus {
  return {
    id: 'job-c1',
    kind: 'colorize',
    status: 'done',
    error: null,
    config_hash: 'cfg1',
    artifacts: ['input.png', 'result.png'],
    result: {
      image: 'UkVTVUxU',
      chosen_scale: null,
      steps: 10,
      guidance: 1.6,
      color_scale: 0.8,
    },
    ...overrides,
  };
}
