import type { ChromadiffApi, JobStatus } from './api';

const TERMINAL = new Set(['done', 'failed']);

/**
 * Poll a job until it reaches a terminal state, yielding every status
 * snapshot along the way so callers can render progress.
 */
export async function* watchJob(
  api: ChromadiffApi,
  jobId: string,
  intervalMs = 700,
): AsyncGenerator<JobStatus> {
  while (true) {
    const job = await api.getJob(jobId);
    yield job;
    if (TERMINAL.has(job.status)) {
      return;
    }
    await new Promise((r) => setTimeout(r, intervalMs));
  }
}

/** Drain the watcher and hand back the terminal status. */
export async function untilDone(
  api: ChromadiffApi,
  jobId: string,
  intervalMs = 700,
  onUpdate?: (job: JobStatus) => void,
): Promise<JobStatus> {
  let last: JobStatus | undefined;
  for await (const job of watchJob(api, jobId, intervalMs)) {
    last = job;
    onUpdate?.(job);
  }
  // the generator always yields at least once before returning
  return last as JobStatus;
}
