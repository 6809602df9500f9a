// Colorize view: upload a grayscale photo, set prompts and sampler knobs,
// run one diffusion job, then retune the color scale live. Retuning goes
// through POST /rescale, which decodes from the cached residual; diffusion
// never runs again for a slider move.

import type { ChromadiffApi, JobStatus } from './api';
import { untilDone } from './jobs';
import { SLIDERS, buildColorizeRequest, clampSlider, pushHistory } from './state';
import type { SessionState, SliderDef } from './state';
import {
  dataUrlToB64,
  downscaleDims,
  downscaleToPng,
  fileToDataUrl,
  loadImageDims,
  needsDownscale,
} from './upload';

export interface ColorizeViewOptions {
  pollMs?: number;
  debounceMs?: number;
  rankerLoaded?: boolean;
}

/** Step-trace frames in playback order. */
export function frameArtifacts(artifacts: string[]): string[] {
  return artifacts.filter((n) => /^frame_\d{3}\.png$/.test(n)).sort();
}

/**
 * Debounced rescale dispatcher. Stale responses are dropped by sequence
 * number so a slow early request cannot overwrite a newer image.
 */
export function makeRescaler(
  api: ChromadiffApi,
  getJobId: () => string | null,
  onImage: (b64: string, scale: number) => void,
  onError: (message: string) => void,
  delayMs = 150,
): (scale: number) => void {
  let timer: ReturnType<typeof setTimeout> | undefined;
  let seq = 0;
  return (scale: number) => {
    const jobId = getJobId();
    if (!jobId) return;
    if (timer !== undefined) clearTimeout(timer);
    timer = setTimeout(async () => {
      const mySeq = ++seq;
      try {
        const resp = await api.rescale(jobId, scale);
        if (mySeq === seq) onImage(resp.image, resp.color_scale);
      } catch (err) {
        if (mySeq === seq) onError(err instanceof Error ? err.message : String(err));
      }
    }, delayMs);
  };
}

interface Els {
  file: HTMLInputElement;
  uploadInfo: HTMLElement;
  downscaleBtn: HTMLButtonElement;
  preview: HTMLImageElement;
  prompt: HTMLInputElement;
  negative: HTMLInputElement;
  sliders: Record<SliderDef['key'], { input: HTMLInputElement; readout: HTMLElement }>;
  ranker: HTMLInputElement;
  traceReq: HTMLInputElement;
  run: HTMLButtonElement;
  status: HTMLElement;
  result: HTMLImageElement;
  resultMeta: HTMLElement;
  rerank: HTMLButtonElement;
  animate: HTMLInputElement;
  animateRow: HTMLElement;
  history: HTMLUListElement;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
  if (text !== undefined) node.textContent = text;
  return node;
}

function sliderRow(def: SliderDef, value: number): {
  row: HTMLElement;
  input: HTMLInputElement;
  readout: HTMLElement;
} {
  const row = el('div', { class: 'slider-row' });
  row.appendChild(el('label', { for: `cz-${def.key}` }, def.label));
  const input = el('input', {
    type: 'range',
    id: `cz-${def.key}`,
    min: String(def.min),
    max: String(def.max),
    step: String(def.step),
  });
  input.value = String(value);
  const readout = el('span', { class: 'readout' }, String(value));
  row.appendChild(input);
  row.appendChild(readout);
  return { row, input, readout };
}

function build(root: HTMLElement, state: SessionState): Els {
  const panel = el('div', { class: 'panel' });

  const uploadBox = el('div', { class: 'upload-box' });
  const file = el('input', { type: 'file', id: 'cz-file', accept: 'image/*' });
  const uploadInfo = el('div', { id: 'cz-upload-info', class: 'hint' });
  const downscaleBtn = el('button', { id: 'cz-downscale', hidden: '' }, 'Downscale') as HTMLButtonElement;
  const preview = el('img', { id: 'cz-preview', class: 'preview', alt: 'input preview' });
  uploadBox.append(file, uploadInfo, downscaleBtn, preview);

  const prompt = el('input', { type: 'text', id: 'cz-prompt', placeholder: 'prompt (optional)' });
  const negative = el('input', { type: 'text', id: 'cz-negative', placeholder: 'negative prompt (optional)' });

  const sliders = {} as Els['sliders'];
  const sliderBox = el('div', { class: 'sliders' });
  for (const def of [SLIDERS.steps, SLIDERS.guidance, SLIDERS.colorScale]) {
    const { row, input, readout } = sliderRow(def, state[def.key]);
    sliders[def.key] = { input, readout };
    sliderBox.appendChild(row);
  }

  const toggles = el('div', { class: 'toggles' });
  const ranker = el('input', { type: 'checkbox', id: 'cz-ranker' });
  const traceReq = el('input', { type: 'checkbox', id: 'cz-trace' });
  traceReq.checked = state.trace;
  const rankerLabel = el('label', { for: 'cz-ranker' }, 'pick scale with ranker');
  const traceLabel = el('label', { for: 'cz-trace' }, 'record step trace');
  toggles.append(ranker, rankerLabel, traceReq, traceLabel);

  const run = el('button', { id: 'cz-run', class: 'primary' }, 'Colorize') as HTMLButtonElement;
  const status = el('div', { id: 'cz-status', class: 'status' });

  const resultBox = el('div', { class: 'result-box' });
  const result = el('img', { id: 'cz-result', class: 'result', alt: 'colorized result' });
  const resultMeta = el('div', { id: 'cz-meta', class: 'hint' });
  const rerank = el('button', { id: 'cz-rerank', hidden: '' }, 'Re-rank scale') as HTMLButtonElement;
  const animate = el('input', { type: 'checkbox', id: 'cz-animate' });
  const animateLabel = el('label', { for: 'cz-animate' }, 'animate step trace');
  const animateRow = el('div', { id: 'cz-animate-row', class: 'toggles', hidden: '' });
  animateRow.append(animate, animateLabel);
  resultBox.append(result, resultMeta, rerank, animateRow);

  const history = el('ul', { id: 'cz-history', class: 'history' });

  panel.append(uploadBox, prompt, negative, sliderBox, toggles, run, status, resultBox, history);
  root.appendChild(panel);
  return {
    file, uploadInfo, downscaleBtn, preview, prompt, negative, sliders,
    ranker, traceReq, run, status, result, resultMeta, rerank, animate,
    animateRow, history,
  };
}

export function renderColorizeView(
  root: HTMLElement,
  api: ChromadiffApi,
  state: SessionState,
  opts: ColorizeViewOptions = {},
): void {
  const pollMs = opts.pollMs ?? 700;
  const els = build(root, state);
  let pendingDataUrl: string | null = null;
  let frames: string[] = [];
  let frameJobId: string | null = null;
  let frameTimer: ReturnType<typeof setInterval> | undefined;
  let currentImageSrc = '';

  const setStatus = (msg: string, isError = false) => {
    els.status.textContent = msg;
    els.status.classList.toggle('error', isError);
  };

  const showImage = (src: string) => {
    currentImageSrc = src;
    if (!els.animate.checked) els.result.src = src;
  };

  const rescaler = makeRescaler(
    api,
    () => state.lastJobId,
    (b64, scale) => {
      showImage(`data:image/png;base64,${b64}`);
      setStatus(`rescaled to ${scale.toFixed(2)}`);
    },
    (msg) => setStatus(msg, true),
    opts.debounceMs ?? 150,
  );

  const acceptUpload = (dataUrl: string) => {
    state.image = dataUrlToB64(dataUrl);
    els.preview.src = dataUrl;
    els.downscaleBtn.hidden = true;
    pendingDataUrl = null;
  };

  els.file.addEventListener('change', async () => {
    const f = els.file.files?.[0];
    if (!f) return;
    state.imageName = f.name;
    try {
      const dataUrl = await fileToDataUrl(f);
      const dims = await loadImageDims(dataUrl);
      if (needsDownscale(dims.width, dims.height)) {
        const target = downscaleDims(dims.width, dims.height);
        pendingDataUrl = dataUrl;
        els.uploadInfo.textContent =
          `${dims.width}x${dims.height} exceeds the 8 MP cap; ` +
          `downscale to ${target.width}x${target.height}?`;
        els.downscaleBtn.textContent = `Downscale to ${target.width}x${target.height}`;
        els.downscaleBtn.hidden = false;
        state.image = null;
      } else {
        els.uploadInfo.textContent = `${dims.width}x${dims.height}`;
        acceptUpload(dataUrl);
      }
    } catch (err) {
      setStatus(err instanceof Error ? err.message : String(err), true);
    }
  });

  els.downscaleBtn.addEventListener('click', async () => {
    if (!pendingDataUrl) return;
    try {
      const dims = await loadImageDims(pendingDataUrl);
      const target = downscaleDims(dims.width, dims.height);
      const scaled = await downscaleToPng(pendingDataUrl, target);
      els.uploadInfo.textContent = `${target.width}x${target.height} (downscaled)`;
      acceptUpload(scaled);
    } catch (err) {
      setStatus(err instanceof Error ? err.message : String(err), true);
    }
  });

  for (const def of [SLIDERS.steps, SLIDERS.guidance, SLIDERS.colorScale]) {
    const { input, readout } = els.sliders[def.key];
    input.addEventListener('input', () => {
      const v = clampSlider(def, Number(input.value));
      state[def.key] = v;
      readout.textContent = def.integer ? String(v) : v.toFixed(2);
      // the color-scale slider doubles as the live retune control once a
      // job has finished; the other two only configure the next run
      if (def.key === 'colorScale' && state.lastJobId && !state.busy) {
        rescaler(v);
      }
    });
  }

  els.ranker.addEventListener('change', () => {
    state.useRanker = els.ranker.checked;
  });
  els.traceReq.addEventListener('change', () => {
    state.trace = els.traceReq.checked;
  });

  const setScaleSlider = (scale: number) => {
    state.colorScale = scale;
    els.sliders.colorScale.input.value = String(scale);
    els.sliders.colorScale.readout.textContent = scale.toFixed(2);
  };

  const stopAnimation = () => {
    if (frameTimer !== undefined) {
      clearInterval(frameTimer);
      frameTimer = undefined;
    }
  };

  els.animate.addEventListener('change', () => {
    stopAnimation();
    if (els.animate.checked && frames.length && frameJobId) {
      let i = 0;
      const jobId = frameJobId;
      els.result.src = api.artifactUrl(jobId, frames[0]);
      frameTimer = setInterval(() => {
        i = (i + 1) % frames.length;
        els.result.src = api.artifactUrl(jobId, frames[i]);
      }, 350);
    } else {
      els.result.src = currentImageSrc;
    }
  });

  const applyDone = (job: JobStatus) => {
    const result = job.result;
    if (!result) return;
    showImage(`data:image/png;base64,${result.image}`);
    if (result.chosen_scale !== null && result.chosen_scale !== undefined) {
      // surface the server's pick so the slider starts where the ranker left it
      setScaleSlider(result.chosen_scale);
      els.resultMeta.textContent =
        `steps ${result.steps}, guidance ${result.guidance}, ranker chose scale ${result.chosen_scale}`;
    } else {
      els.resultMeta.textContent =
        `steps ${result.steps}, guidance ${result.guidance}, scale ${result.color_scale}`;
    }
    frames = frameArtifacts(job.artifacts);
    frameJobId = job.id;
    els.animateRow.hidden = frames.length === 0;
    els.rerank.hidden = !(opts.rankerLoaded ?? false);
  };

  const renderHistory = () => {
    els.history.textContent = '';
    for (const entry of [...state.history].reverse()) {
      const item = el('li', { class: 'history-item' });
      const label = entry.prompt ? `"${entry.prompt}"` : '(no prompt)';
      item.textContent = `${entry.jobId} ${label} @ ${entry.colorScale}`;
      item.title = `config ${entry.configHash}`;
      item.addEventListener('click', async () => {
        try {
          const job = await api.getJob(entry.jobId);
          if (job.status === 'done' && job.result) {
            state.lastJobId = job.id;
            stopAnimation();
            els.animate.checked = false;
            applyDone(job);
            setStatus(`restored job ${job.id}`);
          } else {
            setStatus(`job ${job.id} is ${job.status}`, true);
          }
        } catch (err) {
          setStatus(err instanceof Error ? err.message : String(err), true);
        }
      });
      els.history.appendChild(item);
    }
  };

  els.run.addEventListener('click', async () => {
    if (state.busy) return;
    if (!state.image) {
      setStatus('upload an image first', true);
      return;
    }
    state.busy = true;
    els.run.disabled = true;
    stopAnimation();
    els.animate.checked = false;
    try {
      const req = buildColorizeRequest(state);
      const submitted = await api.colorize(req);
      pushHistory(state, {
        jobId: submitted.job_id,
        configHash: submitted.config_hash,
        prompt: state.prompt,
        colorScale: req.color_scale ?? state.colorScale,
      });
      renderHistory();
      setStatus(`job ${submitted.job_id} queued`);
      const job = await untilDone(api, submitted.job_id, pollMs, (j) =>
        setStatus(`job ${j.id}: ${j.status}`),
      );
      if (job.status === 'failed') {
        setStatus(job.error ?? 'job failed', true);
      } else {
        applyDone(job);
        setStatus('done');
      }
    } catch (err) {
      setStatus(err instanceof Error ? err.message : String(err), true);
    } finally {
      state.busy = false;
      els.run.disabled = false;
    }
  });

  els.rerank.addEventListener('click', async () => {
    if (!state.lastJobId) return;
    try {
      const resp = await api.rank(state.lastJobId);
      setScaleSlider(resp.best_scale);
      rescaler(resp.best_scale);
      setStatus(`ranker picked scale ${resp.best_scale.toFixed(2)}`);
    } catch (err) {
      setStatus(err instanceof Error ? err.message : String(err), true);
    }
  });
}
