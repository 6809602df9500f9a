import type { ColorizeRequest } from './api';

export interface SliderDef {
  key: 'steps' | 'guidance' | 'colorScale';
  label: string;
  min: number;
  max: number;
  step: number;
  fallback: number;
  integer: boolean;
}

// Ranges are part of the request contract, not styling: the server accepts
// wider values but the UI deliberately stays inside the ranges the sampler
// was designed around.
export const SLIDERS: Record<SliderDef['key'], SliderDef> = {
  steps: { key: 'steps', label: 'Steps', min: 1, max: 100, step: 1, fallback: 10, integer: true },
  guidance: { key: 'guidance', label: 'Guidance', min: 0, max: 3, step: 0.05, fallback: 1.6, integer: false },
  colorScale: { key: 'colorScale', label: 'Color scale', min: 0, max: 2, step: 0.05, fallback: 0.8, integer: false },
};

export function clampSlider(def: SliderDef, value: number): number {
  if (!Number.isFinite(value)) {
    return def.fallback;
  }
  const v = Math.min(def.max, Math.max(def.min, value));
  return def.integer ? Math.round(v) : v;
}

export interface HistoryEntry {
  jobId: string;
  configHash: string;
  prompt: string;
  colorScale: number;
}

export interface SessionState {
  image: string | null; // base64 PNG, ready to submit
  imageName: string | null;
  prompt: string;
  negative: string;
  steps: number;
  guidance: number;
  colorScale: number;
  useRanker: boolean;
  trace: boolean;
  lastJobId: string | null;
  busy: boolean; // one in-flight diffusion job per session
  history: HistoryEntry[];
}

export function initialState(): SessionState {
  return {
    image: null,
    imageName: null,
    prompt: '',
    negative: '',
    steps: SLIDERS.steps.fallback,
    guidance: SLIDERS.guidance.fallback,
    colorScale: SLIDERS.colorScale.fallback,
    useRanker: false,
    trace: true,
    lastJobId: null,
    busy: false,
    history: [],
  };
}

/**
 * Build the colorize request from session state. Slider values are always
 * sent explicitly so the persisted job record reflects exactly what the
 * user saw, never a server-side default.
 */
export function buildColorizeRequest(state: SessionState): ColorizeRequest {
  if (!state.image) {
    throw new Error('no image uploaded');
  }
  const req: ColorizeRequest = {
    image: state.image,
    steps: clampSlider(SLIDERS.steps, state.steps),
    guidance: clampSlider(SLIDERS.guidance, state.guidance),
    color_scale: clampSlider(SLIDERS.colorScale, state.colorScale),
    trace: state.trace,
  };
  if (state.prompt) req.prompt = state.prompt;
  if (state.negative) req.negative = state.negative;
  if (state.useRanker) req.use_ranker = true;
  return req;
}

export function pushHistory(state: SessionState, entry: HistoryEntry): void {
  state.history.push(entry);
  state.lastJobId = entry.jobId;
}
