// Enhancement grid view: upload a faded color photo, run the seeds x starts
// grid, pick a cell. Tiles are <img> elements pointed straight at artifact
// URLs and the export link downloads those same bytes, so what the user
// saves is exactly the PNG the server wrote.

import type { ChromadiffApi, ManifestEntry } from './api';
import { untilDone } from './jobs';
import { dataUrlToB64, fileToDataUrl } from './upload';

export const DEFAULT_SEEDS = '0, 0.001, 0.003, 0.005';
export const DEFAULT_STARTS = '0, 1, 2, 3';

export interface GridSelection {
  manifest: ManifestEntry[];
  row: number;
  col: number;
}

export interface Tile {
  entry: ManifestEntry;
  kind: 'ok' | 'error';
}

export function gridShape(manifest: ManifestEntry[]): { rows: number; cols: number } {
  let rows = 0;
  let cols = 0;
  for (const e of manifest) {
    rows = Math.max(rows, e.row + 1);
    cols = Math.max(cols, e.col + 1);
  }
  return { rows, cols };
}

export function toTiles(manifest: ManifestEntry[]): Tile[] {
  return manifest.map((entry) => ({
    entry,
    kind: entry.failed || !entry.file ? 'error' : 'ok',
  }));
}

export function selectionInBounds(manifest: ManifestEntry[], row: number, col: number): boolean {
  const { rows, cols } = gridShape(manifest);
  return Number.isInteger(row) && Number.isInteger(col)
    && row >= 0 && row < rows && col >= 0 && col < cols;
}

function parseNumberList(text: string, kind: 'float' | 'int'): number[] {
  const parts = text.split(',').map((p) => p.trim()).filter((p) => p.length > 0);
  if (!parts.length) {
    throw new Error('need at least one value');
  }
  return parts.map((p) => {
    const v = Number(p);
    if (!Number.isFinite(v)) {
      throw new Error(`not a number: ${p}`);
    }
    if (kind === 'int' && !Number.isInteger(v)) {
      throw new Error(`start steps must be integers: ${p}`);
    }
    if (v < 0) {
      throw new Error(`must be >= 0: ${p}`);
    }
    return v;
  });
}

export function parseSeeds(text: string): number[] {
  return parseNumberList(text, 'float');
}

export function parseStarts(text: string): number[] {
  return parseNumberList(text, 'int');
}

export interface EnhanceViewOptions {
  pollMs?: number;
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

export function renderEnhanceView(
  root: HTMLElement,
  api: ChromadiffApi,
  opts: EnhanceViewOptions = {},
): void {
  const pollMs = opts.pollMs ?? 700;
  const panel = el('div', { class: 'panel' });

  const file = el('input', { type: 'file', id: 'en-file', accept: 'image/*' });
  const preview = el('img', { id: 'en-preview', class: 'preview', alt: 'faded input' });
  const seeds = el('input', { type: 'text', id: 'en-seeds' });
  seeds.value = DEFAULT_SEEDS;
  const starts = el('input', { type: 'text', id: 'en-starts' });
  starts.value = DEFAULT_STARTS;
  const seedsRow = el('div', { class: 'field-row' });
  seedsRow.append(el('label', { for: 'en-seeds' }, 'chroma seeds'), seeds);
  const startsRow = el('div', { class: 'field-row' });
  startsRow.append(el('label', { for: 'en-starts' }, 'start steps'), starts);

  const run = el('button', { id: 'en-run', class: 'primary' }, 'Build grid') as HTMLButtonElement;
  const status = el('div', { id: 'en-status', class: 'status' });
  const grid = el('div', { id: 'en-grid', class: 'grid' });

  const modal = el('div', { id: 'en-modal', class: 'modal', hidden: '' });
  const modalImg = el('img', { id: 'en-modal-img', alt: 'selected cell' });
  const modalCaption = el('div', { id: 'en-modal-caption', class: 'hint' });
  // plain anchor to the artifact endpoint: the browser saves the exact
  // response body, so the exported file is bit-identical to the server PNG
  const exportLink = el('a', { id: 'en-export', class: 'primary' }, 'Export PNG') as HTMLAnchorElement;
  const closeBtn = el('button', { id: 'en-close' }, 'Close') as HTMLButtonElement;
  modal.append(modalImg, modalCaption, exportLink, closeBtn);

  panel.append(file, preview, seedsRow, startsRow, run, status, grid, modal);
  root.appendChild(panel);

  let imageB64: string | null = null;
  let busy = false;

  const setStatus = (msg: string, isError = false) => {
    status.textContent = msg;
    status.classList.toggle('error', isError);
  };

  file.addEventListener('change', async () => {
    const f = file.files?.[0];
    if (!f) return;
    try {
      const dataUrl = await fileToDataUrl(f);
      imageB64 = dataUrlToB64(dataUrl);
      preview.src = dataUrl;
      setStatus('');
    } catch (err) {
      setStatus(err instanceof Error ? err.message : String(err), true);
    }
  });

  const openModal = (jobId: string, entry: ManifestEntry) => {
    if (!entry.file) return;
    const url = api.artifactUrl(jobId, entry.file);
    modalImg.src = url;
    modalCaption.textContent = `seed ${entry.seed}, start ${entry.start}`;
    exportLink.href = url;
    exportLink.setAttribute('download', entry.file);
    modal.hidden = false;
  };

  closeBtn.addEventListener('click', () => {
    modal.hidden = true;
  });

  const renderGrid = (jobId: string, manifest: ManifestEntry[]) => {
    grid.textContent = '';
    const { cols } = gridShape(manifest);
    grid.style.gridTemplateColumns = `repeat(${cols}, 1fr)`;
    for (const tile of toTiles(manifest)) {
      const cell = el('div', {
        class: tile.kind === 'ok' ? 'tile' : 'tile tile-error',
        'data-row': String(tile.entry.row),
        'data-col': String(tile.entry.col),
      });
      if (tile.kind === 'ok' && tile.entry.file) {
        const img = el('img', {
          src: api.artifactUrl(jobId, tile.entry.file),
          alt: `seed ${tile.entry.seed}, start ${tile.entry.start}`,
        });
        cell.appendChild(img);
        cell.appendChild(el('div', { class: 'tile-caption' },
          `s=${tile.entry.seed} k=${tile.entry.start}`));
        cell.addEventListener('click', () => {
          if (selectionInBounds(manifest, tile.entry.row, tile.entry.col)) {
            openModal(jobId, tile.entry);
          }
        });
      } else {
        cell.appendChild(el('div', { class: 'tile-caption' },
          tile.entry.error ?? 'failed'));
      }
      grid.appendChild(cell);
    }
  };

  run.addEventListener('click', async () => {
    if (busy) return;
    if (!imageB64) {
      setStatus('upload a color image first', true);
      return;
    }
    let seedValues: number[];
    let startValues: number[];
    try {
      seedValues = parseSeeds(seeds.value);
      startValues = parseStarts(starts.value);
    } catch (err) {
      setStatus(err instanceof Error ? err.message : String(err), true);
      return;
    }
    busy = true;
    run.disabled = true;
    modal.hidden = true;
    try {
      const submitted = await api.enhance({
        image: imageB64,
        seeds: seedValues,
        starts: startValues,
      });
      setStatus(`job ${submitted.job_id} queued`);
      const job = await untilDone(api, submitted.job_id, pollMs, (j) =>
        setStatus(`job ${j.id}: ${j.status}`),
      );
      if (job.status === 'failed' || !job.manifest) {
        setStatus(job.error ?? 'job failed', true);
      } else {
        renderGrid(job.id, job.manifest);
        const failed = job.manifest.filter((e) => e.failed).length;
        setStatus(failed ? `done, ${failed} cell(s) failed` : 'done');
      }
    } catch (err) {
      setStatus(err instanceof Error ? err.message : String(err), true);
    } finally {
      busy = false;
      run.disabled = false;
    }
  });
}
