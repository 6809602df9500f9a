import { ApiClient } from './api';
import { renderColorizeView } from './colorize';
import { renderEnhanceView } from './enhance';
import { initialState } from './state';
import './style.css';

const api = new ApiClient();

const header = document.getElementById('health') as HTMLElement;
const tabColorize = document.getElementById('tab-colorize') as HTMLButtonElement;
const tabEnhance = document.getElementById('tab-enhance') as HTMLButtonElement;
const viewColorize = document.getElementById('view-colorize') as HTMLElement;
const viewEnhance = document.getElementById('view-enhance') as HTMLElement;

function selectTab(which: 'colorize' | 'enhance'): void {
  viewColorize.hidden = which !== 'colorize';
  viewEnhance.hidden = which !== 'enhance';
  tabColorize.classList.toggle('active', which === 'colorize');
  tabEnhance.classList.toggle('active', which === 'enhance');
}

tabColorize.addEventListener('click', () => selectTab('colorize'));
tabEnhance.addEventListener('click', () => selectTab('enhance'));

async function boot(): Promise<void> {
  let rankerLoaded = false;
  try {
    const health = await api.health();
    rankerLoaded = health.ranker_loaded;
    header.textContent = [
      `codec: ${health.codec}`,
      health.denoiser_loaded ? 'denoiser loaded' : 'NO DENOISER',
      health.ranker_loaded ? 'ranker loaded' : 'no ranker',
    ].join(' | ');
    header.classList.toggle('error', !health.denoiser_loaded);
  } catch {
    header.textContent = 'service unreachable';
    header.classList.add('error');
  }
  // both views stay mounted so switching tabs never loses session state
  renderColorizeView(viewColorize, api, initialState(), { rankerLoaded });
  renderEnhanceView(viewEnhance, api);
  selectTab('colorize');
}

boot();
