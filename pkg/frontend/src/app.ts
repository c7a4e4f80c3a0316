/** Application wiring: model picker, TF editor, orbit sliders, panels. */

import { DEFAULT_ORBIT, orbitToCamera, type OrbitState } from './camera-orbit.js';
import { RenderClient } from './render-client.js';
import { TFCanvas } from './tf-canvas.js';
import { TFEditorState } from './transfer-function.js';
import type { ModelInfo, RenderRequest } from './types.js';

const IMAGE_SIZE = 360;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

export class App {
  private readonly tf = new TFEditorState();
  private readonly client: RenderClient;
  private models: ModelInfo[] = [];
  private orbit: OrbitState = { ...DEFAULT_ORBIT };
  private canvas: TFCanvas;
  /** When set, uncertainty maps keep this normalization across renders. */
  private pinnedScale: number | null = null;

  constructor(baseUrl = '') {
    this.client = new RenderClient(baseUrl);
    this.canvas = new TFCanvas(el<HTMLCanvasElement>('tf-canvas'), this.tf);
    this.canvas.onEdit = () => this.client.requestRender(this.request());
    this.canvas.onSelect = (i) => this.syncColorInput(i);
    this.client.onChange(() => this.render());
    this.bindControls();
  }

  async start(): Promise<void> {
    this.models = await this.client.models();
    const select = el<HTMLSelectElement>('model-select');
    select.innerHTML = '';
    for (const m of this.models) {
      const opt = document.createElement('option');
      opt.value = m.tag;
      opt.textContent = `${m.tag} (${m.method}, ${m.dims.join('x')})`;
      select.appendChild(opt);
    }
    if (this.models.length) {
      await this.client.requestRenderNow(this.request());
    }
  }

  private currentModel(): ModelInfo | undefined {
    const tag = el<HTMLSelectElement>('model-select').value;
    return this.models.find((m) => m.tag === tag) ?? this.models[0];
  }

  private request(): RenderRequest {
    const model = this.currentModel();
    const m = parseInt(el<HTMLInputElement>('samples-input').value, 10);
    const req: RenderRequest = {
      model: model?.tag ?? '',
      tf: this.tf.toSpec(),
      m: Number.isFinite(m) && m > 0 ? m : undefined,
      seed: 0,
      width: IMAGE_SIZE,
      height: IMAGE_SIZE,
      include_error: true,
    };
    if (model) {
      req.camera = orbitToCamera(this.orbit, model.dims, IMAGE_SIZE);
    }
    if (this.pinnedScale !== null) {
      req.scale = this.pinnedScale;
    }
    return req;
  }

  private bindControls(): void {
    el<HTMLSelectElement>('model-select').addEventListener('change', () => {
      const model = this.currentModel();
      if (model) el<HTMLInputElement>('samples-input').value = String(model.default_m);
      void this.client.requestRenderNow(this.request());
    });
    el<HTMLInputElement>('samples-input').addEventListener('change', () => {
      void this.client.requestRenderNow(this.request());
    });
    for (const [id, key] of [
      ['azimuth-input', 'azimuthDeg'],
      ['elevation-input', 'elevationDeg'],
      ['distance-input', 'distance'],
    ] as const) {
      el<HTMLInputElement>(id).addEventListener('input', () => {
        this.orbit[key] = parseFloat(el<HTMLInputElement>(id).value);
        this.client.requestRender(this.request());
      });
    }
    el<HTMLInputElement>('scale-lock').addEventListener('change', () => {
      const locked = el<HTMLInputElement>('scale-lock').checked;
      this.pinnedScale =
        locked && this.client.state.response
          ? this.client.state.response.uncertainty_scale
          : null;
      if (!locked) this.client.requestRender(this.request());
    });
    el<HTMLInputElement>('point-color').addEventListener('input', () => {
      const i = this.canvas.selected;
      if (i < 0) return;
      const hex = el<HTMLInputElement>('point-color').value;
      this.tf.setColor(
        i,
        parseInt(hex.slice(1, 3), 16) / 255,
        parseInt(hex.slice(3, 5), 16) / 255,
        parseInt(hex.slice(5, 7), 16) / 255,
      );
      this.canvas.draw();
      this.client.requestRender(this.request());
    });
  }

  private syncColorInput(index: number): void {
    const p = this.tf.list()[index];
    if (!p) return;
    const hex = (v: number) => Math.round(v * 255).toString(16).padStart(2, '0');
    el<HTMLInputElement>('point-color').value = `#${hex(p.r)}${hex(p.g)}${hex(p.b)}`;
  }

  private render(): void {
    const s = this.client.state;
    el('status-line').textContent = s.error
      ? `error ${s.error}`
      : s.loading
        ? 'rendering...'
        : s.response
          ? `${s.response.m} realizations, ${s.response.render_ms.toFixed(0)} ms` +
            (s.response.psnr_db != null ? `, image PSNR ${s.response.psnr_db.toFixed(2)} dB` : '')
          : 'no renders yet';
    el('status-line').className = s.error ? 'status error' : 'status';
    const r = s.response;
    if (!r) return;
    const set = (id: string, b64?: string) => {
      const img = el<HTMLImageElement>(id);
      if (b64) {
        img.src = `data:image/png;base64,${b64}`;
        img.parentElement!.style.display = '';
      } else {
        img.parentElement!.style.display = 'none';
      }
    };
    set('panel-mean', r.mean_png_b64);
    set('panel-uncertainty', r.uncertainty_png_b64);
    set('panel-unc-r', r.uncertainty_r_png_b64);
    set('panel-unc-g', r.uncertainty_g_png_b64);
    set('panel-unc-b', r.uncertainty_b_png_b64);
    set('panel-error', r.error_png_b64);
  }
}

if (typeof document !== 'undefined' && document.getElementById('tf-canvas')) {
  const app = new App('');
  void app.start();
}
