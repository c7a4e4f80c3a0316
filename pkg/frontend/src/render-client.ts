/**
 * Render client: debounced POST /render with latest-wins sequencing.
 *
 * Every request carries a sequence number; a response is applied only if
 * no newer response has been applied yet, so slow (stale) responses can
 * never overwrite fresh panels.
 */

import { debounce } from './debounce.js';
import type { ModelInfo, RenderRequest, RenderResponse } from './types.js';

export interface PanelState {
  response: RenderResponse | null;
  appliedSeq: number;
  loading: boolean;
  error: string | null;
  renderMsHistory: number[];
}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export const DEBOUNCE_MS = 250;

export class RenderClient {
  readonly state: PanelState = {
    response: null,
    appliedSeq: 0,
    loading: false,
    error: null,
    renderMsHistory: [],
  };

  private nextSeq = 1;
  private inFlight = 0;
  private readonly schedule: ReturnType<typeof debounce<(req: RenderRequest) => void>>;
  private listeners: Array<(s: PanelState) => void> = [];

  constructor(
    private readonly baseUrl: string = '',
    private readonly fetchImpl: FetchLike = (...a) => fetch(...a),
    debounceMs: number = DEBOUNCE_MS,
  ) {
    this.schedule = debounce((req: RenderRequest) => {
      void this.send(req);
    }, debounceMs);
  }

  onChange(listener: (s: PanelState) => void): void {
    this.listeners.push(listener);
  }

  /** Debounced entry point used after edit gestures. */
  requestRender(req: RenderRequest): void {
    this.schedule(req);
  }

  /** Immediate request (model switch, first load). */
  requestRenderNow(req: RenderRequest): Promise<void> {
    this.schedule.cancel();
    return this.send(req);
  }

  get pendingRequests(): number {
    return this.inFlight;
  }

  async models(): Promise<ModelInfo[]> {
    const res = await this.fetchImpl(`${this.baseUrl}/models`);
    if (!res.ok) throw new Error(`GET /models failed: ${res.status}`);
    return (await res.json()) as ModelInfo[];
  }

  private async send(req: RenderRequest): Promise<void> {
    const seq = this.nextSeq++;
    this.inFlight += 1;
    this.update({ loading: true });
    try {
      const res = await this.fetchImpl(`${this.baseUrl}/render`, {
        method: 'POST',
        headers: { 'content-type': 'application/json' },
        body: JSON.stringify(req),
      });
      if (seq <= this.state.appliedSeq) return; // a newer response already landed
      if (!res.ok) {
        let detail = `${res.status}`;
        try {
          const body = (await res.json()) as { detail?: string };
          if (body.detail) detail = `${res.status}: ${body.detail}`;
        } catch {
          // keep the bare status
        }
        this.update({ error: detail });
        return;
      }
      const payload = (await res.json()) as RenderResponse;
      if (seq <= this.state.appliedSeq) return;
      this.state.appliedSeq = seq;
      this.update({
        response: payload,
        error: null,
        renderMsHistory: [...this.state.renderMsHistory, payload.render_ms].slice(-50),
      });
    } catch (err) {
      if (seq > this.state.appliedSeq) {
        this.update({ error: err instanceof Error ? err.message : String(err) });
      }
    } finally {
      this.inFlight -= 1;
      if (this.inFlight === 0) this.update({ loading: false });
    }
  }

  private update(patch: Partial<PanelState>): void {
    Object.assign(this.state, patch);
    for (const listener of this.listeners) listener(this.state);
  }
}
