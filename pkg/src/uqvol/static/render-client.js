/**
 * Render client: debounced POST /render with latest-wins sequencing.
 *
 * Every request carries a sequence number; a response is applied only if
 * no newer response has been applied yet, so slow (stale) responses can
 * never overwrite fresh panels.
 */
import { debounce } from './debounce.js';
export const DEBOUNCE_MS = 250;
export class RenderClient {
    constructor(baseUrl = '', fetchImpl = (...a) => fetch(...a), debounceMs = DEBOUNCE_MS) {
        this.baseUrl = baseUrl;
        this.fetchImpl = fetchImpl;
        this.state = {
            response: null,
            appliedSeq: 0,
            loading: false,
            error: null,
            renderMsHistory: [],
        };
        this.nextSeq = 1;
        this.inFlight = 0;
        this.listeners = [];
        this.schedule = debounce((req) => {
            void this.send(req);
        }, debounceMs);
    }
    onChange(listener) {
        this.listeners.push(listener);
    }
    /** Debounced entry point used after edit gestures. */
    requestRender(req) {
        this.schedule(req);
    }
    /** Immediate request (model switch, first load). */
    requestRenderNow(req) {
        this.schedule.cancel();
        return this.send(req);
    }
    get pendingRequests() {
        return this.inFlight;
    }
    async models() {
        const res = await this.fetchImpl(`${this.baseUrl}/models`);
        if (!res.ok)
            throw new Error(`GET /models failed: ${res.status}`);
        return (await res.json());
    }
    async send(req) {
        const seq = this.nextSeq++;
        this.inFlight += 1;
        this.update({ loading: true });
        try {
            const res = await this.fetchImpl(`${this.baseUrl}/render`, {
                method: 'POST',
                headers: { 'content-type': 'application/json' },
                body: JSON.stringify(req),
            });
            if (seq <= this.state.appliedSeq)
                return; // a newer response already landed
            if (!res.ok) {
                let detail = `${res.status}`;
                try {
                    const body = (await res.json());
                    if (body.detail)
                        detail = `${res.status}: ${body.detail}`;
                }
                catch {
                    // keep the bare status
                }
                this.update({ error: detail });
                return;
            }
            const payload = (await res.json());
            if (seq <= this.state.appliedSeq)
                return;
            this.state.appliedSeq = seq;
            this.update({
                response: payload,
                error: null,
                renderMsHistory: [...this.state.renderMsHistory, payload.render_ms].slice(-50),
            });
        }
        catch (err) {
            if (seq > this.state.appliedSeq) {
                this.update({ error: err instanceof Error ? err.message : String(err) });
            }
        }
        finally {
            this.inFlight -= 1;
            if (this.inFlight === 0)
                this.update({ loading: false });
        }
    }
    update(patch) {
        Object.assign(this.state, patch);
        for (const listener of this.listeners)
            listener(this.state);
    }
}
