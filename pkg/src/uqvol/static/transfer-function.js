/**
 * Transfer-function editor state: a sorted list of control points with
 * color and alpha, edited by drag/add/remove gestures. Pure logic, no DOM.
 */
const MIN_POINTS = 2;
/** Minimum spacing between neighbours; positions must stay strictly increasing. */
const X_EPSILON = 1e-4;
const clamp01 = (v) => Math.min(1, Math.max(0, v));
export class TFEditorState {
    constructor(points) {
        this.points = points ? points.map((p) => ({ ...p })) : defaultPoints();
        this.assertInvariants();
    }
    get size() {
        return this.points.length;
    }
    list() {
        return this.points;
    }
    /**
     * Move point `index` toward (x, a). Endpoints stay pinned at x=0 and
     * x=1; interior points are clamped between their neighbours so the
     * ordering invariant can never break mid-drag.
     */
    drag(index, x, a) {
        const p = this.points[index];
        if (!p)
            return;
        if (index === 0) {
            p.x = 0;
        }
        else if (index === this.points.length - 1) {
            p.x = 1;
        }
        else {
            const lo = this.points[index - 1].x + X_EPSILON;
            const hi = this.points[index + 1].x - X_EPSILON;
            p.x = Math.min(hi, Math.max(lo, clamp01(x)));
        }
        p.a = clamp01(a);
    }
    setColor(index, r, g, b) {
        const p = this.points[index];
        if (!p)
            return;
        p.r = clamp01(r);
        p.g = clamp01(g);
        p.b = clamp01(b);
    }
    /** Insert a point at x with interpolated color/alpha; returns its index. */
    add(x) {
        const cx = Math.min(1 - X_EPSILON, Math.max(X_EPSILON, clamp01(x)));
        let i = this.points.findIndex((p) => p.x >= cx);
        if (i <= 0)
            i = 1;
        const lo = this.points[i - 1];
        const hi = this.points[i];
        const w = (cx - lo.x) / (hi.x - lo.x);
        const lerp = (a, b) => a + w * (b - a);
        const point = {
            x: cx,
            r: lerp(lo.r, hi.r),
            g: lerp(lo.g, hi.g),
            b: lerp(lo.b, hi.b),
            a: lerp(lo.a, hi.a),
        };
        this.points.splice(i, 0, point);
        return i;
    }
    /** Remove a point; endpoints and the two-point minimum are protected. */
    remove(index) {
        if (this.points.length <= MIN_POINTS)
            return false;
        if (index <= 0 || index >= this.points.length - 1)
            return false;
        this.points.splice(index, 1);
        return true;
    }
    get canRemove() {
        return this.points.length > MIN_POINTS;
    }
    /** Nearest point within `radius` of (x, a), or -1. */
    hitTest(x, a, radius) {
        let best = -1;
        let bestDist = radius;
        this.points.forEach((p, i) => {
            const d = Math.hypot(p.x - x, p.a - a);
            if (d <= bestDist) {
                best = i;
                bestDist = d;
            }
        });
        return best;
    }
    /** Piecewise-linear RGBA at normalized scalar s. */
    classify(s) {
        const cs = clamp01(s);
        const pts = this.points;
        if (cs <= pts[0].x)
            return [pts[0].r, pts[0].g, pts[0].b, pts[0].a];
        const last = pts[pts.length - 1];
        if (cs >= last.x)
            return [last.r, last.g, last.b, last.a];
        let i = 1;
        while (pts[i].x < cs)
            i += 1;
        const lo = pts[i - 1];
        const hi = pts[i];
        const w = (cs - lo.x) / (hi.x - lo.x);
        const lerp = (a, b) => a + w * (b - a);
        return [lerp(lo.r, hi.r), lerp(lo.g, hi.g), lerp(lo.b, hi.b), lerp(lo.a, hi.a)];
    }
    get allTransparent() {
        return this.points.every((p) => p.a === 0);
    }
    toSpec() {
        return {
            points: this.points.map((p) => ({ x: p.x, rgba: [p.r, p.g, p.b, p.a] })),
        };
    }
    static fromSpec(spec) {
        return new TFEditorState(spec.points.map((p) => ({
            x: p.x,
            r: p.rgba[0],
            g: p.rgba[1],
            b: p.rgba[2],
            a: p.rgba[3],
        })));
    }
    assertInvariants() {
        if (this.points.length < MIN_POINTS) {
            throw new Error('transfer function needs at least two control points');
        }
        this.points[0].x = 0;
        this.points[this.points.length - 1].x = 1;
        for (let i = 1; i < this.points.length; i++) {
            if (this.points[i].x <= this.points[i - 1].x) {
                throw new Error('control point positions must be strictly increasing');
            }
        }
    }
}
export function defaultPoints() {
    return [
        { x: 0, r: 0.05, g: 0.05, b: 0.2, a: 0 },
        { x: 0.45, r: 0.9, g: 0.35, b: 0.1, a: 0.12 },
        { x: 0.8, r: 0.95, g: 0.85, b: 0.3, a: 0.45 },
        { x: 1, r: 1, g: 1, b: 1, a: 0.85 },
    ];
}
