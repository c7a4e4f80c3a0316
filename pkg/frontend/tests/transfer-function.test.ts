import { describe, expect, it } from 'vitest';

import { TFEditorState, defaultPoints } from '../src/transfer-function.js';

describe('TFEditorState', () => {
  it('starts sorted with pinned endpoints', () => {
    const tf = new TFEditorState();
    const pts = tf.list();
    expect(pts[0].x).toBe(0);
    expect(pts[pts.length - 1].x).toBe(1);
    for (let i = 1; i < pts.length; i++) {
      expect(pts[i].x).toBeGreaterThan(pts[i - 1].x);
    }
  });

  it('clamps a dragged point between its neighbours', () => {
    const tf = new TFEditorState();
    const rightNeighbour = tf.list()[2].x;
    tf.drag(1, 0.99, 0.5); // try to drag past the next point
    expect(tf.list()[1].x).toBeLessThan(rightNeighbour);
    const pts = tf.list();
    for (let i = 1; i < pts.length; i++) {
      expect(pts[i].x).toBeGreaterThan(pts[i - 1].x);
    }
  });

  it('keeps endpoints pinned while dragging them', () => {
    const tf = new TFEditorState();
    tf.drag(0, 0.4, 0.7);
    tf.drag(tf.size - 1, 0.2, 0.3);
    expect(tf.list()[0].x).toBe(0);
    expect(tf.list()[tf.size - 1].x).toBe(1);
    expect(tf.list()[0].a).toBeCloseTo(0.7);
  });

  it('clamps alpha to [0, 1]', () => {
    const tf = new TFEditorState();
    tf.drag(1, tf.list()[1].x, 1.8);
    expect(tf.list()[1].a).toBe(1);
    tf.drag(1, tf.list()[1].x, -0.5);
    expect(tf.list()[1].a).toBe(0);
  });

  it('adds points with interpolated color and alpha', () => {
    const tf = new TFEditorState([
      { x: 0, r: 0, g: 0, b: 0, a: 0 },
      { x: 1, r: 1, g: 1, b: 1, a: 1 },
    ]);
    const i = tf.add(0.5);
    expect(i).toBe(1);
    const p = tf.list()[1];
    expect(p.x).toBeCloseTo(0.5);
    expect(p.r).toBeCloseTo(0.5);
    expect(p.a).toBeCloseTo(0.5);
  });

  it('refuses to remove endpoints or drop below two points', () => {
    const tf = new TFEditorState([
      { x: 0, r: 0, g: 0, b: 0, a: 0 },
      { x: 0.5, r: 0.5, g: 0.5, b: 0.5, a: 0.5 },
      { x: 1, r: 1, g: 1, b: 1, a: 1 },
    ]);
    expect(tf.remove(0)).toBe(false);
    expect(tf.remove(2)).toBe(false);
    expect(tf.remove(1)).toBe(true);
    expect(tf.size).toBe(2);
    expect(tf.canRemove).toBe(false);
    expect(tf.remove(1)).toBe(false); // endpoint of the 2-point TF
  });

  it('round-trips through the wire format without loss', () => {
    const tf = new TFEditorState();
    tf.drag(1, 0.333333, 0.123456);
    const spec = tf.toSpec();
    const back = TFEditorState.fromSpec(spec);
    back.list().forEach((p, i) => {
      const orig = tf.list()[i];
      expect(Math.abs(p.x - orig.x)).toBeLessThanOrEqual(1e-6);
      expect(Math.abs(p.a - orig.a)).toBeLessThanOrEqual(1e-6);
      expect(Math.abs(p.r - orig.r)).toBeLessThanOrEqual(1e-6);
    });
  });

  it('reports the all-transparent state', () => {
    const tf = new TFEditorState([
      { x: 0, r: 0.2, g: 0.2, b: 0.2, a: 0 },
      { x: 1, r: 1, g: 1, b: 1, a: 0 },
    ]);
    expect(tf.allTransparent).toBe(true);
    tf.drag(1, 1, 0.4);
    expect(tf.allTransparent).toBe(false);
  });

  it('classifies by piecewise-linear interpolation', () => {
    const tf = new TFEditorState([
      { x: 0, r: 0, g: 0, b: 0, a: 0 },
      { x: 1, r: 1, g: 0.5, b: 0, a: 1 },
    ]);
    const [r, g, b, a] = tf.classify(0.5);
    expect(r).toBeCloseTo(0.5);
    expect(g).toBeCloseTo(0.25);
    expect(b).toBe(0);
    expect(a).toBeCloseTo(0.5);
  });

  it('rejects unsorted input', () => {
    expect(
      () =>
        new TFEditorState([
          { x: 0, r: 0, g: 0, b: 0, a: 0 },
          { x: 0.5, r: 0, g: 0, b: 0, a: 0 },
          { x: 0.5, r: 0, g: 0, b: 0, a: 0 },
          { x: 1, r: 0, g: 0, b: 0, a: 0 },
        ]),
    ).toThrow();
  });

  it('default points cover the unit interval', () => {
    const pts = defaultPoints();
    expect(pts[0].x).toBe(0);
    expect(pts[pts.length - 1].x).toBe(1);
  });
});
