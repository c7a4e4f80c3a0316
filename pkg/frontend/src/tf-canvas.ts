/**
 * Canvas view for the transfer-function editor: alpha curve over a color
 * bar, draggable handles, double-click to add, right-click to remove.
 */

import type { TFEditorState } from './transfer-function.js';

const HANDLE_RADIUS = 6;
const PAD = 10;

export class TFCanvas {
  private dragging = -1;
  onEdit: (() => void) | null = null;
  onSelect: ((index: number) => void) | null = null;
  selected = -1;

  constructor(
    private readonly canvas: HTMLCanvasElement,
    private readonly state: TFEditorState,
  ) {
    canvas.addEventListener('pointerdown', (e) => this.pointerDown(e));
    canvas.addEventListener('pointermove', (e) => this.pointerMove(e));
    canvas.addEventListener('pointerup', (e) => this.pointerUp(e));
    canvas.addEventListener('dblclick', (e) => this.doubleClick(e));
    canvas.addEventListener('contextmenu', (e) => this.rightClick(e));
    this.draw();
  }

  private plotRect() {
    return {
      x: PAD,
      y: PAD,
      w: this.canvas.width - 2 * PAD,
      h: this.canvas.height - 2 * PAD - 18, // color bar strip below
    };
  }

  private toData(e: PointerEvent | MouseEvent): { x: number; a: number } {
    const rect = this.canvas.getBoundingClientRect();
    const { x, y, w, h } = this.plotRect();
    const px = ((e.clientX - rect.left) * this.canvas.width) / rect.width;
    const py = ((e.clientY - rect.top) * this.canvas.height) / rect.height;
    return { x: (px - x) / w, a: 1 - (py - y) / h };
  }

  private pointerDown(e: PointerEvent): void {
    const { x, a } = this.toData(e);
    const { w, h } = this.plotRect();
    const radius = Math.max(HANDLE_RADIUS * 2.5 / w, HANDLE_RADIUS * 2.5 / h);
    const hit = this.state.hitTest(x, a, radius);
    if (hit >= 0) {
      this.dragging = hit;
      this.selected = hit;
      this.canvas.setPointerCapture(e.pointerId);
      this.onSelect?.(hit);
      this.draw();
    }
  }

  private pointerMove(e: PointerEvent): void {
    if (this.dragging < 0) return;
    const { x, a } = this.toData(e);
    this.state.drag(this.dragging, x, a);
    this.draw();
    this.onEdit?.();
  }

  private pointerUp(e: PointerEvent): void {
    if (this.dragging >= 0) {
      this.canvas.releasePointerCapture(e.pointerId);
      this.dragging = -1;
    }
  }

  private doubleClick(e: MouseEvent): void {
    const { x } = this.toData(e);
    this.selected = this.state.add(x);
    this.draw();
    this.onSelect?.(this.selected);
    this.onEdit?.();
  }

  private rightClick(e: MouseEvent): void {
    e.preventDefault();
    const { x, a } = this.toData(e);
    const { w, h } = this.plotRect();
    const radius = Math.max(HANDLE_RADIUS * 2.5 / w, HANDLE_RADIUS * 2.5 / h);
    const hit = this.state.hitTest(x, a, radius);
    if (hit >= 0 && this.state.remove(hit)) {
      this.selected = -1;
      this.draw();
      this.onEdit?.();
    }
  }

  draw(): void {
    const ctx = this.canvas.getContext('2d');
    if (!ctx) return;
    const { x, y, w, h } = this.plotRect();
    ctx.clearRect(0, 0, this.canvas.width, this.canvas.height);

    // alpha curve fill
    ctx.fillStyle = '#1b1e24';
    ctx.fillRect(x, y, w, h);
    ctx.beginPath();
    ctx.moveTo(x, y + h);
    for (const p of this.state.list()) {
      ctx.lineTo(x + p.x * w, y + (1 - p.a) * h);
    }
    ctx.lineTo(x + w, y + h);
    ctx.closePath();
    ctx.fillStyle = 'rgba(120, 160, 255, 0.25)';
    ctx.fill();
    ctx.strokeStyle = '#7aa0ff';
    ctx.lineWidth = 1.5;
    ctx.stroke();

    // color bar sampled from the TF
    const barY = y + h + 4;
    for (let i = 0; i < w; i++) {
      const [r, g, b, a] = this.state.classify(i / (w - 1));
      ctx.fillStyle = `rgba(${r * 255},${g * 255},${b * 255},${Math.max(a, 0.15)})`;
      ctx.fillRect(x + i, barY, 1, 12);
    }

    // handles
    this.state.list().forEach((p, i) => {
      const hx = x + p.x * w;
      const hy = y + (1 - p.a) * h;
      ctx.beginPath();
      ctx.arc(hx, hy, HANDLE_RADIUS, 0, 2 * Math.PI);
      ctx.fillStyle = `rgb(${p.r * 255},${p.g * 255},${p.b * 255})`;
      ctx.fill();
      ctx.lineWidth = i === this.selected ? 3 : 1.5;
      ctx.strokeStyle = i === this.selected ? '#ffffff' : '#9aa3b2';
      ctx.stroke();
    });
  }
}
