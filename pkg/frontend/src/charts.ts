/** Rolling time-series buffers and a minimal canvas line renderer. */

export interface ChartPoint {
  t: number; // sim time, ms
  v: number;
  eventId: number;
}

/** Sliding-window series; lossless within the window, deduped by event id. */
export class RollingSeries {
  private points: ChartPoint[] = [];
  private seen = new Set<number>();

  constructor(readonly windowMs: number = 60_000) {}

  append(t: number, v: number, eventId: number): boolean {
    if (this.seen.has(eventId)) return false;
    this.seen.add(eventId);
    this.points.push({ t, v, eventId });
    // half-open retention window (t - windowMs, t], matching the simulator
    const cutoff = t - this.windowMs;
    while (this.points.length && this.points[0]!.t <= cutoff) {
      const gone = this.points.shift()!;
      this.seen.delete(gone.eventId);
    }
    return true;
  }

  count(): number {
    return this.points.length;
  }

  data(): readonly ChartPoint[] {
    return this.points;
  }

  latest(): ChartPoint | undefined {
    return this.points[this.points.length - 1];
  }

  range(): { min: number; max: number } {
    if (!this.points.length) return { min: 0, max: 1 };
    let min = Infinity;
    let max = -Infinity;
    for (const p of this.points) {
      if (p.v < min) min = p.v;
      if (p.v > max) max = p.v;
    }
    if (min === max) {
      min -= 0.5;
      max += 0.5;
    }
    return { min, max };
  }
}

/** Draw a series plus an optional horizontal threshold line. */
export function drawSeries(
  canvas: HTMLCanvasElement,
  series: RollingSeries,
  opts: { color?: string; threshold?: number | null } = {},
): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  const { width, height } = canvas;
  ctx.clearRect(0, 0, width, height);
  const points = series.data();
  if (points.length < 2) return;
  const t0 = points[0]!.t;
  const t1 = points[points.length - 1]!.t;
  let { min, max } = series.range();
  if (opts.threshold != null) {
    min = Math.min(min, opts.threshold);
    max = Math.max(max, opts.threshold);
  }
  const pad = (max - min) * 0.1;
  min -= pad;
  max += pad;
  const x = (t: number) => ((t - t0) / Math.max(t1 - t0, 1)) * (width - 8) + 4;
  const y = (v: number) => height - ((v - min) / (max - min)) * (height - 8) - 4;

  if (opts.threshold != null) {
    ctx.strokeStyle = "#d9534f";
    ctx.setLineDash([5, 4]);
    ctx.beginPath();
    ctx.moveTo(0, y(opts.threshold));
    ctx.lineTo(width, y(opts.threshold));
    ctx.stroke();
    ctx.setLineDash([]);
  }

  ctx.strokeStyle = opts.color ?? "#2d7dd2";
  ctx.lineWidth = 1.5;
  ctx.beginPath();
  points.forEach((p, i) => {
    if (i === 0) ctx.moveTo(x(p.t), y(p.v));
    else ctx.lineTo(x(p.t), y(p.v));
  });
  ctx.stroke();
}
