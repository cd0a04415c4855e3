/** Stroke rasterization: round brush discs swept along polylines.
 *
 * A pixel (ix, iy) is painted when the distance from its center to the
 * stroke path is at most the brush radius. Strokes paint in order, so a
 * later stroke overwrites an earlier one wherever they overlap.
 */

import type { Point, StrokeRecord } from "./types.js";
import { UNLABELED } from "./types.js";

export function clipPoint(p: Point, width: number, height: number): Point {
  return {
    x: Math.min(Math.max(p.x, 0), width - 1),
    y: Math.min(Math.max(p.y, 0), height - 1),
  };
}

/** Squared distance from point c to the segment ab. */
function segmentDistSq(cx: number, cy: number, a: Point, b: Point): number {
  const vx = b.x - a.x;
  const vy = b.y - a.y;
  const lenSq = vx * vx + vy * vy;
  let t = 0;
  if (lenSq > 0) {
    t = ((cx - a.x) * vx + (cy - a.y) * vy) / lenSq;
    t = Math.min(Math.max(t, 0), 1);
  }
  const dx = cx - (a.x + t * vx);
  const dy = cy - (a.y + t * vy);
  return dx * dx + dy * dy;
}

function paintSegment(
  out: Uint8Array,
  width: number,
  height: number,
  a: Point,
  b: Point,
  radius: number,
  label: number,
): void {
  const r2 = radius * radius;
  const x0 = Math.max(0, Math.floor(Math.min(a.x, b.x) - radius));
  const x1 = Math.min(width - 1, Math.ceil(Math.max(a.x, b.x) + radius));
  const y0 = Math.max(0, Math.floor(Math.min(a.y, b.y) - radius));
  const y1 = Math.min(height - 1, Math.ceil(Math.max(a.y, b.y) + radius));
  for (let iy = y0; iy <= y1; iy++) {
    for (let ix = x0; ix <= x1; ix++) {
      if (segmentDistSq(ix, iy, a, b) <= r2) {
        out[iy * width + ix] = label;
      }
    }
  }
}

export function paintStroke(
  out: Uint8Array,
  width: number,
  height: number,
  stroke: StrokeRecord,
): void {
  const pts = stroke.points;
  if (pts.length === 0) return;
  if (pts.length === 1) {
    paintSegment(out, width, height, pts[0], pts[0], stroke.radius, stroke.label);
    return;
  }
  for (let i = 1; i < pts.length; i++) {
    paintSegment(out, width, height, pts[i - 1], pts[i], stroke.radius, stroke.label);
  }
}

/**
 * Rasterize strokes into a ternary map, starting from `base` when given
 * (a previously saved map being extended) and from all-unlabeled otherwise.
 */
export function rasterizeStrokes(
  width: number,
  height: number,
  strokes: readonly StrokeRecord[],
  base?: Uint8Array,
): Uint8Array {
  if (base !== undefined && base.length !== width * height) {
    throw new Error(`base has ${base.length} pixels, expected ${width * height}`);
  }
  const out =
    base !== undefined ? base.slice() : new Uint8Array(width * height).fill(UNLABELED);
  for (const stroke of strokes) {
    paintStroke(out, width, height, stroke);
  }
  return out;
}
