/** Per-image annotation state: stroke stack, undo, timing, export raster. */

import { clipPoint, rasterizeStrokes } from "./raster.js";
import type { Point, StrokeLabel, StrokeRecord } from "./types.js";
import { BACKGROUND, FOREGROUND } from "./types.js";

export const DEFAULT_BRUSH_RADIUS = 3;

export interface AnnotationSession {
  imageId: string;
  width: number;
  height: number;
  strokes: StrokeRecord[];
  activeLabel: StrokeLabel;
  brushRadius: number;
  /** Annotation time spent on this image so far. */
  elapsedMs: number;
  /** True when there are changes the server has not seen. */
  dirty: boolean;
  /** Saved map this session extends; undo never reaches below it. */
  base?: Uint8Array;
}

export function createSession(
  imageId: string,
  width: number,
  height: number,
  base?: Uint8Array,
): AnnotationSession {
  if (width < 1 || height < 1) {
    throw new Error(`image size must be positive, got ${width}x${height}`);
  }
  return {
    imageId,
    width,
    height,
    strokes: [],
    activeLabel: FOREGROUND,
    brushRadius: DEFAULT_BRUSH_RADIUS,
    elapsedMs: 0,
    dirty: false,
    base,
  };
}

/**
 * Append one stroke. Points outside the image are clipped to its bounds;
 * an empty point list leaves the session untouched.
 */
export function drawStroke(
  session: AnnotationSession,
  points: readonly Point[],
  label?: StrokeLabel,
  radius?: number,
): AnnotationSession {
  if (points.length === 0) return session;
  const r = radius ?? session.brushRadius;
  if (!(r > 0)) throw new Error(`brush radius must be positive, got ${r}`);
  session.strokes.push({
    label: label ?? session.activeLabel,
    points: points.map((p) => clipPoint(p, session.width, session.height)),
    radius: r,
  });
  session.dirty = true;
  return session;
}

/** Remove the last stroke; an empty stack is a no-op. */
export function undo(session: AnnotationSession): AnnotationSession {
  if (session.strokes.length === 0) return session;
  session.strokes.pop();
  session.dirty = true;
  return session;
}

/** Accumulate active annotation time. Time never runs backwards. */
export function addElapsed(session: AnnotationSession, deltaMs: number): void {
  if (deltaMs < 0) throw new Error(`elapsed time cannot decrease (delta ${deltaMs})`);
  session.elapsedMs += deltaMs;
}

/** The ternary map the current state exports. */
export function rasterize(session: AnnotationSession): Uint8Array {
  return rasterizeStrokes(session.width, session.height, session.strokes, session.base);
}

/** Label classes absent from the export, for the pre-upload warning. */
export function missingClasses(session: AnnotationSession): StrokeLabel[] {
  const map = rasterize(session);
  const missing: StrokeLabel[] = [];
  if (!map.includes(FOREGROUND)) missing.push(FOREGROUND);
  if (!map.includes(BACKGROUND)) missing.push(BACKGROUND);
  return missing;
}
