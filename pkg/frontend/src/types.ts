/** Label codes shared with the training side: PNG value = label. */
export const UNLABELED = 0;
export const FOREGROUND = 1;
export const BACKGROUND = 2;

export type Label = typeof UNLABELED | typeof FOREGROUND | typeof BACKGROUND;
export type StrokeLabel = typeof FOREGROUND | typeof BACKGROUND;

export interface Point {
  x: number;
  y: number;
}

export interface StrokeRecord {
  label: StrokeLabel;
  /** Ordered polyline in image-pixel coordinates, already clipped to bounds. */
  points: Point[];
  radius: number;
}

/** One row of GET /api/images. */
export interface ImageInfo {
  id: string;
  width: number;
  height: number;
  has_scribble: boolean;
  elapsed_ms: number | null;
}

export interface TimingEntry {
  id: string;
  elapsed_ms: number;
}

export interface TimingLog {
  entries: TimingEntry[];
  mean_ms: number | null;
}
