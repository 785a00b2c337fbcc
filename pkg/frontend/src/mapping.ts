// Board millimeters <-> canvas pixels. The scale arrives in the start
// handshake (server config.px_per_mm); a fixed margin keeps the halos
// of edge objects on screen.

export interface BoardMapping {
  pxPerMm: number;
  marginPx: number;
}

export function makeMapping(pxPerMm: number, marginPx = 40): BoardMapping {
  if (pxPerMm <= 0) throw new Error("px_per_mm must be positive");
  return { pxPerMm, marginPx };
}

export function mmToPx(m: BoardMapping, mm: [number, number]): [number, number] {
  return [m.marginPx + mm[0] * m.pxPerMm, m.marginPx + mm[1] * m.pxPerMm];
}

export function pxToMm(m: BoardMapping, px: [number, number]): [number, number] {
  return [(px[0] - m.marginPx) / m.pxPerMm, (px[1] - m.marginPx) / m.pxPerMm];
}

export function canvasSize(
  m: BoardMapping,
  cells: [number, number][],
  slots: [number, number][],
  cellSizeMm: number
): [number, number] {
  const all = cells.concat(slots);
  const maxX = Math.max(...all.map((p) => p[0])) + cellSizeMm;
  const maxY = Math.max(...all.map((p) => p[1])) + cellSizeMm * 1.5;
  return [
    Math.ceil(maxX * m.pxPerMm + 2 * m.marginPx),
    Math.ceil(maxY * m.pxPerMm + 2 * m.marginPx),
  ];
}

// halo radius in mm, proportional to the predicted probability
export function haloRadiusMm(p: number, cellSizeMm: number): number {
  const clamped = Math.min(1, Math.max(0, p));
  return cellSizeMm * (0.25 + 0.55 * clamped);
}
