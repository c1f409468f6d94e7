/**
 * Touch heatmap: the 60-entry ADC vector is displayed as two 5x6 grids
 * (left hand then right hand; 5 fingertips x 6 taxels each). Readings at
 * or above CONTACT_ADC are marked as contact.
 */

/** ADC reading at or above this value counts as contact. */
export const CONTACT_ADC = 1000;
/** Full-scale ADC for color normalization. */
export const ADC_RANGE = 4096;

export interface HeatCell {
  value: number;
  contact: boolean;
  /** CSS color for the cell fill. */
  color: string;
}

export type HandGrid = HeatCell[][]; // 5 rows (fingers) x 6 cols (taxels)

function cell(value: number): HeatCell {
  const contact = value >= CONTACT_ADC;
  const t = Math.min(1, Math.max(0, value / ADC_RANGE));
  const r = Math.round(40 + 215 * t);
  const g = Math.round(40 + (contact ? 30 : 80) * (1 - t));
  const b = Math.round(60 * (1 - t));
  return { value, contact, color: `rgb(${r},${g},${b})` };
}

/** Split the 60-vector into per-hand 5x6 grids. */
export function touchGrids(touch: number[]): { left: HandGrid; right: HandGrid } {
  if (touch.length !== 60) {
    throw new Error(`touch vector must have 60 entries, got ${touch.length}`);
  }
  const grid = (offset: number): HandGrid =>
    Array.from({ length: 5 }, (_, finger) =>
      Array.from({ length: 6 }, (_, taxel) =>
        cell(touch[offset + finger * 6 + taxel]!),
      ),
    );
  return { left: grid(0), right: grid(30) };
}

export function contactCount(grid: HandGrid): number {
  return grid.flat().filter((c) => c.contact).length;
}
