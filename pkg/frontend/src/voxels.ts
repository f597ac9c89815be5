// Overlap voxel payload handling. The render layer draws exactly the cells
// the server shipped; the count-times-cell-volume identity is asserted before
// anything reaches the screen.

import type { OverlapWire, Vec3 } from "./types.js";

export interface VoxelRenderData {
  centers: Vec3[];
  spacingMm: number;
  volumeL: number;
}

export function voxelVolumeL(cellCount: number, spacingMm: number): number {
  return (cellCount * spacingMm ** 3) / 1e6;
}

/** Validate the server payload and shape it for rendering.
 *  Throws when the cells, count, and reported volume disagree. */
export function voxelRenderData(overlap: OverlapWire): VoxelRenderData {
  if (overlap.cells_mm.length !== overlap.cell_count) {
    throw new Error(
      `overlap payload inconsistent: ${overlap.cells_mm.length} cells vs cell_count ${overlap.cell_count}`,
    );
  }
  const derived = voxelVolumeL(overlap.cell_count, overlap.spacing_mm);
  if (Math.abs(derived - overlap.volume_l) > 1e-9) {
    throw new Error(
      `overlap payload inconsistent: ${overlap.cell_count} cells x ${overlap.spacing_mm} mm ` +
        `= ${derived} L but server reported ${overlap.volume_l} L`,
    );
  }
  return {
    centers: overlap.cells_mm,
    spacingMm: overlap.spacing_mm,
    volumeL: overlap.volume_l,
  };
}
