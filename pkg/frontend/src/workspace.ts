/**
 * Top-down workspace geometry: meter/pixel mapping and workspace clamping.
 * Demonstrations happen in a horizontal plane; a height slider supplies z.
 */

import { Pose7 } from "./protocol.js";

export interface Bounds {
  min: [number, number, number];
  max: [number, number, number];
}

export const DEFAULT_BOUNDS: Bounds = {
  min: [-0.1, -0.5, 0.0],
  max: [1.0, 0.5, 0.7],
};

export const IDENTITY_QUAT: [number, number, number, number] = [1, 0, 0, 0];

export class Viewport {
  constructor(
    readonly widthPx: number,
    readonly heightPx: number,
    readonly bounds: Bounds = DEFAULT_BOUNDS,
  ) {}

  get metersPerPixel(): number {
    const spanX = this.bounds.max[0] - this.bounds.min[0];
    const spanY = this.bounds.max[1] - this.bounds.min[1];
    return Math.max(spanX / this.widthPx, spanY / this.heightPx);
  }

  toPixels(x: number, y: number): [number, number] {
    const scale = 1 / this.metersPerPixel;
    // +y in the world points left on screen (top-down view, x away from the viewer)
    return [
      (x - this.bounds.min[0]) * scale,
      this.heightPx - (y - this.bounds.min[1]) * scale,
    ];
  }

  toMeters(px: number, py: number): [number, number] {
    const scale = this.metersPerPixel;
    return [
      px * scale + this.bounds.min[0],
      (this.heightPx - py) * scale + this.bounds.min[1],
    ];
  }

  /** Clamp a world position into bounds; flags whether clamping happened. */
  clamp(x: number, y: number, z: number): { pos: [number, number, number]; clamped: boolean } {
    const cx = Math.min(Math.max(x, this.bounds.min[0]), this.bounds.max[0]);
    const cy = Math.min(Math.max(y, this.bounds.min[1]), this.bounds.max[1]);
    const cz = Math.min(Math.max(z, this.bounds.min[2]), this.bounds.max[2]);
    return { pos: [cx, cy, cz], clamped: cx !== x || cy !== y || cz !== z };
  }
}

export function planarPose(x: number, y: number, z: number): Pose7 {
  return [x, y, z, ...IDENTITY_QUAT];
}
