/**
 * Demonstration recorder: turns a pointer drag stream into DemoSample
 * payloads on an exact time grid (pointer events jitter; the recording
 * format's spacing tolerance requires resampling). Positions are linearly
 * interpolated between pointer events, carry the current gripper toggle and
 * the latest object poses, and out-of-bounds input is clamped and flagged.
 */

import { Pose7 } from "./protocol.js";
import { DemoSamplePayload } from "./session.js";
import { Viewport, planarPose } from "./workspace.js";

export interface RecorderEvents {
  onSample?: (sample: DemoSamplePayload) => void;
  onClamped?: () => void;
}

const GRASP_RADIUS = 0.05;

export class DemoRecorder {
  readonly rateHz: number;
  private samples = 0;
  private startedAt: number | null = null;
  private nextGrid = 0;
  private prev: { x: number; y: number; t: number } | null = null;
  private gripper = 0;
  private height: number;
  private lastEe: [number, number, number] | null = null;
  private attached: { id: string; offset: [number, number, number] } | null = null;
  recording = false;

  constructor(
    private viewport: Viewport,
    private objects: Record<string, Pose7>,
    private events: RecorderEvents = {},
    rateHz = 100,
    height = 0.12,
  ) {
    if (rateHz < 50) {
      throw new Error(`sampling rate ${rateHz} below the 50 Hz contract`);
    }
    this.rateHz = rateHz;
    this.height = height;
  }

  get sampleCount(): number {
    return this.samples;
  }

  /**
   * Toggle the gripper. Closing next to an object picks it up for the rest
   * of the recording (the carried glyph follows the pointer), since a
   * meaningful demonstration must show the target object moving.
   */
  setGripper(closed: boolean): void {
    this.gripper = closed ? 1 : 0;
    if (!closed) {
      this.attached = null;
      return;
    }
    if (this.lastEe && !this.attached) {
      let best: { id: string; d: number } | null = null;
      for (const [id, pose] of Object.entries(this.objects)) {
        const d = Math.hypot(
          pose[0] - this.lastEe[0],
          pose[1] - this.lastEe[1],
          pose[2] - this.lastEe[2],
        );
        if (!best || d < best.d) best = { id, d };
      }
      if (best && best.d <= GRASP_RADIUS) {
        const pose = this.objects[best.id];
        this.attached = {
          id: best.id,
          offset: [
            pose[0] - this.lastEe[0],
            pose[1] - this.lastEe[1],
            pose[2] - this.lastEe[2],
          ],
        };
      }
    }
  }

  setHeight(z: number): void {
    this.height = z;
  }

  setObjects(objects: Record<string, Pose7>): void {
    this.objects = objects;
  }

  start(): void {
    this.recording = true;
    this.samples = 0;
    this.startedAt = null;
    this.nextGrid = 0;
    this.prev = null;
  }

  /** Feed one pointer move (canvas pixels, wall-clock timestamp in ms). */
  pointer(px: number, py: number, timestampMs: number): void {
    if (!this.recording) return;
    const [mx, my] = this.viewport.toMeters(px, py);
    if (this.startedAt === null) {
      this.startedAt = timestampMs;
      this.prev = { x: mx, y: my, t: 0 };
      this.emit(0, mx, my);
      this.nextGrid = 1;
      return;
    }
    const t = (timestampMs - this.startedAt) / 1000;
    const prev = this.prev as { x: number; y: number; t: number };
    const dt = 1 / this.rateHz;
    while (this.nextGrid * dt <= t + 1e-12) {
      const gt = this.nextGrid * dt;
      const span = t - prev.t;
      const alpha = span > 1e-9 ? (gt - prev.t) / span : 1;
      this.emit(gt, prev.x + alpha * (mx - prev.x), prev.y + alpha * (my - prev.y));
      this.nextGrid += 1;
    }
    this.prev = { x: mx, y: my, t };
  }

  private emit(t: number, x: number, y: number): void {
    const { pos, clamped } = this.viewport.clamp(x, y, this.height);
    if (clamped) this.events.onClamped?.();
    this.lastEe = pos;
    if (this.attached) {
      const { id, offset } = this.attached;
      this.objects = {
        ...this.objects,
        [id]: planarPose(pos[0] + offset[0], pos[1] + offset[1], pos[2] + offset[2]),
      };
    }
    const sample: DemoSamplePayload = {
      t,
      ee: planarPose(pos[0], pos[1], pos[2]),
      g: this.gripper,
      objects: { ...this.objects },
    };
    this.samples += 1;
    this.events.onSample?.(sample);
  }

  stop(): void {
    this.recording = false;
  }
}
