/**
 * Top-down scene painter plus the perturbation drag controller. Drawing goes
 * through the minimal 2D-context surface below so tests can inject a fake;
 * glyph positions always come from the latest world snapshot.
 */

import { Pose7, TickUpdatePayload } from "./protocol.js";
import { Viewport } from "./workspace.js";

export interface Draw2D {
  clearRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  rect(x: number, y: number, w: number, h: number): void;
  fill(): void;
  stroke(): void;
  fillText(text: string, x: number, y: number): void;
  fillStyle: string | unknown;
  strokeStyle: string | unknown;
}

export interface SceneSnapshot {
  ee: Pose7;
  gripper: number;
  objects: Record<string, Pose7>;
  attached: string | null;
}

export class CanvasScene {
  private snapshot: SceneSnapshot | null = null;
  dragging: { object: string; px: number; py: number } | null = null;

  constructor(
    private ctx: Draw2D,
    private viewport: Viewport,
    private glyphRadiusPx = 10,
  ) {}

  get current(): SceneSnapshot | null {
    return this.snapshot;
  }

  update(snapshot: SceneSnapshot): void {
    this.snapshot = snapshot;
    this.repaint();
  }

  applyTick(update: TickUpdatePayload): void {
    this.update({
      ee: update.ee,
      gripper: update.gripper,
      objects: update.objects,
      attached: update.attached,
    });
  }

  repaint(): void {
    const snap = this.snapshot;
    this.ctx.clearRect(0, 0, this.viewport.widthPx, this.viewport.heightPx);
    if (!snap) return;
    for (const [id, pose] of Object.entries(snap.objects)) {
      const [px, py] =
        this.dragging?.object === id
          ? [this.dragging.px, this.dragging.py]
          : this.viewport.toPixels(pose[0], pose[1]);
      this.ctx.beginPath();
      this.ctx.fillStyle = snap.attached === id ? "#b06c1f" : "#3a6ea5";
      this.ctx.rect(px - 8, py - 8, 16, 16);
      this.ctx.fill();
      this.ctx.fillText(id, px + 10, py - 10);
    }
    const [ex, ey] = this.viewport.toPixels(snap.ee[0], snap.ee[1]);
    this.ctx.beginPath();
    this.ctx.fillStyle = snap.gripper >= 0.5 ? "#222" : "#777";
    this.ctx.arc(ex, ey, this.glyphRadiusPx, 0, Math.PI * 2);
    this.ctx.fill();
  }

  /** Object glyph under a pixel position, if any. */
  hitObject(px: number, py: number): string | null {
    if (!this.snapshot) return null;
    for (const [id, pose] of Object.entries(this.snapshot.objects)) {
      const [ox, oy] = this.viewport.toPixels(pose[0], pose[1]);
      if (Math.abs(px - ox) <= this.glyphRadiusPx && Math.abs(py - oy) <= this.glyphRadiusPx) {
        return id;
      }
    }
    return null;
  }
}

export type PerturbSender = (object: string, pose: Pose7) => void;
export type SceneEditSender = (object: string, pose: Pose7) => void;

/**
 * Drag controller for object glyphs. During execution a drop sends a Perturb
 * message; before execution it is a scene edit instead. Attached objects are
 * rejected inline by the server; the controller only reports the refusal.
 */
export class PerturbDrag {
  executing = false;

  constructor(
    private scene: CanvasScene,
    private viewport: Viewport,
    private sendPerturb: PerturbSender,
    private editScene: SceneEditSender,
    private onRefused: (message: string) => void = () => undefined,
  ) {}

  down(px: number, py: number): boolean {
    const id = this.scene.hitObject(px, py);
    if (!id) return false;
    if (this.executing && this.scene.current?.attached === id) {
      this.onRefused(`${id} is grasped`);
      return false;
    }
    this.scene.dragging = { object: id, px, py };
    return true;
  }

  move(px: number, py: number): void {
    if (this.scene.dragging) {
      this.scene.dragging.px = px;
      this.scene.dragging.py = py;
      this.scene.repaint();
    }
  }

  up(): void {
    const drag = this.scene.dragging;
    if (!drag) return;
    this.scene.dragging = null;
    const [x, y] = this.viewport.toMeters(drag.px, drag.py);
    const old = this.scene.current?.objects[drag.object];
    const z = old ? old[2] : 0;
    const { pos } = this.viewport.clamp(x, y, z);
    const pose: Pose7 = [pos[0], pos[1], pos[2], 1, 0, 0, 0];
    if (this.executing) {
      this.sendPerturb(drag.object, pose);
    } else {
      this.editScene(drag.object, pose);
    }
  }
}
