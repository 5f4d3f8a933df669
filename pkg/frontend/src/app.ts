/**
 * Browser wiring: canvas demonstration recording, gripper toggle, height
 * slider, learn/execute buttons, live tree coloring, and perturbation drags.
 * The page is stateless with respect to truth: every glyph and node color is
 * derived from server messages, so a reload plus resubscribe reproduces the
 * view.
 */

import { BtView } from "./btview.js";
import { CanvasScene, PerturbDrag } from "./canvas.js";
import { DemoRecorder } from "./recorder.js";
import { CobtSession } from "./session.js";
import { Transport } from "./transport.js";
import { BtNodeJson, Pose7, TickUpdatePayload } from "./protocol.js";
import { Viewport } from "./workspace.js";

export interface AppElements {
  canvas: HTMLCanvasElement;
  treeList: HTMLUListElement;
  recordButton: HTMLButtonElement;
  gripperToggle: HTMLInputElement;
  heightSlider: HTMLInputElement;
  learnButton: HTMLButtonElement;
  executeButton: HTMLButtonElement;
  banner: HTMLElement;
}

export class StudioApp {
  readonly session: CobtSession;
  readonly viewport: Viewport;
  readonly scene: CanvasScene;
  readonly btView = new BtView();
  readonly recorder: DemoRecorder;
  readonly drag: PerturbDrag;
  private objects: Record<string, Pose7> = {};
  private target = "cube";
  private goal = "tray";

  constructor(transport: Transport, private els: AppElements, sessionId = "studio") {
    this.session = new CobtSession(transport, sessionId);
    this.viewport = new Viewport(els.canvas.width, els.canvas.height);
    const ctx = els.canvas.getContext("2d");
    if (!ctx) throw new Error("2d canvas context unavailable");
    this.scene = new CanvasScene(ctx, this.viewport);
    this.recorder = new DemoRecorder(this.viewport, this.objects, {
      onSample: (s) => this.session.sendSample(s),
      onClamped: () => this.note("input clamped to the workspace"),
    });
    this.drag = new PerturbDrag(
      this.scene,
      this.viewport,
      (object, pose) => this.session.perturb(object, pose),
      (object, pose) => this.editScene(object, pose),
      (msg) => this.note(msg),
    );
    this.session.onTick((u) => this.renderTick(u));
    this.session.onError((m) => this.note(m));
    this.bind();
  }

  private note(message: string): void {
    this.els.banner.textContent = message;
  }

  /** Repaint scene glyphs and tree colors from one TickUpdate. */
  renderTick(update: TickUpdatePayload): void {
    this.scene.applyTick(update);
    this.btView.applyStatuses(update.statuses);
    this.btView.renderInto(this.els.treeList as unknown as {
      innerHTML: string;
      appendChild(el: unknown): void;
      ownerDocument?: { createElement(tag: string): unknown };
    });
  }

  loadTree(tree: BtNodeJson): void {
    this.btView.load(tree);
  }

  setScene(objects: Record<string, Pose7>, target: string, goal: string): void {
    this.objects = objects;
    this.target = target;
    this.goal = goal;
    this.recorder.setObjects(objects);
    this.scene.update({ ee: [0.15, -0.28, 0.32, 1, 0, 0, 0], gripper: 0, objects, attached: null });
  }

  private editScene(object: string, pose: Pose7): void {
    this.objects = { ...this.objects, [object]: pose };
    this.recorder.setObjects(this.objects);
    const snap = this.scene.current;
    if (snap) this.scene.update({ ...snap, objects: this.objects });
  }

  private bind(): void {
    const { canvas, recordButton, gripperToggle, heightSlider, learnButton, executeButton } =
      this.els;
    recordButton.addEventListener("click", async () => {
      if (!this.recorder.recording) {
        await this.session.startDemo(this.recorder.rateHz, { source: "studio" });
        this.recorder.start();
        recordButton.textContent = "stop";
      } else {
        this.recorder.stop();
        const n = await this.session.endDemo();
        this.note(`recorded ${n} samples`);
        recordButton.textContent = "record";
      }
    });
    gripperToggle.addEventListener("change", () => {
      this.recorder.setGripper(gripperToggle.checked);
    });
    heightSlider.addEventListener("input", () => {
      this.recorder.setHeight(Number(heightSlider.value));
    });
    canvas.addEventListener("pointermove", (ev) => {
      const rect = canvas.getBoundingClientRect();
      const px = ev.clientX - rect.left;
      const py = ev.clientY - rect.top;
      if (this.recorder.recording) {
        this.recorder.pointer(px, py, ev.timeStamp);
      } else {
        this.drag.move(px, py);
      }
    });
    canvas.addEventListener("pointerdown", (ev) => {
      if (this.recorder.recording) return;
      const rect = canvas.getBoundingClientRect();
      this.drag.down(ev.clientX - rect.left, ev.clientY - rect.top);
    });
    canvas.addEventListener("pointerup", () => this.drag.up());
    learnButton.addEventListener("click", async () => {
      const reply = await this.session.learn(this.target, this.goal, "studio-skill");
      this.loadTree(reply.payload["bt"] as BtNodeJson);
      this.note(`learned ${String(reply.payload["actions"])} actions`);
    });
    executeButton.addEventListener("click", async () => {
      this.drag.executing = true;
      try {
        const result = await this.session.execute({ decimate: 5, realtime: true });
        this.note(result.success ? "task complete" : "execution stopped");
      } finally {
        this.drag.executing = false;
      }
    });
  }
}
