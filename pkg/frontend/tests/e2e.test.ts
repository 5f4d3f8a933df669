/**
 * End-to-end against the real service: a scripted drag session records a
 * demonstration the server accepts and learns, and a perturb-drag during
 * execution shows up as a retried action in the live tick stream.
 */

import { ChildProcess, spawn } from "node:child_process";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { BtView } from "../src/btview.js";
import { CanvasScene, PerturbDrag } from "../src/canvas.js";
import { BtNodeJson, Pose7, TickUpdatePayload } from "../src/protocol.js";
import { DemoRecorder } from "../src/recorder.js";
import { CobtSession } from "../src/session.js";
import { Transport, connectTcp } from "../src/transport.js";
import { Viewport, planarPose } from "../src/workspace.js";

let server: ChildProcess;
let port = 0;

beforeAll(async () => {
  server = spawn("python3", ["-m", "cobt.cli", "serve", "--port", "0"], {
    stdio: ["ignore", "pipe", "inherit"],
  });
  port = await new Promise<number>((resolve, reject) => {
    const timer = setTimeout(() => reject(new Error("server did not start")), 20000);
    server.stdout!.on("data", (chunk: Buffer) => {
      const match = /LISTENING (\d+)/.exec(chunk.toString());
      if (match) {
        clearTimeout(timer);
        resolve(Number(match[1]));
      }
    });
    server.once("exit", (code) => reject(new Error(`server exited: ${code}`)));
  });
}, 30000);

afterAll(() => {
  server?.kill();
});

const vp = new Viewport(550, 500);
const CUBE: Pose7 = planarPose(0.55, 0.18, 0.02);
const TRAY: Pose7 = planarPose(0.25, -0.18, 0.0);
const PLACE: [number, number] = [0.33, -0.18];

function fakeCtx() {
  return {
    clearRect() {}, beginPath() {}, arc() {}, rect() {},
    fill() {}, stroke() {}, fillText() {},
    fillStyle: "", strokeStyle: "",
  };
}

/** Min-jerk drag between two points, pointer events every ~11 ms. */
function dragLeg(
  rec: DemoRecorder,
  from: [number, number],
  to: [number, number],
  startMs: number,
  durationMs: number,
): number {
  for (let t = startMs; t <= startMs + durationMs; t += 11) {
    const s = (t - startMs) / durationMs;
    const alpha = 10 * s ** 3 - 15 * s ** 4 + 6 * s ** 5;
    const x = from[0] + alpha * (to[0] - from[0]);
    const y = from[1] + alpha * (to[1] - from[1]);
    const [px, py] = vp.toPixels(x, y);
    rec.pointer(px, py, t);
  }
  return startMs + durationMs;
}

function dwell(rec: DemoRecorder, at: [number, number], startMs: number, durationMs: number): number {
  return dragLeg(rec, at, at, startMs, durationMs);
}

describe("studio end-to-end", () => {
  it(
    "records a learnable demonstration and shows the retried action on perturb-drag",
    async () => {
      const transport: Transport = await connectTcp("127.0.0.1", port);
      const session = new CobtSession(transport, "e2e");

      // --- scripted drag demonstration (planar, fixed height) ---------------
      await session.startDemo(100, { source: "studio-e2e" });
      const rec = new DemoRecorder(
        vp,
        { cube: CUBE, tray: TRAY },
        { onSample: (s) => session.sendSample(s) },
        100,
        0.03,
      );
      rec.start();
      const HOME: [number, number] = [0.15, -0.28];
      const CUBE_XY: [number, number] = [CUBE[0], CUBE[1]];
      let t = dragLeg(rec, HOME, CUBE_XY, 0, 1400);
      t = dwell(rec, CUBE_XY, t, 500);
      rec.setGripper(true); // picks the cube up (1 cm below the pointer plane)
      t = dwell(rec, CUBE_XY, t, 500);
      t = dragLeg(rec, CUBE_XY, PLACE, t, 1600);
      t = dwell(rec, PLACE, t, 500);
      rec.setGripper(false);
      t = dwell(rec, PLACE, t, 500);
      t = dragLeg(rec, PLACE, HOME, t, 1400);
      dwell(rec, HOME, t, 300);
      rec.stop();

      const samples = await session.endDemo(); // server-side validation gate
      expect(samples).toBeGreaterThan(500);

      const learn = await session.learn("cube", "tray", "studio-pnp");
      const actions = Number(learn.payload["actions"]);
      expect(actions).toBeGreaterThanOrEqual(3);
      const tree = learn.payload["bt"] as BtNodeJson;

      // --- execute with a live perturb-drag ---------------------------------
      const btView = new BtView();
      btView.load(tree);
      const scene = new CanvasScene(fakeCtx(), vp);
      const drag = new PerturbDrag(
        scene,
        vp,
        (object, pose) => session.perturb(object, pose),
        () => undefined,
      );
      drag.executing = true;

      // the reach action leaf is the innermost sequence's action
      const reachLeafId = (() => {
        let found: string | null = null;
        const walk = (n: BtNodeJson) => {
          if (n.kind === "ActionLeaf" && n.action === 1) found = n.id;
          n.children?.forEach(walk);
        };
        walk(tree);
        return found!;
      })();
      expect(reachLeafId).toBeTruthy();

      await session.loadScene({
        objects: { cube: [...CUBE], tray: [...TRAY] },
        ee: planarPose(0.15, -0.28, 0.3),
        gripper: 0.0,
        bounds: [
          [-0.1, -0.5, 0.0],
          [1.0, 0.5, 0.7],
        ],
      });

      let perturbed = false;
      let reachRunningAfterPerturb = false;
      let perturbTick = Infinity;
      session.onTick((update: TickUpdatePayload) => {
        scene.applyTick(update);
        btView.applyStatuses(update.statuses);
        if (!perturbed && update.active_action === 1 && update.tick > 80) {
          // drag the cube glyph 12 cm away mid-reach
          const [px, py] = vp.toPixels(update.objects["cube"][0], update.objects["cube"][1]);
          if (drag.down(px, py)) {
            const [tx, ty] = vp.toPixels(0.62, -0.02);
            drag.move(tx, ty);
            drag.up();
            perturbed = true;
            perturbTick = update.tick;
          }
        }
        if (
          perturbed &&
          update.tick > perturbTick + 50 &&
          btView.statusOf(reachLeafId) === "Running"
        ) {
          reachRunningAfterPerturb = true; // the retried reach, rendered live
        }
      });

      const result = await session.execute({ decimate: 5, max_ticks: 40000 });
      expect(perturbed).toBe(true);
      expect(result.success).toBe(true);
      expect(result.action_executions["1"]).toBeGreaterThanOrEqual(2);
      expect(reachRunningAfterPerturb).toBe(true);
      expect(session.outOfOrderDropped).toBe(0);

      session.close();
    },
    120000,
  );
});
