import { describe, expect, it } from "vitest";

import { DemoRecorder } from "../src/recorder.js";
import { DemoSamplePayload } from "../src/session.js";
import { Viewport, planarPose } from "../src/workspace.js";

const vp = new Viewport(550, 500);

function drag(
  recorder: DemoRecorder,
  fromM: [number, number],
  toM: [number, number],
  startMs: number,
  durationMs: number,
  stepMs = 11.3, // deliberately off-grid event timing
): number {
  let t = startMs;
  while (t <= startMs + durationMs) {
    const alpha = (t - startMs) / durationMs;
    const x = fromM[0] + alpha * (toM[0] - fromM[0]);
    const y = fromM[1] + alpha * (toM[1] - fromM[1]);
    const [px, py] = vp.toPixels(x, y);
    recorder.pointer(px, py, t);
    t += stepMs;
  }
  return t;
}

describe("demo recorder", () => {
  it("emits samples on an exact grid at the declared rate", () => {
    const samples: DemoSamplePayload[] = [];
    const rec = new DemoRecorder(vp, { cube: planarPose(0.5, 0.1, 0.02) }, {
      onSample: (s) => samples.push(s),
    });
    rec.start();
    drag(rec, [0.2, -0.2], [0.5, 0.1], 1000, 2000);
    expect(samples.length).toBeGreaterThanOrEqual(100); // >= 50 Hz over 2 s
    for (let i = 1; i < samples.length; i++) {
      expect(samples[i].t - samples[i - 1].t).toBeCloseTo(0.01, 9);
    }
  });

  it("steps the gripper channel mid-drag", () => {
    const samples: DemoSamplePayload[] = [];
    const rec = new DemoRecorder(vp, {}, { onSample: (s) => samples.push(s) });
    rec.start();
    let t = drag(rec, [0.2, -0.2], [0.4, 0.0], 0, 800);
    rec.setGripper(true);
    drag(rec, [0.4, 0.0], [0.6, 0.1], t, 800);
    const flip = samples.findIndex((s) => s.g === 1);
    expect(flip).toBeGreaterThan(0);
    expect(new Set(samples.map((s) => s.g))).toEqual(new Set([0, 1]));
  });

  it("clamps out-of-workspace input and warns", () => {
    let clamps = 0;
    const rec = new DemoRecorder(vp, {}, { onClamped: () => (clamps += 1) });
    rec.start();
    rec.pointer(-200, 250, 0); // far left of the canvas
    rec.pointer(-200, 250, 40);
    expect(clamps).toBeGreaterThan(0);
  });

  it("carries a grasped object with the pointer", () => {
    const samples: DemoSamplePayload[] = [];
    const rec = new DemoRecorder(
      vp,
      { cube: planarPose(0.5, 0.1, 0.02), tray: planarPose(0.2, -0.3, 0.0) },
      { onSample: (s) => samples.push(s) },
      100,
      0.03,
    );
    rec.start();
    let t = drag(rec, [0.2, -0.2], [0.5, 0.1], 0, 1000);
    rec.setGripper(true); // pointer is at the cube; 3D offset ~1 cm
    t = drag(rec, [0.5, 0.1], [0.3, -0.25], t, 1000);
    rec.setGripper(false);
    drag(rec, [0.3, -0.25], [0.2, -0.1], t, 600);
    const last = samples[samples.length - 1];
    expect(last.objects["cube"][0]).toBeCloseTo(0.3, 2);
    expect(last.objects["cube"][1]).toBeCloseTo(-0.25, 2);
    expect(last.objects["tray"][0]).toBeCloseTo(0.2, 9); // never grasped
  });

  it("rejects sub-contract sampling rates", () => {
    expect(() => new DemoRecorder(vp, {}, {}, 30)).toThrow(/50 Hz/);
  });
});
