import { describe, expect, it } from "vitest";

import { Viewport } from "../src/workspace.js";

describe("viewport", () => {
  const vp = new Viewport(550, 500);

  it("round-trips meters and pixels", () => {
    const [px, py] = vp.toPixels(0.45, -0.1);
    const [x, y] = vp.toMeters(px, py);
    expect(x).toBeCloseTo(0.45, 9);
    expect(y).toBeCloseTo(-0.1, 9);
  });

  it("maps the workspace origin corner to the bottom-left", () => {
    const [px, py] = vp.toPixels(-0.1, -0.5);
    expect(px).toBeCloseTo(0);
    expect(py).toBeCloseTo(500);
  });

  it("clamps out-of-bounds points and flags it", () => {
    const inside = vp.clamp(0.5, 0.0, 0.3);
    expect(inside.clamped).toBe(false);
    const outside = vp.clamp(1.4, -0.7, 0.3);
    expect(outside.clamped).toBe(true);
    expect(outside.pos[0]).toBeCloseTo(1.0);
    expect(outside.pos[1]).toBeCloseTo(-0.5);
  });
});
