import { describe, expect, it } from "vitest";

import { decodeGrid, dominantOrdinals, maxDensity, NONE_ORDINAL } from "../src/grid";
import { fixtureBytes } from "./helpers";

describe("TDM1 grid decoding", () => {
  it("decodes the recorded base grid", () => {
    const grid = decodeGrid(fixtureBytes("grid_base.bin"));
    expect(grid.width).toBe(64);
    expect(grid.height).toBe(64);
    expect(grid.density.length).toBe(64 * 64);
    expect(maxDensity(grid)).toBeGreaterThan(0);
    for (const v of grid.density) expect(Number.isFinite(v)).toBe(true);
  });

  it("reports dominant ordinals excluding the none marker", () => {
    const grid = decodeGrid(fixtureBytes("grid_base.bin"));
    const doms = dominantOrdinals(grid);
    expect(doms.has(NONE_ORDINAL)).toBe(false);
    expect([...doms].sort()).toEqual([0, 1]); // two POIs in the base scene
  });

  it("rejects garbage buffers", () => {
    expect(() => decodeGrid(new ArrayBuffer(8))).toThrow(/TDM1/);
    const bogus = new Uint8Array(20);
    bogus.set([0x54, 0x44, 0x4d, 0x31]); // magic but broken sizes
    bogus[4] = 9;
    expect(() => decodeGrid(bogus.buffer)).toThrow(/truncated/);
  });
});
