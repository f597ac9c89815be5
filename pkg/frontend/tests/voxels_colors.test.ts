import { describe, expect, it } from "vitest";

import {
  COLORBLIND_PALETTE,
  STANDARD_PALETTE,
  colorFromRules,
  colorValue,
} from "../src/colors.js";
import { voxelRenderData, voxelVolumeL } from "../src/voxels.js";
import { MockServer, SPACING_MM } from "./mock_server.js";

describe("voxel payload", () => {
  it("accepts a consistent overlap payload", () => {
    const data = voxelRenderData(new MockServer().overlapFixture());
    expect(data.centers).toHaveLength(303);
    expect(voxelVolumeL(data.centers.length, data.spacingMm)).toBe(data.volumeL);
  });

  it("rejects payloads whose volume disagrees with the cell count", () => {
    const overlap = new MockServer().overlapFixture();
    overlap.volume_l += 0.01;
    expect(() => voxelRenderData(overlap)).toThrow(/inconsistent/);

    const short = new MockServer().overlapFixture();
    short.cells_mm = short.cells_mm.slice(0, 10);
    expect(() => voxelRenderData(short)).toThrow(/inconsistent/);
  });

  it("computes liters from cubic millimeters", () => {
    expect(voxelVolumeL(303, SPACING_MM)).toBeCloseTo(1.022625, 12);
  });
});

describe("palettes", () => {
  it("maps rule outcomes to handle colors", () => {
    expect(colorFromRules(null)).toBe("neutral");
    expect(colorFromRules([])).toBe("neutral");
    const pass = { id: "x", pass: true, value: 1, unit: "mm", threshold: "" };
    const fail = { id: "y", pass: false, value: 1, unit: "mm", threshold: "" };
    expect(colorFromRules([pass, pass])).toBe("valid");
    expect(colorFromRules([pass, fail])).toBe("invalid");
  });

  it("offers a distinct color-vision-safe palette", () => {
    expect(colorValue("valid", STANDARD_PALETTE)).not.toBe(
      colorValue("valid", COLORBLIND_PALETTE),
    );
    expect(colorValue("invalid", STANDARD_PALETTE)).not.toBe(
      colorValue("invalid", COLORBLIND_PALETTE),
    );
    // within each palette the three states stay distinguishable
    for (const palette of [STANDARD_PALETTE, COLORBLIND_PALETTE]) {
      const values = new Set([
        colorValue("neutral", palette),
        colorValue("valid", palette),
        colorValue("invalid", palette),
      ]);
      expect(values.size).toBe(3);
    }
  });
});
