// Handle and line colors. Two palettes: the default mirrors the engine's
// green/red cues; the alternative is an Okabe-Ito pairing that stays
// distinguishable for the common color vision deficiencies.

import type { RuleResult } from "./types.js";

export type HandleColor = "neutral" | "valid" | "invalid";

export interface Palette {
  neutral: number;
  valid: number;
  invalid: number;
  dofLeft: number;
  dofRight: number;
  fov: number;
  voxel: number;
}

export const STANDARD_PALETTE: Palette = {
  neutral: 0xffffff,
  valid: 0x2ecc40,
  invalid: 0xe7040f,
  dofLeft: 0x357edd,   // left maneuver cone blue
  dofRight: 0x19a974,  // right maneuver cone green
  fov: 0xffd700,       // viewing cone yellow
  voxel: 0x9b59b6,     // overlap voxels purple
};

export const COLORBLIND_PALETTE: Palette = {
  neutral: 0xffffff,
  valid: 0x0072b2,
  invalid: 0xe69f00,
  dofLeft: 0x56b4e9,
  dofRight: 0x009e73,
  fov: 0xf0e442,
  voxel: 0xcc79a7,
};

export function colorValue(state: HandleColor, palette: Palette): number {
  return palette[state];
}

/** Collapse a handle's server rule results into its color state. */
export function colorFromRules(rules: RuleResult[] | null): HandleColor {
  if (rules === null || rules.length === 0) return "neutral";
  return rules.every((r) => r.pass) ? "valid" : "invalid";
}
