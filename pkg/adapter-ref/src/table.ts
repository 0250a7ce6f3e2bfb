/**
 * Lookup table for the mock recognizer, keyed by audio file basename.
 *
 * {
 *   "clips":    {"greet_01.wav": "hello thanks for calling"},
 *   "errors":   {"broken_03.wav": "decode_failed"},
 *   "timeouts": ["hang_07.wav"]
 * }
 *
 * errors and timeouts are the failure-injection half: an errors entry
 * answers with that error string, a timeouts entry never answers at all
 * (the driver's per-request timeout must recover).
 */

import { readFileSync } from "node:fs";

export interface MockTable {
  clips: Record<string, string>;
  errors: Record<string, string>;
  timeouts: Set<string>;
}

export function loadTable(path: string): MockTable {
  const raw = JSON.parse(readFileSync(path, "utf-8"));
  if (typeof raw !== "object" || raw === null || Array.isArray(raw)) {
    throw new Error(`table ${path}: expected a JSON object`);
  }
  const clips = asStringMap(raw.clips ?? {}, `${path}: clips`);
  const errors = asStringMap(raw.errors ?? {}, `${path}: errors`);
  const timeouts = raw.timeouts ?? [];
  if (
    !Array.isArray(timeouts) ||
    timeouts.some((t: unknown) => typeof t !== "string")
  ) {
    throw new Error(`table ${path}: timeouts must be an array of strings`);
  }
  return { clips, errors, timeouts: new Set(timeouts as string[]) };
}

function asStringMap(value: unknown, what: string): Record<string, string> {
  if (typeof value !== "object" || value === null || Array.isArray(value)) {
    throw new Error(`${what} must be an object of strings`);
  }
  for (const [k, v] of Object.entries(value)) {
    if (typeof v !== "string") {
      throw new Error(`${what}: value for ${k} is not a string`);
    }
  }
  return value as Record<string, string>;
}
