/**
 * Parsers for the artifacts the simulator CLI exports:
 *  - space-time segment CSV: a JSON header line, a column header, then
 *    `tick,t_sec,submesh,x_left,x_right` rows (one per committed update);
 *  - stats JSON: per-run counters (committed cell updates, wall time, ...).
 */

import { readFileSync } from "fs";

export interface Segment {
  tick: number;
  tSec: number;
  submesh: number;
  xLeft: number;
  xRight: number;
}

export interface SpacetimeTrace {
  header: Record<string, unknown>;
  segments: Segment[];
}

export interface RunStats {
  committedCellUpdates: number;
  wallUs: number;
  mode: string;
  label: string;
}

export function parseSpacetime(path: string): SpacetimeTrace {
  const lines = readFileSync(path, "utf8").split("\n").filter((l) => l.length > 0);
  if (lines.length < 2) {
    throw new Error(`malformed trace ${path}: missing header`);
  }
  let header: Record<string, unknown>;
  try {
    header = JSON.parse(lines[0]);
  } catch {
    throw new Error(`malformed trace ${path}: first line is not JSON`);
  }
  const columns = lines[1].split(",");
  const expect = ["tick", "t_sec", "submesh", "x_left", "x_right"];
  if (columns.join(",") !== expect.join(",")) {
    throw new Error(`malformed trace ${path}: columns ${lines[1]}`);
  }
  const segments: Segment[] = [];
  for (const line of lines.slice(2)) {
    const parts = line.split(",");
    if (parts.length !== 5) {
      throw new Error(`malformed trace ${path}: row '${line}'`);
    }
    const [tick, tSec, submesh, xLeft, xRight] = parts.map(Number);
    if (parts.some((p) => p.length === 0) || [tick, tSec, submesh, xLeft, xRight].some(Number.isNaN)) {
      throw new Error(`malformed trace ${path}: row '${line}'`);
    }
    if (tick < 0) {
      throw new Error(`malformed trace ${path}: negative tick in '${line}'`);
    }
    segments.push({ tick, tSec, submesh, xLeft, xRight });
  }
  return { header, segments };
}

export function parseStats(path: string): RunStats {
  const raw = JSON.parse(readFileSync(path, "utf8"));
  const updates = raw.committed_cell_updates;
  const wall = raw.wall_us;
  if (typeof updates !== "number" || typeof wall !== "number") {
    throw new Error(`stats ${path}: missing committed_cell_updates/wall_us`);
  }
  const cfg = raw.config ?? {};
  const label = [cfg.problem, cfg.ics, cfg.mesh].filter(Boolean).join("/");
  return {
    committedCellUpdates: updates,
    wallUs: wall,
    mode: raw.mode ?? "?",
    label: label || path,
  };
}
