/**
 * Grouped bars of work-based versus observed speed-up for paired runs.
 *
 * Each pair is (reference stats, local-timestepping stats); the work bar is
 * the ratio of committed cell updates, the observed bar the ratio of wall
 * times.
 *
 * Usage: tsx src/plot_speedups.ts <ref.json> <lts.json> [<ref2> <lts2> ...] -o out.svg
 */

import { writeFileSync } from "fs";
import process from "process";

import { parseStats, RunStats } from "./trace.js";
import { Svg } from "./svg.js";

export interface SpeedupPair {
  label: string;
  work: number;
  observed: number;
}

export function pairStats(files: RunStats[]): SpeedupPair[] {
  if (files.length === 0 || files.length % 2 !== 0) {
    throw new Error(
      `stats files must come in (reference, lts) pairs; got ${files.length}`);
  }
  const pairs: SpeedupPair[] = [];
  for (let i = 0; i < files.length; i += 2) {
    const ref = files[i];
    const lts = files[i + 1];
    if (lts.committedCellUpdates <= 0 || lts.wallUs <= 0) {
      throw new Error(`degenerate pair for ${lts.label}`);
    }
    pairs.push({
      label: lts.label,
      work: ref.committedCellUpdates / lts.committedCellUpdates,
      observed: ref.wallUs / lts.wallUs,
    });
  }
  return pairs;
}

const MARGIN = { left: 54, right: 16, top: 24, bottom: 48 };

export function renderSpeedups(pairs: SpeedupPair[],
                               width = 640, height = 420): string {
  const svg = new Svg(width, height);
  const top = Math.max(1, ...pairs.flatMap((p) => [p.work, p.observed])) * 1.15;
  const plotW = width - MARGIN.left - MARGIN.right;
  const plotH = height - MARGIN.top - MARGIN.bottom;
  const y = (v: number) => MARGIN.top + plotH * (1 - v / top);

  svg.line(MARGIN.left, y(0), width - MARGIN.right, y(0), "#222");
  svg.line(MARGIN.left, MARGIN.top, MARGIN.left, y(0), "#222");
  for (let i = 0; i <= 4; i++) {
    const v = (top * i) / 4;
    svg.text(MARGIN.left - 8, y(v) + 4, v.toFixed(1), 11, "end");
    svg.line(MARGIN.left - 3, y(v), MARGIN.left, y(v), "#222");
  }
  svg.line(MARGIN.left, y(1), width - MARGIN.right, y(1), "#999", 0.6);

  const group = plotW / Math.max(1, pairs.length);
  const bar = Math.min(42, group / 3);
  pairs.forEach((p, i) => {
    const cx = MARGIN.left + group * (i + 0.5);
    svg.rect(cx - bar - 2, y(p.work), bar, y(0) - y(p.work),
             "#1f5fa8", "bar-work");
    svg.rect(cx + 2, y(p.observed), bar, y(0) - y(p.observed),
             "#d08a1d", "bar-observed");
    svg.text(cx, height - MARGIN.bottom + 16, p.label);
    svg.text(cx - bar / 2 - 2, y(p.work) - 4, p.work.toFixed(2));
    svg.text(cx + bar / 2 + 2, y(p.observed) - 4, p.observed.toFixed(2));
  });
  svg.text(MARGIN.left + 10, MARGIN.top - 8,
           "work speed-up (blue) vs observed (orange)", 11, "start");
  return svg.render();
}

function main(argv: string[]): number {
  const out = argv.indexOf("-o");
  if (out === -1 || !argv[out + 1]) {
    console.error(
      "usage: plot_speedups <ref.json> <lts.json> [...] -o <out.svg>");
    return 2;
  }
  const inputs = argv.filter((_, i) => i !== out && i !== out + 1);
  const pairs = pairStats(inputs.map(parseStats));
  writeFileSync(argv[out + 1], renderSpeedups(pairs));
  console.error(`wrote ${argv[out + 1]} (${pairs.length} pairs)`);
  return 0;
}

if (process.argv[1] && process.argv[1].endsWith("plot_speedups.ts")) {
  process.exit(main(process.argv.slice(2)));
}
