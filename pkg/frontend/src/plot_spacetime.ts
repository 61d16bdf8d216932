/**
 * Space-time plot of an event trace: one horizontal segment per committed
 * update, spanning the block's x extent at its update time.  Regions with
 * coarse local timesteps show as sparse bands.
 *
 * Usage: tsx src/plot_spacetime.ts <spacetime.csv> -o out.svg
 */

import { writeFileSync } from "fs";
import process from "process";

import { parseSpacetime, SpacetimeTrace } from "./trace.js";
import { extent, scale, Svg } from "./svg.js";

const MARGIN = { left: 54, right: 16, top: 18, bottom: 40 };

export function renderSpacetime(trace: SpacetimeTrace,
                                width = 720, height = 520): string {
  const svg = new Svg(width, height);
  const segs = trace.segments;
  if (segs.length === 0) {
    console.error("warning: empty trace, rendering bare axes");
  }
  const xDom = extent(segs.flatMap((s) => [s.xLeft, s.xRight]));
  const tDom = extent([0, ...segs.map((s) => s.tSec)]);
  const sx = scale(xDom, [MARGIN.left, width - MARGIN.right]);
  const sy = scale(tDom, [height - MARGIN.bottom, MARGIN.top]);

  svg.line(MARGIN.left, height - MARGIN.bottom, width - MARGIN.right,
           height - MARGIN.bottom, "#222");
  svg.line(MARGIN.left, MARGIN.top, MARGIN.left, height - MARGIN.bottom,
           "#222");
  for (let i = 0; i <= 4; i++) {
    const x = xDom.min + (i / 4) * (xDom.max - xDom.min);
    svg.text(sx(x), height - MARGIN.bottom + 16, x.toFixed(2));
    const t = tDom.min + (i / 4) * (tDom.max - tDom.min);
    svg.text(MARGIN.left - 8, sy(t) + 4, t.toFixed(3), 11, "end");
  }
  svg.text(width / 2, height - 8, "x");
  svg.text(14, height / 2, "t", 12);

  for (const s of segs) {
    svg.line(sx(s.xLeft), sy(s.tSec), sx(s.xRight), sy(s.tSec),
             "#1f5fa8", 0.8, "segment");
  }
  return svg.render();
}

function main(argv: string[]): number {
  const out = argv.indexOf("-o");
  if (argv.length < 1 || out === -1 || !argv[out + 1]) {
    console.error("usage: plot_spacetime <trace.csv> -o <out.svg>");
    return 2;
  }
  const input = argv.filter((_, i) => i !== out && i !== out + 1)[0];
  const trace = parseSpacetime(input);
  writeFileSync(argv[out + 1], renderSpacetime(trace));
  console.error(`wrote ${argv[out + 1]} (${trace.segments.length} segments)`);
  return 0;
}

if (process.argv[1] && process.argv[1].endsWith("plot_spacetime.ts")) {
  process.exit(main(process.argv.slice(2)));
}
