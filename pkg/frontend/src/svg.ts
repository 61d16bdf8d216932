/** Tiny SVG document builder: enough for line segments, bars, and axis text. */

export interface Extent {
  min: number;
  max: number;
}

export function extent(values: number[]): Extent {
  if (values.length === 0) {
    return { min: 0, max: 1 };
  }
  let min = values[0];
  let max = values[0];
  for (const v of values) {
    if (v < min) min = v;
    if (v > max) max = v;
  }
  if (min === max) {
    max = min + 1;
  }
  return { min, max };
}

export function scale(domain: Extent, range: [number, number]) {
  const span = domain.max - domain.min;
  return (v: number) =>
    range[0] + ((v - domain.min) / span) * (range[1] - range[0]);
}

export class Svg {
  private parts: string[] = [];

  constructor(readonly width: number, readonly height: number) {}

  line(x1: number, y1: number, x2: number, y2: number, stroke: string,
       width = 1, cls = "") {
    const klass = cls ? ` class="${cls}"` : "";
    this.parts.push(
      `<line${klass} x1="${x1.toFixed(2)}" y1="${y1.toFixed(2)}" ` +
      `x2="${x2.toFixed(2)}" y2="${y2.toFixed(2)}" ` +
      `stroke="${stroke}" stroke-width="${width}"/>`);
  }

  rect(x: number, y: number, w: number, h: number, fill: string, cls = "") {
    const klass = cls ? ` class="${cls}"` : "";
    this.parts.push(
      `<rect${klass} x="${x.toFixed(2)}" y="${y.toFixed(2)}" ` +
      `width="${w.toFixed(2)}" height="${h.toFixed(2)}" fill="${fill}"/>`);
  }

  text(x: number, y: number, content: string, size = 11, anchor = "middle") {
    this.parts.push(
      `<text x="${x.toFixed(2)}" y="${y.toFixed(2)}" font-size="${size}" ` +
      `text-anchor="${anchor}" font-family="sans-serif">${content}</text>`);
  }

  render(): string {
    return [
      `<svg xmlns="http://www.w3.org/2000/svg" width="${this.width}" ` +
      `height="${this.height}" viewBox="0 0 ${this.width} ${this.height}">`,
      `<rect x="0" y="0" width="${this.width}" height="${this.height}" ` +
      `fill="white"/>`,
      ...this.parts,
      "</svg>",
    ].join("\n");
  }
}
