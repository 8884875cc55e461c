/**
 * SVG assembly from plain strings. Attribute order is the written order and
 * every coordinate goes through one formatter, so a re-render of the same
 * inputs is byte-identical.
 */

export interface Frame {
  width: number;
  height: number;
  left: number;
  right: number;
  top: number;
  bottom: number;
  x0: number;
  x1: number;
  y0: number;
  y1: number;
}

export function makeFrame(x0: number, x1: number, y0: number, y1: number): Frame {
  return { width: 640, height: 430, left: 62, right: 18, top: 20, bottom: 64, x0, x1, y0, y1 };
}

/** World x to pixel x. */
export function sx(f: Frame, x: number): number {
  return f.left + ((x - f.x0) / (f.x1 - f.x0)) * (f.width - f.left - f.right);
}

/** World y to pixel y (SVG y grows downward). */
export function sy(f: Frame, y: number): number {
  return f.height - f.bottom - ((y - f.y0) / (f.y1 - f.y0)) * (f.height - f.top - f.bottom);
}

export function px(v: number): string {
  // two decimals is below half a pixel; strip the sign off negative zero
  const s = v.toFixed(2);
  return s === "-0.00" ? "0.00" : s;
}

export function esc(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;").replace(/"/g, "&quot;");
}

export function el(tag: string, attrs: [string, string][], body = ""): string {
  const parts = attrs.map(([k, v]) => ` ${k}="${v}"`).join("");
  return body === "" ? `<${tag}${parts}/>` : `<${tag}${parts}>${body}</${tag}>`;
}

export function textEl(x: number, y: number, body: string, attrs: [string, string][] = []): string {
  return el("text", [["x", px(x)], ["y", px(y)], ...attrs], esc(body));
}

/** Round ticks: about n steps of size 1/2/5 x 10^k covering [lo, hi]. */
export function ticks(lo: number, hi: number, n = 5): number[] {
  const span = hi - lo;
  if (!(span > 0)) {
    return [lo];
  }
  const raw = span / n;
  const mag = Math.pow(10, Math.floor(Math.log10(raw)));
  const norm = raw / mag;
  const step = (norm < 1.5 ? 1 : norm < 3.5 ? 2 : norm < 7.5 ? 5 : 10) * mag;
  const out: number[] = [];
  for (let v = Math.ceil(lo / step) * step; v <= hi + step * 1e-9; v += step) {
    out.push(Math.abs(v) < step * 1e-9 ? 0 : v);
  }
  return out;
}

export function tickLabel(v: number): string {
  // shortest faithful decimal of the rounded tick value
  return String(Number(v.toPrecision(10)));
}

export function axes(f: Frame, xlabel: string, ylabel: string): string[] {
  const out: string[] = [];
  const x0 = sx(f, f.x0);
  const x1 = sx(f, f.x1);
  const yBase = sy(f, f.y0);
  const yTop = sy(f, f.y1);
  out.push(el("rect", [
    ["x", px(x0)], ["y", px(yTop)],
    ["width", px(x1 - x0)], ["height", px(yBase - yTop)],
    ["fill", "none"], ["stroke", "#444"], ["stroke-width", "1"],
  ]));
  for (const t of ticks(f.x0, f.x1)) {
    const xPix = sx(f, t);
    out.push(el("line", [
      ["x1", px(xPix)], ["y1", px(yBase)], ["x2", px(xPix)], ["y2", px(yBase + 5)],
      ["stroke", "#444"], ["stroke-width", "1"],
    ]));
    out.push(textEl(xPix, yBase + 18, tickLabel(t), [["text-anchor", "middle"], ["font-size", "11"]]));
  }
  for (const t of ticks(f.y0, f.y1)) {
    const yPix = sy(f, t);
    out.push(el("line", [
      ["x1", px(x0 - 5)], ["y1", px(yPix)], ["x2", px(x0)], ["y2", px(yPix)],
      ["stroke", "#444"], ["stroke-width", "1"],
    ]));
    out.push(textEl(x0 - 8, yPix + 4, tickLabel(t), [["text-anchor", "end"], ["font-size", "11"]]));
  }
  out.push(textEl((x0 + x1) / 2, f.height - f.bottom + 34, xlabel, [["text-anchor", "middle"], ["font-size", "12"]]));
  out.push(el(
    "g",
    [["transform", `translate(14,${px((yBase + yTop) / 2)}) rotate(-90)`]],
    textEl(0, 0, ylabel, [["text-anchor", "middle"], ["font-size", "12"]]),
  ));
  return out;
}

export function captionEl(f: Frame, text: string): string {
  return textEl(f.left, f.height - 8, text, [
    ["font-size", "11"], ["fill", "#333"], ["class", "caption"],
  ]);
}

export function svgDocument(f: Frame, title: string, body: string[]): string {
  const head =
    `<svg xmlns="http://www.w3.org/2000/svg" width="${f.width}" height="${f.height}" ` +
    `viewBox="0 0 ${f.width} ${f.height}" font-family="Helvetica, Arial, sans-serif">`;
  const titleEl = textEl(f.width / 2, 14, title, [["text-anchor", "middle"], ["font-size", "13"]]);
  return [head, titleEl, ...body, "</svg>", ""].join("\n");
}

export const PALETTE = [
  "#4269d0", "#efb118", "#ff725c", "#6cc5b0",
  "#3ca951", "#ff8ab7", "#a463f2", "#97bbf5",
];
