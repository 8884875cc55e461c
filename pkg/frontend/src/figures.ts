/**
 * The four figure kinds, each a pure function from a report directory to an
 * SVG string: magnetization traces, coset-mean bars, mesh-audit scatter, and
 * the sign-mirrored magnetization histogram.
 */

import { join } from "node:path";

import { readCsv, numberColumn, stringColumn, type CsvTable } from "./csv.js";
import { loadEcho, caption, type ConfigEcho } from "./report.js";
import { onsagerMagnetization } from "./onsager.js";
import { pairIndices } from "./cosets.js";
import {
  PALETTE,
  axes,
  captionEl,
  el,
  makeFrame,
  px,
  svgDocument,
  sx,
  sy,
  textEl,
  type Frame,
} from "./svg.js";

export type FigureKind = "traces" | "coset_bars" | "mesh_scatter" | "histogram";

export const FIGURE_INPUTS: Record<FigureKind, string> = {
  traces: "magnetization.csv",
  coset_bars: "coset_means.csv",
  mesh_scatter: "mesh_audit.csv",
  histogram: "magnetization.csv",
};

function loadInput(reportDir: string, kind: FigureKind): { table: CsvTable; echo: ConfigEcho } {
  const table = readCsv(join(reportDir, FIGURE_INPUTS[kind]));
  return { table, echo: loadEcho(reportDir) };
}

function refLine(f: Frame, y: number, color: string, label: string): string[] {
  const yPix = sy(f, y);
  return [
    el("line", [
      ["x1", px(sx(f, f.x0))], ["y1", px(yPix)],
      ["x2", px(sx(f, f.x1))], ["y2", px(yPix)],
      ["stroke", color], ["stroke-width", "1"], ["stroke-dasharray", "6 4"],
      ["class", "refline"],
    ]),
    textEl(sx(f, f.x1) - 4, yPix - 4, label, [
      ["text-anchor", "end"], ["font-size", "10"], ["fill", color],
    ]),
  ];
}

/** Full-torus magnetization trace per replica, with +-m_beta guide lines. */
export function renderTraces(reportDir: string): string {
  const { table, echo } = loadInput(reportDir, "traces");
  const replica = stringColumn(table, "replica");
  const time = numberColumn(table, "time");
  const block = stringColumn(table, "n");
  const m = numberColumn(table, "M");

  const f = makeFrame(0, echo.horizon, -1.05, 1.05);
  const body = axes(f, "time", "block magnetization M");

  const mBeta = onsagerMagnetization(echo.beta);
  body.push(...refLine(f, 0, "#bbb", ""));
  if (mBeta > 0) {
    body.push(...refLine(f, mBeta, "#c22", `+m_beta=${mBeta.toFixed(4)}`));
    body.push(...refLine(f, -mBeta, "#c22", `-m_beta=${mBeta.toFixed(4)}`));
  }

  // one step path per replica ("full" rows only); rows are time-sorted in
  // the file, replicas ordered by first appearance
  const order: string[] = [];
  const groups = new Map<string, [number, number][]>();
  for (let i = 0; i < table.rows.length; i++) {
    if (block[i] !== "full") {
      continue;
    }
    let group = groups.get(replica[i]);
    if (!group) {
      group = [];
      groups.set(replica[i], group);
      order.push(replica[i]);
    }
    group.push([time[i], m[i]]);
  }
  order.forEach((id, gi) => {
    const pts = groups.get(id)!;
    if (pts.length < 2) {
      return; // a lone sampled point has no extent to trace
    }
    const coords: string[] = [`${px(sx(f, pts[0][0]))},${px(sy(f, pts[0][1]))}`];
    for (let k = 1; k < pts.length; k++) {
      // right-continuous step: hold the previous value until the next time
      coords.push(`${px(sx(f, pts[k][0]))},${px(sy(f, pts[k - 1][1]))}`);
      coords.push(`${px(sx(f, pts[k][0]))},${px(sy(f, pts[k][1]))}`);
    }
    body.push(el("polyline", [
      ["points", coords.join(" ")],
      ["fill", "none"],
      ["stroke", PALETTE[gi % PALETTE.length]],
      ["stroke-width", "1.2"],
      ["class", "trace"],
      ["data-replica", id],
    ]));
  });

  body.push(captionEl(f, caption(echo)));
  return svgDocument(f, "magnetization traces", body);
}

/** Coset means with replica-level error bars, colored by antisymmetric pair. */
export function renderCosetBars(reportDir: string): string {
  const { table, echo } = loadInput(reportDir, "coset_bars");
  const t = numberColumn(table, "t");
  const repX = numberColumn(table, "coset_rep_x");
  const repY = numberColumn(table, "coset_rep_y");
  const cHat = numberColumn(table, "c_hat");
  const se = numberColumn(table, "se");

  if (!echo.record) {
    throw new Error("coset pairing needs the antisymmetric initial record in report.json");
  }
  const times = [...new Set(t)].sort((a, b) => a - b);
  const firstTime = times[0];
  const reps: [number, number][] = [];
  for (let i = 0; i < table.rows.length; i++) {
    if (t[i] === firstTime) {
      reps.push([repX[i], repY[i]]);
    }
  }
  const partners = pairIndices(echo.record, reps);
  const repKey = (x: number, y: number) => `${x},${y}`;
  const repIndex = new Map(reps.map((rep, i) => [repKey(rep[0], rep[1]), i]));
  // pair id = index of the lexicographically first member
  const pairId = reps.map((_, i) => Math.min(i, partners[i]));

  const slots = times.length * reps.length + times.length - 1; // one gap between groups
  const f = makeFrame(0, slots, -1.1, 1.1);
  const body = axes(f, "sample time groups", "coset mean");
  body.push(...refLine(f, 0, "#bbb", ""));

  const slotWidth = sx(f, 1) - sx(f, 0);
  for (let i = 0; i < table.rows.length; i++) {
    const timePos = times.indexOf(t[i]);
    const which = repIndex.get(repKey(repX[i], repY[i]));
    if (which === undefined) {
      throw new Error(`coset representative (${repX[i]},${repY[i]}) missing at t=${firstTime}`);
    }
    const slot = timePos * (reps.length + 1) + which;
    const xLeft = sx(f, slot) + slotWidth * 0.12;
    const width = slotWidth * 0.76;
    const y0 = sy(f, 0);
    const yV = sy(f, cHat[i]);
    body.push(el("rect", [
      ["x", px(xLeft)],
      ["y", px(Math.min(y0, yV))],
      ["width", px(width)],
      ["height", px(Math.abs(y0 - yV))],
      ["fill", PALETTE[pairId[which] % PALETTE.length]],
      ["class", "bar"],
      ["data-t", String(t[i])],
      ["data-rep", `${repX[i]},${repY[i]}`],
      ["data-c", String(cHat[i])],
    ]));
    if (Number.isFinite(se[i]) && se[i] > 0) {
      const xMid = xLeft + width / 2;
      body.push(el("line", [
        ["x1", px(xMid)], ["y1", px(sy(f, cHat[i] - se[i]))],
        ["x2", px(xMid)], ["y2", px(sy(f, cHat[i] + se[i]))],
        ["stroke", "#222"], ["stroke-width", "1.5"], ["class", "errbar"],
      ]));
    }
    if (which === 0) {
      body.push(textEl(sx(f, slot + reps.length / 2), sy(f, f.y0) + 32, `t=${t[i]}`, [
        ["text-anchor", "middle"], ["font-size", "11"],
      ]));
    }
  }

  body.push(captionEl(f, caption(echo)));
  return svgDocument(f, "coset means with antisymmetric pairing", body);
}

/** max |dM| per interval against the 2x ring-fraction bound line. */
export function renderMeshScatter(reportDir: string): string {
  const { table, echo } = loadInput(reportDir, "mesh_scatter");
  const delta = numberColumn(table, "delta");
  const deviation = numberColumn(table, "max_deviation");
  const bound = numberColumn(table, "bound");
  const violated = numberColumn(table, "violated");

  const top = Math.max(...bound, 1e-9) * 1.06;
  const f = makeFrame(0, top, 0, top);
  const body = axes(f, "bound = 2 x ring fraction", "max |dM| over the interval");

  // identity line: points at or below it satisfy the confinement inequality
  body.push(el("line", [
    ["x1", px(sx(f, 0))], ["y1", px(sy(f, 0))],
    ["x2", px(sx(f, top))], ["y2", px(sy(f, top))],
    ["stroke", "#c22"], ["stroke-width", "1"], ["class", "boundline"],
  ]));
  body.push(textEl(sx(f, top * 0.94), sy(f, top * 0.94) - 6, "y = x", [
    ["text-anchor", "end"], ["font-size", "10"], ["fill", "#c22"],
  ]));

  const deltas = [...new Set(delta)].sort((a, b) => a - b);
  deltas.forEach((d, i) => {
    // expected bound scale per delta: 2 * (1 - exp(-delta))
    const expected = 2 * (1 - Math.exp(-d));
    if (expected <= top) {
      const xPix = sx(f, expected);
      body.push(el("line", [
        ["x1", px(xPix)], ["y1", px(sy(f, f.y0))],
        ["x2", px(xPix)], ["y2", px(sy(f, f.y1))],
        ["stroke", PALETTE[i % PALETTE.length]], ["stroke-width", "1"],
        ["stroke-dasharray", "3 3"], ["class", "meanline"],
      ]));
      body.push(textEl(xPix, sy(f, f.y1) + 12, `2(1-e^-${d})`, [
        ["text-anchor", "middle"], ["font-size", "9"],
        ["fill", PALETTE[i % PALETTE.length]],
      ]));
    }
    body.push(el("circle", [
      ["cx", px(f.left + 10)], ["cy", px(f.top + 12 + i * 14)], ["r", "4"],
      ["fill", PALETTE[i % PALETTE.length]],
    ]));
    body.push(textEl(f.left + 18, f.top + 16 + i * 14, `delta=${d}`, [["font-size", "10"]]));
  });

  for (let i = 0; i < table.rows.length; i++) {
    const color = PALETTE[deltas.indexOf(delta[i]) % PALETTE.length];
    if (violated[i] !== 0) {
      const xPix = sx(f, bound[i]);
      const yPix = sy(f, deviation[i]);
      body.push(el("g", [["class", "violation"]],
        el("path", [
          ["d", `M${px(xPix - 4)} ${px(yPix - 4)}L${px(xPix + 4)} ${px(yPix + 4)}` +
                `M${px(xPix - 4)} ${px(yPix + 4)}L${px(xPix + 4)} ${px(yPix - 4)}`],
          ["stroke", "#c22"], ["stroke-width", "2"],
        ])));
    } else {
      body.push(el("circle", [
        ["cx", px(sx(f, bound[i]))],
        ["cy", px(sy(f, deviation[i]))],
        ["r", "3"],
        ["fill", color], ["fill-opacity", "0.6"], ["class", "point"],
      ]));
    }
  }

  body.push(captionEl(f, caption(echo)));
  return svgDocument(f, "mesh audit: deviation vs bound", body);
}

/** Histogram of sampled M values with the sign-mirrored outline overlay. */
export function renderHistogram(reportDir: string): string {
  const { table, echo } = loadInput(reportDir, "histogram");
  const time = numberColumn(table, "time");
  const block = stringColumn(table, "n");
  const m = numberColumn(table, "M");

  const values: number[] = [];
  let tMax = -Infinity;
  for (let i = 0; i < table.rows.length; i++) {
    if (block[i] === "full" && time[i] > tMax) {
      tMax = time[i];
    }
  }
  for (let i = 0; i < table.rows.length; i++) {
    if (block[i] === "full" && time[i] === tMax) {
      values.push(m[i]);
    }
  }

  const nBins = 20;
  const counts = new Array<number>(nBins).fill(0);
  const mirrored = new Array<number>(nBins).fill(0);
  const binOf = (v: number) => Math.max(0, Math.min(nBins - 1, Math.floor(((v + 1) / 2) * nBins)));
  for (const v of values) {
    counts[binOf(v)] += 1;
    mirrored[binOf(-v)] += 1;
  }
  const peak = Math.max(1, ...counts, ...mirrored);

  const f = makeFrame(-1, 1, 0, peak * 1.15);
  const body = axes(f, `full-torus M at t=${tMax === -Infinity ? "?" : tMax}`, "replica count");

  for (let b = 0; b < nBins; b++) {
    const lo = -1 + (2 * b) / nBins;
    const hi = -1 + (2 * (b + 1)) / nBins;
    if (counts[b] > 0) {
      body.push(el("rect", [
        ["x", px(sx(f, lo))],
        ["y", px(sy(f, counts[b]))],
        ["width", px(sx(f, hi) - sx(f, lo))],
        ["height", px(sy(f, 0) - sy(f, counts[b]))],
        ["fill", PALETTE[0]], ["fill-opacity", "0.55"], ["class", "hbar"],
        ["data-count", String(counts[b])],
      ]));
    }
    if (mirrored[b] > 0) {
      body.push(el("rect", [
        ["x", px(sx(f, lo))],
        ["y", px(sy(f, mirrored[b]))],
        ["width", px(sx(f, hi) - sx(f, lo))],
        ["height", px(sy(f, 0) - sy(f, mirrored[b]))],
        ["fill", "none"], ["stroke", "#c22"], ["stroke-width", "1.4"],
        ["class", "mirror"], ["data-count", String(mirrored[b])],
      ]));
    }
  }
  body.push(textEl(f.left + 10, f.top + 12, "filled: M   outline: -M (sign mirror)", [
    ["font-size", "10"],
  ]));

  body.push(captionEl(f, caption(echo)));
  return svgDocument(f, "magnetization sample histogram", body);
}

export const RENDERERS: Record<FigureKind, (reportDir: string) => string> = {
  traces: renderTraces,
  coset_bars: renderCosetBars,
  mesh_scatter: renderMeshScatter,
  histogram: renderHistogram,
};
