import { cpSync, mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import { describe, expect, it } from "vitest";

import {
  renderCosetBars,
  renderHistogram,
  renderMeshScatter,
  renderTraces,
} from "../src/figures.js";
import { readCsv, numberColumn } from "../src/csv.js";

const HERE = dirname(fileURLToPath(import.meta.url));
const CENTERING = join(HERE, "..", "testdata", "sample_centering");
const MESH = join(HERE, "..", "testdata", "sample_mesh");

function count(svg: string, needle: string): number {
  return svg.split(needle).length - 1;
}

describe("all four kinds render from the committed samples", () => {
  it("traces", () => {
    const svg = renderTraces(CENTERING);
    expect(svg.startsWith("<svg ")).toBe(true);
    expect(count(svg, 'class="trace"')).toBeGreaterThan(0);
  });

  it("coset_bars", () => {
    const svg = renderCosetBars(CENTERING);
    expect(count(svg, 'class="bar"')).toBe(6); // 2 cosets x 3 sample times
  });

  it("mesh_scatter", () => {
    const svg = renderMeshScatter(MESH);
    expect(count(svg, 'class="point"')).toBeGreaterThan(0);
    expect(count(svg, 'class="boundline"')).toBe(1);
  });

  it("histogram", () => {
    const svg = renderHistogram(CENTERING);
    expect(count(svg, 'class="hbar"')).toBeGreaterThan(0);
    expect(count(svg, 'class="mirror"')).toBeGreaterThan(0);
  });
});

describe("config echo caption", () => {
  it("embeds N, beta, T, and seed in every figure", () => {
    const expected = ">N=8 beta=0.6 T=1 seed=20260814<";
    for (const svg of [renderTraces(CENTERING), renderCosetBars(CENTERING), renderHistogram(CENTERING)]) {
      expect(svg).toContain(expected);
    }
    expect(renderMeshScatter(MESH)).toContain(">N=16 beta=0.6 T=3 seed=20260814<");
  });
});

describe("re-rendering is byte-identical", () => {
  it.each([
    ["traces", () => renderTraces(CENTERING)],
    ["coset_bars", () => renderCosetBars(CENTERING)],
    ["mesh_scatter", () => renderMeshScatter(MESH)],
    ["histogram", () => renderHistogram(CENTERING)],
  ])("%s", (_name, render) => {
    expect(render()).toBe(render());
  });
});

describe("traces reference lines", () => {
  it("draws +-m_beta even for a header-only magnetization.csv", () => {
    const dir = mkdtempSync(join(tmpdir(), "isinglab-plots-"));
    writeFileSync(join(dir, "magnetization.csv"), "replica,time,n,M\n");
    cpSync(join(CENTERING, "report.json"), join(dir, "report.json"));
    const svg = renderTraces(dir);
    expect(count(svg, 'class="trace"')).toBe(0);
    // zero line plus the two magnetization guides
    expect(count(svg, 'class="refline"')).toBe(3);
    expect(svg).toContain("+m_beta=0.9736");
  });
});

describe("coset bars from the stripes sample", () => {
  it("shows the exact +1 and -1 bars at t=0", () => {
    const svg = renderCosetBars(CENTERING);
    expect(svg).toContain('data-t="0" data-rep="0,0" data-c="1"');
    expect(svg).toContain('data-t="0" data-rep="1,0" data-c="-1"');
  });

  it("pairs antisymmetric cosets by color", () => {
    const svg = renderCosetBars(CENTERING);
    const fills = [...svg.matchAll(/fill="(#[0-9a-f]{6})" class="bar"/g)].map((m) => m[1]);
    expect(fills.length).toBe(6);
    expect(new Set(fills).size).toBe(1); // one pair, one color
  });
});

describe("mesh scatter confinement", () => {
  it("has zero points above the bound line", () => {
    const table = readCsv(join(MESH, "mesh_audit.csv"));
    const deviation = numberColumn(table, "max_deviation");
    const bound = numberColumn(table, "bound");
    for (let i = 0; i < deviation.length; i++) {
      expect(deviation[i]).toBeLessThanOrEqual(bound[i]);
    }
    expect(count(renderMeshScatter(MESH), 'class="violation"')).toBe(0);
  });

  it("marks violating rows when the CSV claims one", () => {
    const dir = mkdtempSync(join(tmpdir(), "isinglab-plots-"));
    const lines = readFileSync(join(MESH, "mesh_audit.csv"), "utf8").trim().split("\n");
    const tampered = lines[1].split(",");
    tampered[4] = "0.9"; // max_deviation above the bound
    tampered[6] = "1";
    writeFileSync(join(dir, "mesh_audit.csv"), [lines[0], tampered.join(",")].join("\n") + "\n");
    cpSync(join(MESH, "report.json"), join(dir, "report.json"));
    expect(count(renderMeshScatter(dir), 'class="violation"')).toBe(1);
  });
});

describe("missing columns", () => {
  it("errors naming the dropped column", () => {
    const dir = mkdtempSync(join(tmpdir(), "isinglab-plots-"));
    const table = readCsv(join(CENTERING, "coset_means.csv"));
    const keep = table.header.filter((h) => h !== "se");
    const idx = keep.map((h) => table.header.indexOf(h));
    const lines = [keep.join(",")];
    for (const row of table.rows) {
      lines.push(idx.map((i) => row[i]).join(","));
    }
    writeFileSync(join(dir, "coset_means.csv"), lines.join("\n") + "\n");
    cpSync(join(CENTERING, "report.json"), join(dir, "report.json"));
    expect(() => renderCosetBars(dir)).toThrow(/missing column "se"/);
  });
});
