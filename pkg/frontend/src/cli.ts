#!/usr/bin/env node
/**
 * Batch figure renderer for a report directory.
 *
 * Usage:
 *   isinglab-plots --report <dir> --out <dir> [--kinds traces,coset_bars,mesh_scatter,histogram]
 *
 * Without --kinds, every figure whose input CSV exists in the report
 * directory is rendered; with --kinds, a missing input is an error.
 */

import { existsSync, mkdirSync, realpathSync, writeFileSync } from "node:fs";
import { join } from "node:path";
import { pathToFileURL } from "node:url";

import { FIGURE_INPUTS, RENDERERS, type FigureKind } from "./figures.js";

const ALL_KINDS = Object.keys(FIGURE_INPUTS) as FigureKind[];

const USAGE =
  "usage: isinglab-plots --report <dir> --out <dir> " +
  `[--kinds ${ALL_KINDS.join(",")}]`;

interface Args {
  report: string;
  out: string;
  kinds: FigureKind[] | null;
}

function parseArgs(argv: string[]): Args {
  let report: string | null = null;
  let out: string | null = null;
  let kinds: FigureKind[] | null = null;
  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i];
    const next = () => {
      i += 1;
      if (i >= argv.length) {
        throw new Error(`${arg} needs a value\n${USAGE}`);
      }
      return argv[i];
    };
    if (arg === "--report") {
      report = next();
    } else if (arg === "--out") {
      out = next();
    } else if (arg === "--kinds") {
      kinds = next().split(",").map((k) => {
        if (!ALL_KINDS.includes(k as FigureKind)) {
          throw new Error(`unknown figure kind "${k}"\n${USAGE}`);
        }
        return k as FigureKind;
      });
    } else {
      throw new Error(`unknown argument "${arg}"\n${USAGE}`);
    }
  }
  if (!report || !out) {
    throw new Error(USAGE);
  }
  return { report, out, kinds };
}

export function main(argv: string[]): number {
  let args: Args;
  try {
    args = parseArgs(argv);
  } catch (err) {
    console.error(String(err instanceof Error ? err.message : err));
    return 2;
  }

  try {
    const explicit = args.kinds !== null;
    const kinds = args.kinds ?? ALL_KINDS;
    const jobs: FigureKind[] = [];
    for (const kind of kinds) {
      const input = join(args.report, FIGURE_INPUTS[kind]);
      if (!existsSync(input)) {
        if (explicit) {
          throw new Error(`input for ${kind} not found: ${input}`);
        }
        console.error(`skip ${kind}: no ${FIGURE_INPUTS[kind]} in ${args.report}`);
        continue;
      }
      jobs.push(kind);
    }
    if (jobs.length === 0) {
      throw new Error(`nothing to render in ${args.report}`);
    }
    mkdirSync(args.out, { recursive: true });
    for (const kind of jobs) {
      const svg = RENDERERS[kind](args.report);
      const path = join(args.out, `${kind}.svg`);
      writeFileSync(path, svg);
      console.log(`wrote ${path}`);
    }
    return 0;
  } catch (err) {
    console.error(String(err instanceof Error ? err.message : err));
    return 1;
  }
}

function invokedDirectly(): boolean {
  if (!process.argv[1]) {
    return false;
  }
  try {
    return import.meta.url === pathToFileURL(realpathSync(process.argv[1])).href;
  } catch {
    return false;
  }
}

if (invokedDirectly()) {
  process.exitCode = main(process.argv.slice(2));
}
