/**
 * Report metadata: the config echo that every figure embeds in its caption,
 * and the antisymmetric-initial record used to pair cosets.
 */

import { readFileSync } from "node:fs";
import { join } from "node:path";

export interface LatticeRecord {
  /** Rows of the 2x2 basis matrix whose columns generate the sublattice. */
  basis: [[number, number], [number, number]];
  u: [number, number];
}

export interface ConfigEcho {
  experiment: string;
  side: number;
  beta: number;
  horizon: number;
  seed: number;
  record: LatticeRecord | null;
}

export function loadEcho(reportDir: string): ConfigEcho {
  const path = join(reportDir, "report.json");
  const report = JSON.parse(readFileSync(path, "utf8"));
  const config = report.config;
  if (!config) {
    throw new Error(`missing "config" in ${path}`);
  }
  for (const key of ["experiment", "side", "beta", "horizon", "master_seed"]) {
    if (!(key in config)) {
      throw new Error(`missing config field "${key}" in ${path}`);
    }
  }
  const record =
    config.initial && config.initial.record
      ? {
          basis: config.initial.record.basis as LatticeRecord["basis"],
          u: config.initial.record.u as LatticeRecord["u"],
        }
      : null;
  return {
    experiment: config.experiment,
    side: config.side,
    beta: config.beta,
    horizon: config.horizon,
    seed: config.master_seed,
    record,
  };
}

export function caption(echo: ConfigEcho): string {
  return `N=${echo.side} beta=${echo.beta} T=${echo.horizon} seed=${echo.seed}`;
}
