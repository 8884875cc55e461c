/**
 * Just enough sublattice arithmetic to pair coset representatives: sites are
 * in the same coset exactly when the adjugate of the basis matrix sends their
 * difference to 0 mod |det|.
 */

import type { LatticeRecord } from "./report.js";

type Pt = [number, number];

function mod(a: number, m: number): number {
  return ((a % m) + m) % m;
}

function label(record: LatticeRecord, site: Pt): string {
  const [[a, b], [c, d]] = record.basis;
  const det = Math.abs(a * d - b * c);
  // adjugate rows of [[a, b], [c, d]] are [d, -b] and [-c, a]
  const l1 = mod(d * site[0] - b * site[1], det);
  const l2 = mod(-c * site[0] + a * site[1], det);
  return `${l1},${l2}`;
}

/**
 * For each representative, the index of the representative of its coset
 * shifted by the flip vector u. Throws when a shifted coset is missing,
 * which means the CSV and the config echo disagree.
 */
export function pairIndices(record: LatticeRecord, reps: Pt[]): number[] {
  const byLabel = new Map<string, number>();
  reps.forEach((rep, i) => byLabel.set(label(record, rep), i));
  return reps.map((rep, i) => {
    const shifted: Pt = [rep[0] + record.u[0], rep[1] + record.u[1]];
    const partner = byLabel.get(label(record, shifted));
    if (partner === undefined) {
      throw new Error(`coset of representative ${reps[i]} shifted by u has no row`);
    }
    return partner;
  });
}
