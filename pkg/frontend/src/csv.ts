/**
 * Minimal CSV reader for the report schemas: comma-separated, first line is
 * the header, no quoting or embedded commas (the producer never emits them).
 */

import { readFileSync } from "node:fs";

export interface CsvTable {
  file: string;
  header: string[];
  rows: string[][];
}

export function parseCsv(text: string, file = "<memory>"): CsvTable {
  const lines = text.split(/\r?\n/);
  while (lines.length > 0 && lines[lines.length - 1] === "") {
    lines.pop();
  }
  if (lines.length === 0) {
    throw new Error(`empty CSV: ${file}`);
  }
  const header = lines[0].split(",");
  const rows: string[][] = [];
  for (let i = 1; i < lines.length; i++) {
    const row = lines[i].split(",");
    if (row.length !== header.length) {
      throw new Error(
        `row ${i + 1} of ${file} has ${row.length} fields, header has ${header.length}`,
      );
    }
    rows.push(row);
  }
  return { file, header, rows };
}

export function readCsv(path: string): CsvTable {
  return parseCsv(readFileSync(path, "utf8"), path);
}

/** Index of a named column; the error names the column per the contract. */
export function columnIndex(table: CsvTable, name: string): number {
  const idx = table.header.indexOf(name);
  if (idx < 0) {
    throw new Error(`missing column "${name}" in ${table.file}`);
  }
  return idx;
}

/** Column as numbers; "nan" parses to NaN, anything unparseable throws. */
export function numberColumn(table: CsvTable, name: string): number[] {
  const idx = columnIndex(table, name);
  return table.rows.map((row, i) => {
    const value = Number(row[idx]);
    if (Number.isNaN(value) && row[idx] !== "nan") {
      throw new Error(`non-numeric value "${row[idx]}" in column "${name}" row ${i + 2} of ${table.file}`);
    }
    return value;
  });
}

export function stringColumn(table: CsvTable, name: string): string[] {
  const idx = columnIndex(table, name);
  return table.rows.map((row) => row[idx]);
}
