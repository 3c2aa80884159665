/** Strict CSV reading for the pipeline's artifact files. */

export interface CsvTable {
  header: string[];
  rows: string[][];
}

/** RFC-4180-ish parser: quoted fields, embedded commas/newlines, CRLF. */
export function parseCsv(text: string): CsvTable {
  const records: string[][] = [];
  let field = "";
  let record: string[] = [];
  let inQuotes = false;
  let i = 0;
  const push = () => {
    record.push(field);
    field = "";
  };
  const endRecord = () => {
    push();
    records.push(record);
    record = [];
  };
  while (i < text.length) {
    const ch = text[i];
    if (inQuotes) {
      if (ch === '"') {
        if (text[i + 1] === '"') {
          field += '"';
          i += 2;
          continue;
        }
        inQuotes = false;
        i += 1;
        continue;
      }
      field += ch;
      i += 1;
      continue;
    }
    if (ch === '"') {
      inQuotes = true;
      i += 1;
    } else if (ch === ",") {
      push();
      i += 1;
    } else if (ch === "\n") {
      endRecord();
      i += 1;
    } else if (ch === "\r") {
      if (text[i + 1] === "\n") i += 1;
      endRecord();
      i += 1;
    } else {
      field += ch;
      i += 1;
    }
  }
  if (field.length > 0 || record.length > 0) endRecord();
  if (records.length === 0) return { header: [], rows: [] };
  return { header: records[0], rows: records.slice(1) };
}

export type Row = Record<string, string>;

/** Header-keyed records; fails with a column-level diagnostic. */
export function toRecords(table: CsvTable, required: string[], source: string): Row[] {
  const missing = required.filter((c) => !table.header.includes(c));
  if (missing.length > 0) {
    throw new Error(
      `${source}: missing required column(s): ${missing.join(", ")} ` +
        `(found: ${table.header.join(", ") || "none"})`,
    );
  }
  if (table.rows.length === 0) {
    throw new Error(`${source}: no data (header only or empty file)`);
  }
  return table.rows.map((r) => {
    const rec: Row = {};
    table.header.forEach((name, j) => {
      rec[name] = r[j] ?? "";
    });
    return rec;
  });
}

export function num(row: Row, column: string, source: string): number {
  const raw = row[column];
  const value = Number(raw);
  if (raw === undefined || raw === "" || Number.isNaN(value)) {
    throw new Error(`${source}: column ${column} has non-numeric value ${raw ?? "<missing>"}`);
  }
  return value;
}
