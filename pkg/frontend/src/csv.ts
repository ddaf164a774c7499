// Minimal CSV parsing for chart data injection. The service owns type
// inference; here we only coerce cells to numbers for quantitative columns
// so the renderer scales axes correctly.

import type { AttributeSummary } from './types';

export function parseCsv(text: string): { header: string[]; rows: string[][] } {
  const lines = text.split(/\r?\n/).filter((line) => line.length > 0);
  if (lines.length === 0) {
    return { header: [], rows: [] };
  }
  const parseLine = (line: string): string[] => {
    const cells: string[] = [];
    let current = '';
    let quoted = false;
    for (let i = 0; i < line.length; i++) {
      const ch = line[i];
      if (quoted) {
        if (ch === '"' && line[i + 1] === '"') {
          current += '"';
          i++;
        } else if (ch === '"') {
          quoted = false;
        } else {
          current += ch;
        }
      } else if (ch === '"') {
        quoted = true;
      } else if (ch === ',') {
        cells.push(current);
        current = '';
      } else {
        current += ch;
      }
    }
    cells.push(current);
    return cells;
  };
  const [head, ...rest] = lines;
  return { header: parseLine(head), rows: rest.map(parseLine) };
}

const MISSING = new Set(['', 'na', 'n/a', 'nan', 'null', 'none']);

export function toRecords(
  text: string,
  attributes: AttributeSummary[],
): Record<string, unknown>[] {
  const { header, rows } = parseCsv(text);
  const types = new Map(attributes.map((a) => [a.name, a.type]));
  return rows.map((cells) => {
    const record: Record<string, unknown> = {};
    header.forEach((name, i) => {
      const raw = cells[i] ?? '';
      if (MISSING.has(raw.trim().toLowerCase())) {
        record[name] = null;
      } else if (types.get(name) === 'quantitative') {
        record[name] = Number(raw);
      } else {
        record[name] = raw;
      }
    });
    return record;
  });
}
