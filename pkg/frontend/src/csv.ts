import { readFileSync } from 'fs'

export interface CsvTable {
  header: string[]
  rows: string[][]
}

/** Parse a harness CSV: comma separated, leading '#' lines are comments. */
export function parseCsv(text: string): CsvTable {
  const lines = text
    .split('\n')
    .map((l) => l.trimEnd())
    .filter((l) => l.length > 0 && !l.startsWith('#'))
  if (lines.length === 0) throw new Error('empty CSV')
  const header = lines[0].split(',')
  const rows = lines.slice(1).map((l) => l.split(','))
  return { header, rows }
}

export function readCsv(path: string): CsvTable {
  return parseCsv(readFileSync(path, 'utf8'))
}

export class MissingColumnError extends Error {
  constructor(
    public readonly column: string,
    public readonly header: string[],
  ) {
    super(`column "${column}" not found; header has: ${header.join(', ')}`)
  }
}

/** Numeric values of one column; throws MissingColumnError when absent. */
export function column(table: CsvTable, name: string): number[] {
  const idx = table.header.indexOf(name)
  if (idx < 0) throw new MissingColumnError(name, table.header)
  return table.rows.map((r) => Number(r[idx]))
}
