#!/usr/bin/env node
import { writeFileSync } from 'fs'

import { MissingColumnError, readCsv } from './csv.js'
import { encodePng } from './png.js'
import { PlotSpec, readManifestCone, render } from './render.js'

const KINDS = ['heatmap', 'ratio-curve', 'series-decay'] as const

function usage(): string {
  return (
    'usage: plotkit <heatmap|ratio-curve|series-decay> --csv <file> ' +
    '[--manifest <file>] --out <png> [--x COL] [--y COL] [--value COL]'
  )
}

export function main(argv: string[]): number {
  const args = [...argv]
  const kind = args.shift()
  if (!kind || !(KINDS as readonly string[]).includes(kind)) {
    console.error(usage())
    return 1
  }
  const opts: Record<string, string> = {}
  while (args.length) {
    const flag = args.shift()!
    if (!flag.startsWith('--') || args.length === 0) {
      console.error(usage())
      return 1
    }
    opts[flag.slice(2)] = args.shift()!
  }
  if (!opts.csv || !opts.out) {
    console.error(usage())
    return 1
  }
  try {
    const table = readCsv(opts.csv)
    const spec: PlotSpec = {
      kind: kind as PlotSpec['kind'],
      xColumn: opts.x,
      yColumn: opts.y,
      valueColumn: opts.value,
    }
    const cone = opts.manifest ? readManifestCone(opts.manifest) : undefined
    const raster = render(table, spec, cone)
    writeFileSync(opts.out, encodePng(raster.width, raster.height, raster.data))
    return 0
  } catch (err) {
    if (err instanceof MissingColumnError) {
      console.error(err.message)
      return 1
    }
    console.error(String(err))
    return 1
  }
}

if (process.argv[1] && process.argv[1].endsWith('cli.js')) {
  process.exit(main(process.argv.slice(2)))
}
