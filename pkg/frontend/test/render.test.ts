import assert from 'node:assert/strict'
import { createHash } from 'node:crypto'
import { test } from 'node:test'
import { dirname, join } from 'node:path'
import { fileURLToPath } from 'node:url'

import { parseCsv, readCsv } from '../src/csv.js'
import { OVERLAY_COLOR } from '../src/color.js'
import { encodePng } from '../src/png.js'
import {
  overlayPixels,
  readManifestCone,
  render,
  renderHeatmap,
  renderRatioCurve,
} from '../src/render.js'

const GOLDEN = join(dirname(fileURLToPath(import.meta.url)), '..', '..', 'golden')

function sha256(buf: Buffer): string {
  return createHash('sha256').update(buf).digest('hex')
}

test('heatmap renders deterministically from the golden scan', () => {
  const table = readCsv(join(GOLDEN, 'onebody', 'onebody_scan.csv'))
  const cone = readManifestCone(join(GOLDEN, 'onebody', 'run_manifest.json'))
  const a = renderHeatmap(table, cone, { kind: 'heatmap' })
  const b = renderHeatmap(table, cone, { kind: 'heatmap' })
  const pngA = encodePng(a.width, a.height, a.data)
  const pngB = encodePng(b.width, b.height, b.data)
  assert.ok(pngA.length > 1000)
  assert.equal(sha256(pngA), sha256(pngB))
})

test('heatmap cone overlay matches the recomputed curve to pixel tolerance', () => {
  const table = readCsv(join(GOLDEN, 'onebody', 'onebody_scan.csv'))
  const cone = readManifestCone(join(GOLDEN, 'onebody', 'run_manifest.json'))
  const raster = renderHeatmap(table, cone, { kind: 'heatmap' })
  const expected = overlayPixels(table, cone, { kind: 'heatmap' })
  assert.ok(expected.length > 10)
  // every recomputed overlay point has a red pixel within 1.5 px
  let worst = 0
  for (const [px, py] of expected) {
    let best = Infinity
    for (let dy = -2; dy <= 2; dy++) {
      for (let dx = -2; dx <= 2; dx++) {
        const x = px + dx
        const y = py + dy
        if (x < 0 || y < 0 || x >= raster.width || y >= raster.height) continue
        const [r, g, b] = raster.get(x, y)
        if (r === OVERLAY_COLOR[0] && g === OVERLAY_COLOR[1] && b === OVERLAY_COLOR[2]) {
          best = Math.min(best, Math.hypot(dx, dy))
        }
      }
    }
    worst = Math.max(worst, best)
  }
  assert.ok(worst <= 1.5, `overlay deviates by ${worst} px`)
})

test('ratio curve over an all-zero column is a flat line at zero', () => {
  const rows = ['t,ratio']
  for (let i = 0; i < 10; i++) rows.push(`${i * 0.5},0.0`)
  const table = parseCsv(rows.join('\n'))
  const raster = renderRatioCurve(table, { kind: 'ratio-curve' })
  // collect curve pixels (the blue polyline color)
  const ys = new Set<number>()
  for (let y = 0; y < raster.height; y++) {
    for (let x = 0; x < raster.width; x++) {
      const [r, g, b] = raster.get(x, y)
      if (r === 20 && g === 90 && b === 200) ys.add(y)
    }
  }
  assert.equal(ys.size, 1)
})

test('series decay renders from the golden series terms', () => {
  const table = readCsv(join(GOLDEN, 'constants', 'series_terms.csv'))
  const raster = render(table, { kind: 'series-decay' })
  const png = encodePng(raster.width, raster.height, raster.data)
  assert.ok(png.length > 500)
})

test('manybody ratio curve renders against distance', () => {
  const table = readCsv(join(GOLDEN, 'manybody', 'manybody_scan.csv'))
  const raster = render(table, { kind: 'ratio-curve', xColumn: 'dist', yColumn: 'F_t' })
  const png = encodePng(raster.width, raster.height, raster.data)
  assert.ok(png.length > 500)
})
