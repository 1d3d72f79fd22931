import { readFileSync } from 'fs'

import { CsvTable, column } from './csv.js'
import { AXIS_COLOR, CURVE_COLOR, OVERLAY_COLOR, colormap } from './color.js'
import { Raster, tickLabel } from './raster.js'

export interface PlotSpec {
  kind: 'heatmap' | 'ratio-curve' | 'series-decay'
  xColumn?: string
  yColumn?: string
  valueColumn?: string
  logY?: boolean
  width?: number
  height?: number
}

export interface ConeParams {
  n: number
  delta: number
}

export const MARGIN = { left: 50, right: 12, top: 12, bottom: 26 }

export function readManifestCone(path: string): ConeParams {
  const manifest = JSON.parse(readFileSync(path, 'utf8'))
  const cfg = manifest.config ?? manifest
  if (typeof cfg.n !== 'number' || typeof cfg.delta !== 'number') {
    throw new Error('manifest lacks numeric n and delta')
  }
  return { n: cfg.n, delta: cfg.delta }
}

/** Light-cone radius <t>^(1 + (1 + 2 delta)/n). */
export function coneRadius(t: number, cone: ConeParams): number {
  const bracket = Math.sqrt(1 + t * t)
  return Math.pow(bracket, 1 + (1 + 2 * cone.delta) / cone.n)
}

interface Frame {
  raster: Raster
  x0: number
  y0: number
  plotW: number
  plotH: number
  xMin: number
  xMax: number
  yMin: number
  yMax: number
}

function makeFrame(
  spec: PlotSpec,
  xMin: number,
  xMax: number,
  yMin: number,
  yMax: number,
): Frame {
  const width = spec.width ?? 640
  const height = spec.height ?? 480
  const raster = new Raster(width, height)
  const x0 = MARGIN.left
  const y0 = MARGIN.top
  const plotW = width - MARGIN.left - MARGIN.right
  const plotH = height - MARGIN.top - MARGIN.bottom
  if (xMax <= xMin) xMax = xMin + 1
  if (yMax <= yMin) yMax = yMin + 1
  return { raster, x0, y0, plotW, plotH, xMin, xMax, yMin, yMax }
}

function toPixelX(f: Frame, x: number): number {
  return f.x0 + ((x - f.xMin) / (f.xMax - f.xMin)) * (f.plotW - 1)
}

function toPixelY(f: Frame, y: number): number {
  return f.y0 + f.plotH - 1 - ((y - f.yMin) / (f.yMax - f.yMin)) * (f.plotH - 1)
}

function drawAxes(f: Frame): void {
  const { raster, x0, y0, plotW, plotH } = f
  raster.line(x0, y0 + plotH, x0 + plotW, y0 + plotH, AXIS_COLOR)
  raster.line(x0, y0, x0, y0 + plotH, AXIS_COLOR)
  for (let i = 0; i <= 4; i++) {
    const xv = f.xMin + ((f.xMax - f.xMin) * i) / 4
    const px = Math.round(toPixelX(f, xv))
    raster.line(px, y0 + plotH, px, y0 + plotH + 3, AXIS_COLOR)
    raster.text(px - 6, y0 + plotH + 6, tickLabel(xv), AXIS_COLOR)
    const yv = f.yMin + ((f.yMax - f.yMin) * i) / 4
    const py = Math.round(toPixelY(f, yv))
    raster.line(x0 - 3, py, x0, py, AXIS_COLOR)
    raster.text(2, py - 2, tickLabel(yv), AXIS_COLOR)
  }
}

function uniqueSorted(values: number[]): number[] {
  return [...new Set(values)].sort((a, b) => a - b)
}

/** |value| heatmap over (t, distance) with the light-cone overlay. */
export function renderHeatmap(table: CsvTable, cone: ConeParams, spec: PlotSpec): Raster {
  const xName = spec.xColumn ?? 't'
  const yName = spec.yColumn ?? 'distance'
  const vName = spec.valueColumn ?? 'lhs_overlap'
  const xs = column(table, xName)
  const ys = column(table, yName)
  const vs = column(table, vName)
  const xBins = uniqueSorted(xs)
  const yBins = uniqueSorted(ys)
  const f = makeFrame(
    spec,
    xBins[0],
    xBins[xBins.length - 1],
    yBins[0],
    yBins[yBins.length - 1],
  )
  // log color scale over positive values, floored 12 decades under the peak
  const positive = vs.filter((v) => v > 0)
  const peak = positive.length ? Math.max(...positive) : 1
  const floor = peak * 1e-12
  const logPeak = Math.log10(peak)
  const logFloor = Math.log10(floor)
  const cellW = f.plotW / xBins.length
  const cellH = f.plotH / yBins.length
  for (let i = 0; i < vs.length; i++) {
    const xi = xBins.indexOf(xs[i])
    const yi = yBins.indexOf(ys[i])
    const v = Math.max(vs[i], floor)
    const u = (Math.log10(v) - logFloor) / (logPeak - logFloor)
    const px = Math.round(f.x0 + xi * cellW)
    const py = Math.round(f.y0 + f.plotH - (yi + 1) * cellH)
    f.raster.fillRect(px, py, Math.ceil(cellW), Math.ceil(cellH), colormap(u))
  }
  drawAxes(f)
  // cone overlay: distance = <t>^(1+(1+2 delta)/n), sampled densely in t
  const overlay: Array<[number, number]> = []
  for (let i = 0; i <= 200; i++) {
    const t = f.xMin + ((f.xMax - f.xMin) * i) / 200
    const d = coneRadius(t, cone)
    if (d >= f.yMin && d <= f.yMax) {
      overlay.push([toPixelX(f, t), toPixelY(f, d)])
    }
  }
  f.raster.polyline(overlay, OVERLAY_COLOR)
  return f.raster
}

/** Scatter-polyline of one column against another (ratio curves). */
export function renderRatioCurve(table: CsvTable, spec: PlotSpec): Raster {
  const xName = spec.xColumn ?? 't'
  const yName = spec.yColumn ?? 'ratio'
  const xs = column(table, xName)
  const ys = column(table, yName)
  const order = xs.map((_, i) => i).sort((a, b) => xs[a] - xs[b])
  const sortedX = order.map((i) => xs[i])
  const sortedY = order.map((i) => ys[i])
  const f = makeFrame(
    spec,
    Math.min(...sortedX),
    Math.max(...sortedX),
    Math.min(...sortedY, 0),
    Math.max(...sortedY, 0),
  )
  drawAxes(f)
  f.raster.polyline(
    sortedX.map((x, i) => [toPixelX(f, x), toPixelY(f, sortedY[i])] as [number, number]),
    CURVE_COLOR,
  )
  return f.raster
}

/** Series terms against their order, log10 vertical scale. */
export function renderSeriesDecay(table: CsvTable, spec: PlotSpec): Raster {
  const xName = spec.xColumn ?? 'k'
  const yName = spec.yColumn ?? 'S_k'
  const xs = column(table, xName)
  const raw = column(table, yName)
  const positive = raw.filter((v) => v > 0)
  const peak = positive.length ? Math.max(...positive) : 1
  const floorVal = peak * 1e-30
  const ys = raw.map((v) => Math.log10(Math.max(v, floorVal)))
  const f = makeFrame(spec, Math.min(...xs), Math.max(...xs), Math.min(...ys), Math.max(...ys))
  drawAxes(f)
  f.raster.polyline(
    xs.map((x, i) => [toPixelX(f, x), toPixelY(f, ys[i])] as [number, number]),
    CURVE_COLOR,
  )
  return f.raster
}

export function render(table: CsvTable, spec: PlotSpec, cone?: ConeParams): Raster {
  if (spec.kind === 'heatmap') {
    if (!cone) throw new Error('heatmap needs the run manifest for the cone overlay')
    return renderHeatmap(table, cone, spec)
  }
  if (spec.kind === 'ratio-curve') return renderRatioCurve(table, spec)
  if (spec.kind === 'series-decay') return renderSeriesDecay(table, spec)
  throw new Error(`unknown plot kind ${(spec as PlotSpec).kind}`)
}

/** Pixel positions of the overlay for a frame identical to renderHeatmap's. */
export function overlayPixels(
  table: CsvTable,
  cone: ConeParams,
  spec: PlotSpec,
): Array<[number, number]> {
  const xs = column(table, spec.xColumn ?? 't')
  const ys = column(table, spec.yColumn ?? 'distance')
  const xBins = uniqueSorted(xs)
  const yBins = uniqueSorted(ys)
  const f = makeFrame(
    spec,
    xBins[0],
    xBins[xBins.length - 1],
    yBins[0],
    yBins[yBins.length - 1],
  )
  const out: Array<[number, number]> = []
  for (let i = 0; i <= 200; i++) {
    const t = f.xMin + ((f.xMax - f.xMin) * i) / 200
    const d = coneRadius(t, cone)
    if (d >= f.yMin && d <= f.yMax) {
      out.push([Math.round(toPixelX(f, t)), Math.round(toPixelY(f, d))])
    }
  }
  return out
}
