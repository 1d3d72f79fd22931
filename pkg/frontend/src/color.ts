import type { Color } from './raster.js'

// fixed blue -> teal -> yellow map (256 entries); never emits the overlay red
const STOPS: Array<[number, Color]> = [
  [0.0, [13, 8, 135]],
  [0.35, [30, 110, 161]],
  [0.65, [53, 183, 121]],
  [1.0, [253, 231, 37]],
]

export const COLORMAP: Color[] = (() => {
  const table: Color[] = []
  for (let i = 0; i < 256; i++) {
    const v = i / 255
    let k = 0
    while (k < STOPS.length - 2 && v > STOPS[k + 1][0]) k++
    const [v0, c0] = STOPS[k]
    const [v1, c1] = STOPS[k + 1]
    const u = Math.min(1, Math.max(0, (v - v0) / (v1 - v0)))
    table.push([
      Math.round(c0[0] + u * (c1[0] - c0[0])),
      Math.round(c0[1] + u * (c1[1] - c0[1])),
      Math.round(c0[2] + u * (c1[2] - c0[2])),
    ])
  }
  return table
})()

export const OVERLAY_COLOR: Color = [255, 0, 0]
export const AXIS_COLOR: Color = [40, 40, 40]
export const CURVE_COLOR: Color = [20, 90, 200]

export function colormap(v: number): Color {
  const clamped = Math.min(1, Math.max(0, v))
  return COLORMAP[Math.round(clamped * 255)]
}
