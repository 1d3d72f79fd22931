export type Color = [number, number, number]

// 3x5 bitmap digits for tick labels; fonts are pinned by construction
const GLYPHS: Record<string, number[]> = {
  '0': [0b111, 0b101, 0b101, 0b101, 0b111],
  '1': [0b010, 0b110, 0b010, 0b010, 0b111],
  '2': [0b111, 0b001, 0b111, 0b100, 0b111],
  '3': [0b111, 0b001, 0b111, 0b001, 0b111],
  '4': [0b101, 0b101, 0b111, 0b001, 0b001],
  '5': [0b111, 0b100, 0b111, 0b001, 0b111],
  '6': [0b111, 0b100, 0b111, 0b101, 0b111],
  '7': [0b111, 0b001, 0b010, 0b010, 0b010],
  '8': [0b111, 0b101, 0b111, 0b101, 0b111],
  '9': [0b111, 0b101, 0b111, 0b001, 0b111],
  '-': [0b000, 0b000, 0b111, 0b000, 0b000],
  '.': [0b000, 0b000, 0b000, 0b000, 0b010],
  e: [0b000, 0b111, 0b110, 0b100, 0b111],
  '+': [0b000, 0b010, 0b111, 0b010, 0b000],
}

export class Raster {
  readonly data: Uint8Array

  constructor(
    readonly width: number,
    readonly height: number,
    background: Color = [255, 255, 255],
  ) {
    this.data = new Uint8Array(width * height * 4)
    for (let i = 0; i < width * height; i++) {
      this.data[4 * i] = background[0]
      this.data[4 * i + 1] = background[1]
      this.data[4 * i + 2] = background[2]
      this.data[4 * i + 3] = 255
    }
  }

  set(x: number, y: number, color: Color): void {
    if (x < 0 || y < 0 || x >= this.width || y >= this.height) return
    const i = 4 * (Math.floor(y) * this.width + Math.floor(x))
    this.data[i] = color[0]
    this.data[i + 1] = color[1]
    this.data[i + 2] = color[2]
    this.data[i + 3] = 255
  }

  get(x: number, y: number): Color {
    const i = 4 * (y * this.width + x)
    return [this.data[i], this.data[i + 1], this.data[i + 2]]
  }

  fillRect(x0: number, y0: number, w: number, h: number, color: Color): void {
    for (let y = y0; y < y0 + h; y++) for (let x = x0; x < x0 + w; x++) this.set(x, y, color)
  }

  /** Bresenham segment. */
  line(x0: number, y0: number, x1: number, y1: number, color: Color): void {
    let [xa, ya] = [Math.round(x0), Math.round(y0)]
    const [xb, yb] = [Math.round(x1), Math.round(y1)]
    const dx = Math.abs(xb - xa)
    const dy = -Math.abs(yb - ya)
    const sx = xa < xb ? 1 : -1
    const sy = ya < yb ? 1 : -1
    let err = dx + dy
    for (;;) {
      this.set(xa, ya, color)
      if (xa === xb && ya === yb) break
      const e2 = 2 * err
      if (e2 >= dy) {
        err += dy
        xa += sx
      }
      if (e2 <= dx) {
        err += dx
        ya += sy
      }
    }
  }

  polyline(points: Array<[number, number]>, color: Color): void {
    for (let i = 1; i < points.length; i++) {
      this.line(points[i - 1][0], points[i - 1][1], points[i][0], points[i][1], color)
    }
  }

  text(x: number, y: number, s: string, color: Color): void {
    let cx = x
    for (const ch of s) {
      const glyph = GLYPHS[ch]
      if (glyph) {
        for (let gy = 0; gy < 5; gy++) {
          for (let gx = 0; gx < 3; gx++) {
            if ((glyph[gy] >> (2 - gx)) & 1) this.set(cx + gx, y + gy, color)
          }
        }
      }
      cx += 4
    }
  }
}

/** Short numeric label for ticks (fits the 3x5 font charset). */
export function tickLabel(v: number): string {
  if (v === 0) return '0'
  const a = Math.abs(v)
  if (a >= 0.01 && a < 10000) {
    const s = v.toFixed(a < 1 ? 2 : a < 100 ? 1 : 0)
    return s.replace(/\.0+$/, '')
  }
  return v.toExponential(0).replace('e', 'e')
}
