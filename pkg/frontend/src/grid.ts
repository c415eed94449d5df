// TDM1 binary grid decoder: 16-byte header (magic, u32 width/height/flags,
// little-endian), f32 densities top row first, then u16 dominant ordinals
// (0xffff = none).

export const NONE_ORDINAL = 0xffff;

export interface GridData {
  width: number;
  height: number;
  flags: number;
  density: Float32Array;
  dominant: Uint16Array;
}

export function decodeGrid(buf: ArrayBuffer): GridData {
  const view = new DataView(buf);
  if (buf.byteLength < 16 || view.getUint32(0, false) !== 0x54444d31) {
    throw new Error("not a TDM1 grid");
  }
  const width = view.getUint32(4, true);
  const height = view.getUint32(8, true);
  const flags = view.getUint32(12, true);
  const n = width * height;
  if (buf.byteLength !== 16 + n * 4 + n * 2) {
    throw new Error(`truncated grid: ${buf.byteLength} bytes for ${width}x${height}`);
  }
  const density = new Float32Array(n);
  const dominant = new Uint16Array(n);
  for (let i = 0; i < n; i++) density[i] = view.getFloat32(16 + i * 4, true);
  for (let i = 0; i < n; i++) dominant[i] = view.getUint16(16 + n * 4 + i * 2, true);
  return { width, height, flags, density, dominant };
}

export function dominantOrdinals(grid: GridData): Set<number> {
  const out = new Set<number>();
  for (const d of grid.dominant) {
    if (d !== NONE_ORDINAL) out.add(d);
  }
  return out;
}

export function maxDensity(grid: GridData): number {
  let m = 0;
  for (const v of grid.density) if (v > m) m = v;
  return m;
}
