/**
 * Hex math over even-q offset coordinates (flat-topped board).
 *
 * Must agree exactly with the server: q = col, r = row - (col + (col mod 2)) / 2
 * with floor division, distance via cube coordinates. Euclidean or Manhattan
 * distances are wrong on this board and the server rejects moves planned with
 * them.
 */

export interface OffsetCoord {
  col: number;
  row: number;
}

function mod2(n: number): number {
  return ((n % 2) + 2) % 2;
}

export function offsetToAxial(c: OffsetCoord): { q: number; r: number } {
  return { q: c.col, r: c.row - Math.floor((c.col + mod2(c.col)) / 2) };
}

export function axialToOffset(q: number, r: number): OffsetCoord {
  return { col: q, row: r + Math.floor((q + mod2(q)) / 2) };
}

export function hexDistance(a: OffsetCoord, b: OffsetCoord): number {
  const aa = offsetToAxial(a);
  const bb = offsetToAxial(b);
  const dq = aa.q - bb.q;
  const dr = aa.r - bb.r;
  const ds = -dq - dr;
  return Math.max(Math.abs(dq), Math.abs(dr), Math.abs(ds));
}

/** Lexicographic comparison of numeric tuples; used for deterministic ties. */
export function tupleLess(a: number[], b: number[]): boolean {
  const n = Math.min(a.length, b.length);
  for (let i = 0; i < n; i++) {
    if (a[i] !== b[i]) return a[i] < b[i];
  }
  return a.length < b.length;
}
