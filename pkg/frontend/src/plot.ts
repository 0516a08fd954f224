// Command-vs-achieved sweep chart as a self-contained SVG string: a diagonal
// reference line, shaded in-distribution band, and the response curve. Pure
// string building so it is testable without a DOM.

import type { SweepCurveFile } from "./types.js";

export interface PlotOptions {
  width?: number;
  height?: number;
  margin?: number;
}

export function renderSweepSvg(curve: SweepCurveFile,
                               opts: PlotOptions = {}): string {
  if (!curve || !Array.isArray(curve.commanded) || !Array.isArray(curve.achieved)
      || curve.commanded.length !== curve.achieved.length
      || curve.commanded.length === 0) {
    throw new Error("sweep curve: commanded/achieved must be equal-length, nonempty");
  }
  const W = opts.width ?? 420;
  const H = opts.height ?? 420;
  const M = opts.margin ?? 36;
  const xs = curve.commanded;
  const ys = curve.achieved;
  const lo = Math.min(Math.min(...xs), Math.min(...ys));
  const hi = Math.max(Math.max(...xs), Math.max(...ys));
  const span = hi - lo || 1;
  const sx = (v: number) => M + ((v - lo) / span) * (W - 2 * M);
  const sy = (v: number) => H - M - ((v - lo) / span) * (H - 2 * M);

  const [idLo, idHi] = curve.id_range;
  const shade = `<rect class="id-band" x="${sx(idLo).toFixed(1)}" y="${M}" ` +
    `width="${(sx(idHi) - sx(idLo)).toFixed(1)}" height="${H - 2 * M}" ` +
    `fill="#dcefdf"/>`;
  const diag = `<line class="diagonal" x1="${sx(lo)}" y1="${sy(lo)}" ` +
    `x2="${sx(hi)}" y2="${sy(hi)}" stroke="#999" stroke-dasharray="4 3"/>`;
  const pts = xs.map((x, i) => `${sx(x).toFixed(1)},${sy(ys[i]).toFixed(1)}`).join(" ");
  const poly = `<polyline class="response" points="${pts}" fill="none" ` +
    `stroke="#1565c0" stroke-width="2"/>`;
  const axis = `<text x="${W / 2}" y="${H - 8}" text-anchor="middle" ` +
    `font-size="12">${esc(curve.axis)} commanded</text>` +
    `<text x="12" y="${H / 2}" font-size="12" ` +
    `transform="rotate(-90 12 ${H / 2})" text-anchor="middle">achieved</text>`;
  return `<svg xmlns="http://www.w3.org/2000/svg" width="${W}" height="${H}" ` +
    `viewBox="0 0 ${W} ${H}">${shade}${diag}${poly}${axis}</svg>`;
}

function esc(s: string): string {
  return s.replace(/[&<>"]/g, (c) =>
    ({ "&": "&amp;", "<": "&lt;", ">": "&gt;", '"': "&quot;" }[c] as string));
}
