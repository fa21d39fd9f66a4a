/**
 * Log-scale scatter of value/env_lower and env_upper/value against t.
 * Points at or below ratio one sit outside their fitted band and get the
 * violation style; rows flagged as underflowed render hollow and gray
 * (excluded from fitting, never dropped from the picture).
 */

import { PointCloud } from "./schema.js";
import * as svg from "./svg.js";

const finite = (v: number) => Number.isFinite(v) && v > 0;

export function renderRatios(cloud: PointCloud, title = "envelope ratios"): string {
  const rows = cloud.rows;
  if (rows.length === 0) throw new Error("empty point cloud");
  const frame = svg.defaultFrame;
  const ts = rows.map((r) => r.t).filter(finite);
  const ratios = rows
    .flatMap((r) => [r.ratioLower, r.ratioUpper])
    .filter(finite);
  if (ratios.length === 0) throw new Error("no finite ratios to plot");
  const tDom: [number, number] = [Math.min(...ts) / 1.3, Math.max(...ts) * 1.3];
  const rDom: [number, number] = [
    Math.min(0.5, ...ratios) / 1.5,
    Math.max(2, ...ratios) * 1.5,
  ];
  const xs = svg.logScale(tDom, [frame.margin.left, frame.width - frame.margin.right]);
  const ys = svg.logScale(rDom, [frame.height - frame.margin.bottom, frame.margin.top]);

  const marks: string[] = [];
  marks.push(svg.polyline(
    [[xs(tDom[0]), ys(1)], [xs(tDom[1]), ys(1)]], "#444", "unit-line", "4 3"));
  for (const r of rows) {
    for (const [ratio, color, kind] of [
      [r.ratioLower, "#1f77b4", "lower"],
      [r.ratioUpper, "#ff7f0e", "upper"],
    ] as Array<[number, string, string]>) {
      if (!finite(ratio)) continue;
      const cx = xs(r.t);
      const cy = ys(Math.min(Math.max(ratio, rDom[0]), rDom[1]));
      if (r.underflow) {
        marks.push(svg.circle(cx, cy, 3.5, `underflow ${kind}`, "none",
                              'stroke="#999" stroke-width="1"'));
      } else if (ratio < 1) {
        marks.push(svg.circle(cx, cy, 5, `violation ${kind}`, "#d62728",
                              'stroke="black" stroke-width="1.2"'));
      } else {
        marks.push(svg.circle(cx, cy, 3, `ok ${kind}`, color));
      }
    }
  }
  const body = [
    svg.axes(frame, xs, ys, svg.logTicks(tDom), svg.logTicks(rDom),
             "t", "ratio to fitted envelope"),
    ...marks,
  ].join("\n");
  return svg.document(frame, title, body);
}
