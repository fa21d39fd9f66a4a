/**
 * Regime partition over the (|y|, t) plane: points colored by their regime
 * label with the crossover curve t = C0 * t0(s) drawn from the sidecar
 * metadata when present.
 */

import { PointCloud, norm } from "./schema.js";
import * as svg from "./svg.js";

const REGIME_FILL: Record<string, string> = {
  small_time: "#1f77b4",
  large_time: "#ff7f0e",
};

export function renderRegimes(cloud: PointCloud, title = "regime partition"): string {
  const rows = cloud.rows;
  if (rows.length === 0) throw new Error("empty point cloud");
  const frame = svg.defaultFrame;
  const radii = rows.map((r) => Math.max(Math.min(norm(r.x), norm(r.y)), 1e-2));
  const ts = rows.map((r) => r.t);
  const sDom: [number, number] = [Math.min(...radii) / 1.4, Math.max(...radii) * 1.4];
  const tDom: [number, number] = [Math.min(...ts) / 1.4, Math.max(...ts) * 1.4];
  const xs = svg.logScale(sDom, [frame.margin.left, frame.width - frame.margin.right]);
  const ys = svg.logScale(tDom, [frame.height - frame.margin.bottom, frame.margin.top]);

  const marks: string[] = [];
  const curve = cloud.meta?.t0_curve;
  if (curve && curve.length > 1) {
    const c0 = cloud.meta?.c0_regime ?? 1.0;
    const pts = curve
      .filter(([s, t0]) => s >= sDom[0] && s <= sDom[1]
        && c0 * t0 >= tDom[0] && c0 * t0 <= tDom[1])
      .map(([s, t0]): [number, number] => [xs(s), ys(c0 * t0)]);
    if (pts.length > 1) {
      marks.push(svg.polyline(pts, "#2ca02c", "crossover-curve"));
    }
  }
  rows.forEach((r, i) => {
    const cx = xs(radii[i]);
    const cy = ys(r.t);
    const fill = REGIME_FILL[r.regime] ?? "#7f7f7f";
    if (r.underflow) {
      marks.push(svg.circle(cx, cy, 3.5, `underflow ${r.regime}`, "none",
                            `stroke="${fill}" stroke-width="1"`));
    } else {
      marks.push(svg.circle(cx, cy, 3.5, `point ${r.regime}`, fill));
    }
  });
  const body = [
    svg.axes(frame, xs, ys, svg.logTicks(sDom), svg.logTicks(tDom),
             "min(|x|, |y|)", "t"),
    ...marks,
  ].join("\n");
  return svg.document(frame, title, body);
}
