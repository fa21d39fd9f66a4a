import { mkdtempSync, readFileSync, writeFileSync, existsSync } from "node:fs";
import { tmpdir } from "node:os";
import { join, dirname } from "node:path";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";

import { loadPointCloud, parsePointCloud, SchemaError } from "../src/schema.js";
import { renderRatios } from "../src/plotRatios.js";
import { renderRegimes } from "../src/plotRegimes.js";
import { main } from "../src/cli.js";

const here = dirname(fileURLToPath(import.meta.url));
const AC4 = join(here, "fixtures", "ac4_points.csv");

describe("schema", () => {
  it("parses the verification cloud", () => {
    const cloud = loadPointCloud(AC4);
    expect(cloud.dim).toBe(1);
    expect(cloud.rows.length).toBe(84);
    expect(cloud.meta?.seed).toBe(42);
    expect(cloud.meta?.t0_curve?.length).toBeGreaterThan(10);
    const regimes = new Set(cloud.rows.map((r) => r.regime));
    expect(regimes).toEqual(new Set(["small_time", "large_time"]));
    expect(cloud.rows.some((r) => r.underflow)).toBe(true);
  });

  it("rejects a wrong header", () => {
    expect(() => parsePointCloud("a,b,c\n1,2,3\n")).toThrow(SchemaError);
    expect(() => parsePointCloud(
      "t,x0,y0,regime,method,value,stderr\n1,0,0,s,pde,1,0\n"))
      .toThrow(SchemaError);
  });

  it("rejects empty input", () => {
    expect(() => parsePointCloud("")).toThrow(SchemaError);
    const headerOnly = readFileSync(AC4, "utf8").split("\n")[0];
    expect(() => parsePointCloud(headerOnly)).toThrow(SchemaError);
  });
});

describe("ratio plot", () => {
  it("renders the verification cloud with no violations", () => {
    const body = renderRatios(loadPointCloud(AC4));
    expect(body).toContain("<svg");
    expect(body).toContain('class="ok lower"');
    expect(body).toContain('class="ok upper"');
    expect(body).not.toContain("violation");
    expect(body).toContain("unit-line");
  });

  it("keeps underflow rows in a distinct style", () => {
    const body = renderRatios(loadPointCloud(AC4));
    expect(body).toContain('class="underflow');
  });

  it("highlights a planted violation", () => {
    const text = readFileSync(AC4, "utf8").trimEnd().split("\n");
    const cells = text[1].split(",");
    cells[9] = "0.25"; // ratio_lower < 1: the point escapes its band
    const doctored = [text[0], cells.join(","), ...text.slice(2)].join("\n");
    const body = renderRatios(parsePointCloud(doctored));
    expect(body).toContain('class="violation lower"');
  });

  it("refuses an empty cloud", () => {
    expect(() => renderRatios({ dim: 1, rows: [] })).toThrow();
  });
});

describe("regime plot", () => {
  it("colors points by regime and draws the crossover curve", () => {
    const body = renderRegimes(loadPointCloud(AC4));
    expect(body).toContain('class="point small_time"');
    expect(body).toContain('class="point large_time"');
    expect(body).toContain("crossover-curve");
  });

  it("renders without a sidecar (no curve)", () => {
    const cloud = parsePointCloud(readFileSync(AC4, "utf8"));
    const body = renderRegimes(cloud);
    expect(body).toContain('class="point');
    expect(body).not.toContain("crossover-curve");
  });
});

describe("command line", () => {
  it("writes both figures", () => {
    const out = mkdtempSync(join(tmpdir(), "hlplots-"));
    expect(main(["ratios", "--in", AC4, "--out", join(out, "r.svg")])).toBe(0);
    expect(main(["regimes", "--in", AC4, "--out", join(out, "g.svg")])).toBe(0);
    expect(existsSync(join(out, "r.svg"))).toBe(true);
    expect(readFileSync(join(out, "g.svg"), "utf8")).toContain("<svg");
  });

  it("fails on schema mismatch", () => {
    const out = mkdtempSync(join(tmpdir(), "hlplots-"));
    const bad = join(out, "bad.csv");
    writeFileSync(bad, "a,b\n1,2\n");
    expect(main(["ratios", "--in", bad, "--out", join(out, "x.svg")])).toBe(1);
  });

  it("fails on a non-svg output path", () => {
    const out = mkdtempSync(join(tmpdir(), "hlplots-"));
    expect(main(["ratios", "--in", AC4, "--out", join(out, "r.png")])).toBe(1);
  });
});
