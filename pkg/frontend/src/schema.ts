/**
 * Point-cloud CSV schema emitted by `heatlab verify` plus its .meta.json
 * sidecar. The header is validated strictly: silently mis-parsed columns
 * would corrupt a verification picture.
 */

import { readFileSync } from "node:fs";
import Papa from "papaparse";

export const SCHEMA_VERSION = "heatlab-points-v1";

export interface PointRow {
  t: number;
  x: number[];
  y: number[];
  regime: string;
  method: string;
  value: number;
  stderr: number;
  envLower: number;
  envUpper: number;
  ratioLower: number;
  ratioUpper: number;
  underflow: boolean;
}

export interface PointCloud {
  dim: number;
  rows: PointRow[];
  meta?: CloudMeta;
}

export interface CloudMeta {
  schema?: string;
  seed?: number;
  c0_regime?: number;
  t0_curve?: [number, number][];
}

export class SchemaError extends Error {}

const FIXED_TAIL = [
  "regime",
  "method",
  "value",
  "stderr",
  "env_lower",
  "env_upper",
  "ratio_lower",
  "ratio_upper",
  "underflow",
];

/** Infer the dimension from the header and check every column name. */
function validateHeader(header: string[]): number {
  if (header[0] !== "t") {
    throw new SchemaError(`first column must be "t", got "${header[0]}"`);
  }
  let i = 1;
  let dim = 0;
  while (header[i] === `x${dim}`) {
    dim += 1;
    i += 1;
  }
  if (dim === 0) throw new SchemaError("no x columns found");
  for (let k = 0; k < dim; k += 1, i += 1) {
    if (header[i] !== `y${k}`) {
      throw new SchemaError(`expected column y${k}, got "${header[i]}"`);
    }
  }
  const tail = header.slice(i);
  if (tail.length !== FIXED_TAIL.length ||
      tail.some((c, k) => c !== FIXED_TAIL[k])) {
    throw new SchemaError(
      `trailing columns [${tail.join(", ")}] do not match the v1 schema`);
  }
  return dim;
}

function num(field: string, raw: string): number {
  if (raw === "inf") return Infinity;
  if (raw === "-inf") return -Infinity;
  const v = Number(raw);
  if (raw === "" || Number.isNaN(v)) {
    if (raw === "nan") return NaN;
    throw new SchemaError(`bad numeric value "${raw}" in column ${field}`);
  }
  return v;
}

export function parsePointCloud(csvText: string): PointCloud {
  const parsed = Papa.parse<string[]>(csvText.trim(), { skipEmptyLines: true });
  if (parsed.errors.length > 0) {
    throw new SchemaError(`csv parse error: ${parsed.errors[0].message}`);
  }
  const table = parsed.data;
  if (table.length === 0) throw new SchemaError("empty file");
  const dim = validateHeader(table[0]);
  if (table.length === 1) throw new SchemaError("no data rows");
  const rows: PointRow[] = table.slice(1).map((cells) => {
    const x = [], y = [];
    for (let k = 0; k < dim; k += 1) x.push(num(`x${k}`, cells[1 + k]));
    for (let k = 0; k < dim; k += 1) y.push(num(`y${k}`, cells[1 + dim + k]));
    const base = 1 + 2 * dim;
    return {
      t: num("t", cells[0]),
      x,
      y,
      regime: cells[base],
      method: cells[base + 1],
      value: num("value", cells[base + 2]),
      stderr: num("stderr", cells[base + 3]),
      envLower: num("env_lower", cells[base + 4]),
      envUpper: num("env_upper", cells[base + 5]),
      ratioLower: num("ratio_lower", cells[base + 6]),
      ratioUpper: num("ratio_upper", cells[base + 7]),
      underflow: cells[base + 8] !== "0",
    };
  });
  return { dim, rows };
}

export function loadPointCloud(path: string): PointCloud {
  const cloud = parsePointCloud(readFileSync(path, "utf8"));
  try {
    const meta = JSON.parse(readFileSync(`${path}.meta.json`, "utf8"));
    if (meta.schema && meta.schema !== SCHEMA_VERSION) {
      throw new SchemaError(
        `sidecar schema "${meta.schema}" != "${SCHEMA_VERSION}"`);
    }
    cloud.meta = meta;
  } catch (err) {
    if (err instanceof SchemaError) throw err;
    // sidecar is optional; plots fall back to data-driven bounds
  }
  return cloud;
}

export const norm = (v: number[]): number =>
  Math.sqrt(v.reduce((acc, c) => acc + c * c, 0));
