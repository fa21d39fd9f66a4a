#!/usr/bin/env node
/** heatlab-plots: render SVG reports from heatlab output files. */

import { writeFileSync } from "node:fs";
import yargs, { Argv } from "yargs";
import { hideBin } from "yargs/helpers";
import { loadPointCloud, SchemaError } from "./schema.js";
import { renderRatios } from "./plotRatios.js";
import { renderRegimes } from "./plotRegimes.js";

function run(kind: "ratios" | "regimes", input: string, output: string) {
  if (!output.endsWith(".svg")) {
    throw new Error("output must be an .svg path");
  }
  const cloud = loadPointCloud(input);
  const body = kind === "ratios" ? renderRatios(cloud) : renderRegimes(cloud);
  writeFileSync(output, body);
  console.log(`wrote ${output} (${cloud.rows.length} points)`);
}

export function main(argv: string[]): number {
  let failed = false;
  const io = (y: Argv) => y
    .option("in", { type: "string", demandOption: true })
    .option("out", { type: "string", demandOption: true });
  const guarded = (kind: "ratios" | "regimes") =>
    (args: { in: string; out: string }) => {
      try {
        run(kind, args.in, args.out);
      } catch (err) {
        const e = err as Error;
        console.error(err instanceof SchemaError
          ? `schema error: ${e.message}` : e.message);
        failed = true;
      }
    };
  yargs(argv)
    .command("ratios", "ratio scatter against the fitted band", io,
             guarded("ratios"))
    .command("regimes", "regime partition over the (|y|, t) plane", io,
             guarded("regimes"))
    .demandCommand(1)
    .strict()
    .fail((msg) => {
      console.error(msg);
      failed = true;
    })
    .parseSync();
  return failed ? 1 : 0;
}

const isDirect = process.argv[1] && import.meta.url.endsWith(
  process.argv[1].split("/").pop() as string);
if (isDirect) {
  process.exit(main(hideBin(process.argv)));
}
