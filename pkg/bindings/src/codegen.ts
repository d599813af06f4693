/**
 * Binding generator. Asks the native CLI to describe the bound kernels and
 * emits one typed wrapper per kernel into src/ops.ts. Bindings are never
 * written by hand; growing the corpus means rerunning this.
 */

import { spawnSync } from "node:child_process";
import { writeFileSync } from "node:fs";
import { dirname, join, resolve } from "node:path";
import { fileURLToPath } from "node:url";

import { OperationalError, pythonExecutable } from "./runtime.js";

interface ParamDesc {
  readonly name: string;
  readonly type: string;
}

interface KernelDesc {
  readonly kernel: string;
  readonly binding: string;
  readonly params: readonly ParamDesc[];
  readonly returns: string | null;
}

export interface CorpusDescription {
  readonly version: number;
  readonly kernels: readonly KernelDesc[];
}

const TS_TYPES: Readonly<Record<string, string>> = {
  tensor: "TensorValue",
  int: "bigint",
  float: "number",
  bool: "boolean",
  str: "string",
  int_list: "bigint[]",
};

export function describeCorpus(): CorpusDescription {
  const proc = spawnSync(pythonExecutable(), ["-m", "kernelfuzz", "describe"], {
    encoding: "utf8",
  });
  if (proc.error || proc.status !== 0) {
    throw new OperationalError(
      `describe failed: ${proc.error?.message ?? proc.stderr.trim()}`,
    );
  }
  const desc = JSON.parse(proc.stdout) as CorpusDescription;
  if (desc.version !== 1) {
    throw new OperationalError(`unsupported description version ${desc.version}`);
  }
  return desc;
}

export function generateOpsSource(desc: CorpusDescription): string {
  const groups = new Map<string, KernelDesc[]>();
  for (const k of [...desc.kernels].sort((a, b) => a.kernel.localeCompare(b.kernel))) {
    const dot = k.binding.indexOf(".");
    if (dot < 1 || k.binding.slice(dot + 1) !== k.kernel) {
      throw new OperationalError(`unexpected binding name ${k.binding}`);
    }
    const ns = k.binding.slice(0, dot);
    const group = groups.get(ns) ?? [];
    group.push(k);
    groups.set(ns, group);
  }
  const lines: string[] = [
    "// Generated by codegen.ts from the native corpus description.",
    "// Do not edit by hand; run `npm run codegen` instead.",
    "",
    'import { type TensorValue } from "./literals.js";',
    'import { OperationalError, execKernel } from "./runtime.js";',
    "",
  ];
  for (const [ns, kernels] of [...groups.entries()].sort()) {
    lines.push(`export const ${ns} = {`);
    for (const k of kernels) {
      const params = k.params.map((p) => {
        const ts = TS_TYPES[p.type];
        if (ts === undefined) {
          throw new OperationalError(`no mapping for parameter type ${p.type}`);
        }
        return `${p.name}: ${ts}`;
      });
      const argPairs = k.params
        .map((p) => `[${JSON.stringify(p.name)}, ${p.name}]`)
        .join(", ");
      if (k.returns === "tensor") {
        lines.push(
          `  ${k.kernel}(${params.join(", ")}): TensorValue {`,
          `    const out = execKernel(${JSON.stringify(k.binding)}, ${JSON.stringify(k.kernel)}, [${argPairs}]);`,
          `    if (out.result === null) {`,
          `      throw new OperationalError("${k.kernel} returned no value");`,
          `    }`,
          `    return out.result;`,
          `  },`,
        );
      } else if (k.returns === null) {
        lines.push(
          `  ${k.kernel}(${params.join(", ")}): null {`,
          `    execKernel(${JSON.stringify(k.binding)}, ${JSON.stringify(k.kernel)}, [${argPairs}]);`,
          `    return null;`,
          `  },`,
        );
      } else {
        throw new OperationalError(`no mapping for return type ${k.returns}`);
      }
    }
    lines.push("};", "");
  }
  return lines.join("\n");
}

function packageRoot(): string {
  return resolve(dirname(fileURLToPath(import.meta.url)), "..");
}

export function writeOpsModule(): string {
  const target = join(packageRoot(), "src", "ops.ts");
  writeFileSync(target, generateOpsSource(describeCorpus()));
  return target;
}

if (process.argv.includes("--write")) {
  const target = writeOpsModule();
  console.log(`wrote ${target}`);
}
