/**
 * Reproducer scripts. A manifest becomes a standalone .mjs file that
 * rebuilds each argument with the binding module's constructors and makes
 * the one call; running it yields the native exit-code contract
 * (0 graceful, 134 abort, 136 fpe, 139 segv).
 */

import { spawnSync } from "node:child_process";
import { dirname, join, resolve } from "node:path";
import { fileURLToPath, pathToFileURL } from "node:url";

import {
  type ArgValue,
  type Element,
  type TensorValue,
  isTensorValue,
  isUniform,
  parseAnyLiteral,
} from "./literals.js";
import { type FaultToken, type PovManifest } from "./manifest.js";
import { OperationalError, classifyExit } from "./runtime.js";

function jsNumber(x: number): string {
  if (Number.isNaN(x)) return "NaN";
  if (x === Infinity) return "Infinity";
  if (x === -Infinity) return "-Infinity";
  if (Object.is(x, -0)) return "-0";
  return String(x);
}

function jsElement(dtype: TensorValue["dtype"], v: Element): string {
  if (dtype === "int64") return `${v as bigint}n`;
  if (dtype === "float64") return jsNumber(v as number);
  if (dtype === "bool") return v ? "true" : "false";
  return JSON.stringify(v);
}

function jsArg(value: ArgValue): string {
  if (isTensorValue(value)) {
    const shape = "[" + value.shape.join(", ") + "]";
    if (isUniform(value)) {
      const fill = value.values.length > 0 ? value.values[0]! : defaultFill(value.dtype);
      return `constant(${jsElement(value.dtype, fill)}, ${shape}, ${JSON.stringify(value.dtype)})`;
    }
    const elems = value.values.map((v) => jsElement(value.dtype, v)).join(", ");
    return `fromValues(${JSON.stringify(value.dtype)}, ${shape}, [${elems}])`;
  }
  if (typeof value === "bigint") return `${value}n`;
  if (typeof value === "number") return jsNumber(value);
  if (typeof value === "boolean") return value ? "true" : "false";
  if (typeof value === "string") return JSON.stringify(value);
  return "[" + value.map((v) => `${v}n`).join(", ") + "]";
}

function defaultFill(dtype: TensorValue["dtype"]): Element {
  if (dtype === "int64") return 0n;
  if (dtype === "float64") return 0;
  if (dtype === "bool") return false;
  return "";
}

function packageRoot(): string {
  return resolve(dirname(fileURLToPath(import.meta.url)), "..");
}

export function defaultBindingImport(): string {
  return pathToFileURL(join(packageRoot(), "dist", "index.js")).href;
}

export class SnippetError extends Error {
  override name = "SnippetError";
}

/**
 * Render a manifest as a runnable script. Pure: same manifest and options,
 * same text. Rejected arguments exit gracefully, like the native replayer.
 */
export function emitSnippet(
  manifest: PovManifest,
  opts: { bindingImport?: string } = {},
): string {
  const importFrom = opts.bindingImport ?? defaultBindingImport();
  const dot = manifest.binding.indexOf(".");
  if (dot < 1) {
    throw new SnippetError(`no namespace in binding ${manifest.binding}`);
  }
  const ns = manifest.binding.slice(0, dot);
  const argTexts = manifest.args.map(([, literal]) => jsArg(parseAnyLiteral(literal)));
  const call =
    argTexts.length === 0
      ? `${manifest.binding}();`
      : `${manifest.binding}(\n${argTexts.map((a) => "    " + a + ",").join("\n")}\n  );`;
  return [
    `// Reproducer for ${manifest.kernel}, combination ${manifest.uin}.`,
    `// Expected outcome: ${manifest.expect}.`,
    `import { constant, fromValues, KernelRejection, ${ns} } from ${JSON.stringify(importFrom)};`,
    "",
    "try {",
    `  ${call}`,
    "} catch (err) {",
    "  if (!(err instanceof KernelRejection)) throw err;",
    "}",
    "",
  ].join("\n");
}

/**
 * Run a snippet in its own interpreter and classify the exit: a fault
 * token, or "none" for a graceful run.
 */
export function runSnippet(path: string): FaultToken | "none" {
  const proc = spawnSync(process.execPath, [path], { encoding: "utf8" });
  if (proc.error) {
    throw new OperationalError(`failed to start interpreter: ${proc.error.message}`);
  }
  if (proc.status === null) {
    throw new OperationalError(`snippet died of signal ${proc.signal}`);
  }
  const classified = classifyExit(proc.status);
  if (classified === null) {
    throw new OperationalError(
      `snippet exited with ${proc.status}: ${proc.stderr.trim()}`,
    );
  }
  return classified;
}
