/**
 * Marshalling layer between generated bindings and the native CLI.
 *
 * Every call round-trips through one `exec` invocation of the native tool:
 * arguments become canonical literals in a temporary manifest, the kernel
 * runs in that child, and the child's fate is the call's fate. A graceful
 * child hands back a result literal; a faulting child takes this process
 * down with the same exit code, which is exactly the contract a reproducer
 * script needs.
 */

import { spawnSync } from "node:child_process";
import { mkdtempSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import {
  type ArgValue,
  type TensorValue,
  parseTensorLiteral,
  renderLiteral,
} from "./literals.js";
import { type FaultToken, renderPovManifest } from "./manifest.js";

export const FAULT_EXIT_CODES: Readonly<Record<FaultToken, number>> = {
  abort: 134,
  fpe: 136,
  segv: 139,
};

/** The kernel rejected its arguments; recoverable, mirrors native behavior. */
export class KernelRejection extends Error {
  override name = "KernelRejection";
}

/** The native tool could not be driven at all (startup, protocol, IO). */
export class OperationalError extends Error {
  override name = "OperationalError";
}

export function classifyExit(code: number): FaultToken | "none" | null {
  if (code === 0) return "none";
  for (const [token, faultCode] of Object.entries(FAULT_EXIT_CODES)) {
    if (code === faultCode) return token as FaultToken;
  }
  return null;
}

export function pythonExecutable(): string {
  return process.env["KERNELFUZZ_PYTHON"] ?? "python3";
}

export interface ExecOutcome {
  /** null when the child died of a fault. */
  readonly result: TensorValue | null;
  readonly fault: FaultToken | null;
}

/**
 * Run one kernel invocation through the native CLI.
 *
 * Returns the fault token instead of exiting when `propagateFault` is
 * false; the default matches the binding contract, where a crasher kills
 * the calling interpreter.
 */
export function execKernel(
  binding: string,
  kernel: string,
  args: readonly (readonly [string, ArgValue])[],
  opts: { propagateFault?: boolean } = {},
): ExecOutcome {
  const propagate = opts.propagateFault ?? true;
  const manifest = renderPovManifest({
    binding,
    kernel,
    uin: 0,
    expect: "none",
    args: args.map(([name, value]) => [name, renderLiteral(value)] as const),
  });
  const dir = mkdtempSync(join(tmpdir(), "kfz-bind-"));
  const povPath = join(dir, "call.pov");
  let proc;
  try {
    writeFileSync(povPath, manifest);
    proc = spawnSync(
      pythonExecutable(),
      ["-m", "kernelfuzz", "exec", "--pov", povPath],
      { encoding: "utf8" },
    );
  } finally {
    rmSync(dir, { recursive: true, force: true });
  }
  if (proc.error) {
    throw new OperationalError(`failed to start native tool: ${proc.error.message}`);
  }
  const status = proc.status;
  if (status === null) {
    throw new OperationalError(`native tool died of signal ${proc.signal}`);
  }
  const classified = classifyExit(status);
  if (classified !== null && classified !== "none") {
    if (propagate) {
      process.exit(status);
    }
    return { result: null, fault: classified };
  }
  if (status !== 0) {
    throw new OperationalError(
      `native tool exited with ${status}: ${proc.stderr.trim()}`,
    );
  }
  for (const line of proc.stdout.split("\n")) {
    if (line.startsWith("invalid=")) {
      throw new KernelRejection(line.slice("invalid=".length));
    }
    if (line === "result=none") {
      return { result: null, fault: null };
    }
    if (line.startsWith("result=")) {
      return { result: parseTensorLiteral(line.slice("result=".length)), fault: null };
    }
  }
  throw new OperationalError(`native tool printed no result: ${proc.stdout.trim()}`);
}
