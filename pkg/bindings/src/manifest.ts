/**
 * PoV manifest files: the line-oriented format the synthesizer writes and
 * the native replayer consumes.
 */

export type FaultToken = "segv" | "fpe" | "abort";
export type ExpectToken = FaultToken | "none";

export interface PovManifest {
  readonly binding: string;
  readonly kernel: string;
  readonly uin: number;
  readonly expect: ExpectToken;
  /** (param name, canonical literal) in signature order. */
  readonly args: readonly (readonly [string, string])[];
}

export class ManifestError extends Error {
  override name = "ManifestError";
}

const EXPECT_TOKENS: readonly ExpectToken[] = ["none", "segv", "fpe", "abort"];

export function renderPovManifest(m: PovManifest): string {
  const lines = [
    "pov-version=1",
    `binding=${m.binding}`,
    `provenance=${m.kernel}:${m.uin}`,
    `expect=${m.expect}`,
  ];
  for (const [name, literal] of m.args) {
    lines.push(`arg.${name}=${literal}`);
  }
  return lines.join("\n") + "\n";
}

function splitKeyValue(line: string, lineno: number): [string, string] {
  const eq = line.indexOf("=");
  if (eq < 0) throw new ManifestError(`line ${lineno}: missing '='`);
  return [line.slice(0, eq), line.slice(eq + 1)];
}

export function parsePovManifest(text: string): PovManifest {
  const lines = text.split("\n").filter((l, i, all) => !(l === "" && i === all.length - 1));
  if (lines[0] !== "pov-version=1") {
    throw new ManifestError(`unsupported manifest version: ${lines[0] ?? "<empty>"}`);
  }
  let binding: string | null = null;
  let kernel: string | null = null;
  let uin: number | null = null;
  let expect: ExpectToken | null = null;
  const args: [string, string][] = [];
  for (let i = 1; i < lines.length; i++) {
    const line = lines[i]!;
    if (line === "") throw new ManifestError(`line ${i + 1}: blank line`);
    const [key, value] = splitKeyValue(line, i + 1);
    if (key === "binding") {
      binding = value;
    } else if (key === "provenance") {
      const colon = value.lastIndexOf(":");
      if (colon < 1 || !/^\d+$/.test(value.slice(colon + 1))) {
        throw new ManifestError(`line ${i + 1}: bad provenance ${value}`);
      }
      kernel = value.slice(0, colon);
      uin = Number(value.slice(colon + 1));
    } else if (key === "expect") {
      if (!EXPECT_TOKENS.includes(value as ExpectToken)) {
        throw new ManifestError(`line ${i + 1}: bad expect ${value}`);
      }
      expect = value as ExpectToken;
    } else if (key.startsWith("arg.")) {
      args.push([key.slice("arg.".length), value]);
    } else {
      throw new ManifestError(`line ${i + 1}: unknown key ${key}`);
    }
  }
  if (binding === null || kernel === null || uin === null || expect === null) {
    throw new ManifestError("manifest is missing a required field");
  }
  return { binding, kernel, uin, expect, args };
}
