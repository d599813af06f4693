/**
 * Canonical argument literals, shared with the native tooling.
 *
 * Tensors: `tensor(<dtype>, shape=[2,3], fill=<elem>)` when every element is
 * equal (or there are none), `tensor(..., values=[e,e,...])` otherwise.
 * Scalars are bare literals: ints in decimal, floats always carrying a `.`,
 * an exponent, or one of inf/-inf/nan, bools as true/false, strings double
 * quoted with `\\` and `\"` as the only escapes. Int lists are `[1,2,3]`.
 *
 * Int64 values ride on bigint end to end; JS numbers cannot hold the
 * extremes the corpus uses.
 */

export type DTypeToken = "int64" | "float64" | "bool" | "str";

export type Element = bigint | number | boolean | string;

export interface TensorValue {
  readonly dtype: DTypeToken;
  readonly shape: readonly number[];
  readonly values: readonly Element[];
}

export type ArgValue = TensorValue | bigint | number | boolean | string | bigint[];

export class LiteralError extends Error {
  override name = "LiteralError";
}

const DTYPE_TOKENS: readonly DTypeToken[] = ["int64", "float64", "bool", "str"];

function elementCount(shape: readonly number[]): number {
  let n = 1;
  for (const d of shape) {
    if (!Number.isInteger(d) || d < 0) {
      throw new LiteralError(`bad dimension ${d}`);
    }
    n *= d;
  }
  return n;
}

function checkElement(dtype: DTypeToken, v: Element): void {
  const ok =
    (dtype === "int64" && typeof v === "bigint") ||
    (dtype === "float64" && typeof v === "number") ||
    (dtype === "bool" && typeof v === "boolean") ||
    (dtype === "str" && typeof v === "string");
  if (!ok) {
    throw new LiteralError(`${typeof v} element does not fit dtype ${dtype}`);
  }
}

/** Uniform fill tensor, the shape Listing-style reproducers are built from. */
export function constant(
  value: Element,
  shape: readonly number[],
  dtype: DTypeToken = "int64",
): TensorValue {
  checkElement(dtype, value);
  const n = elementCount(shape);
  return { dtype, shape: [...shape], values: new Array<Element>(n).fill(value) };
}

export function fromValues(
  dtype: DTypeToken,
  shape: readonly number[],
  values: readonly Element[],
): TensorValue {
  const n = elementCount(shape);
  if (values.length !== n) {
    throw new LiteralError(`shape [${shape}] needs ${n} values, got ${values.length}`);
  }
  for (const v of values) checkElement(dtype, v);
  return { dtype, shape: [...shape], values: [...values] };
}

export function isTensorValue(v: unknown): v is TensorValue {
  return (
    typeof v === "object" &&
    v !== null &&
    "dtype" in v &&
    "shape" in v &&
    "values" in v
  );
}

function sameElement(a: Element, b: Element): boolean {
  // NaN is never equal to itself, matching the native uniformity rule.
  return a === b;
}

export function isUniform(t: TensorValue): boolean {
  const first = t.values[0];
  if (first === undefined) return true;
  return t.values.every((v) => sameElement(v, first));
}

export function tensorEquals(a: TensorValue, b: TensorValue): boolean {
  if (a.dtype !== b.dtype) return false;
  if (a.shape.length !== b.shape.length) return false;
  if (!a.shape.every((d, i) => d === b.shape[i])) return false;
  return (
    a.values.length === b.values.length &&
    a.values.every((v, i) => {
      const w = b.values[i]!;
      if (typeof v === "number" && typeof w === "number") {
        return Object.is(v, w) || v === w;
      }
      return v === w;
    })
  );
}

function zeroOf(dtype: DTypeToken): Element {
  if (dtype === "int64") return 0n;
  if (dtype === "float64") return 0.0;
  if (dtype === "bool") return false;
  return "";
}

/** Render a double as the native side's repr would accept it back. */
export function floatText(x: number): string {
  if (Number.isNaN(x)) return "nan";
  if (x === Infinity) return "inf";
  if (x === -Infinity) return "-inf";
  if (Object.is(x, -0)) return "-0.0";
  const s = String(x);
  return /[.eE]/.test(s) ? s : s + ".0";
}

export function quoteString(s: string): string {
  for (const c of s) {
    if (c.charCodeAt(0) < 0x20) {
      throw new LiteralError("control characters in string value");
    }
  }
  return '"' + s.replace(/\\/g, "\\\\").replace(/"/g, '\\"') + '"';
}

function renderElement(dtype: DTypeToken, v: Element): string {
  if (dtype === "int64") return (v as bigint).toString();
  if (dtype === "float64") return floatText(v as number);
  if (dtype === "bool") return v ? "true" : "false";
  return quoteString(v as string);
}

export function renderLiteral(value: ArgValue): string {
  if (isTensorValue(value)) {
    const shape = "[" + value.shape.join(",") + "]";
    if (isUniform(value)) {
      const fill = value.values.length > 0 ? value.values[0]! : zeroOf(value.dtype);
      return `tensor(${value.dtype}, shape=${shape}, fill=${renderElement(value.dtype, fill)})`;
    }
    const elems = value.values.map((v) => renderElement(value.dtype, v)).join(",");
    return `tensor(${value.dtype}, shape=${shape}, values=[${elems}])`;
  }
  if (typeof value === "bigint") return value.toString();
  if (typeof value === "number") return floatText(value);
  if (typeof value === "boolean") return value ? "true" : "false";
  if (typeof value === "string") return quoteString(value);
  return "[" + value.map((v) => v.toString()).join(",") + "]";
}

// --- parsing -----------------------------------------------------------------

function scanQuoted(text: string, start: number): [string, number] {
  if (text[start] !== '"') {
    throw new LiteralError(`expected quoted string in ${text.slice(start)}`);
  }
  const out: string[] = [];
  let i = start + 1;
  while (i < text.length) {
    const c = text[i]!;
    if (c === "\\") {
      const next = text[i + 1];
      if (next !== '"' && next !== "\\") {
        throw new LiteralError("bad escape in string token");
      }
      out.push(next);
      i += 2;
    } else if (c === '"') {
      return [out.join(""), i + 1];
    } else {
      out.push(c);
      i += 1;
    }
  }
  throw new LiteralError("unterminated string token");
}

const INT_RE = /^-?\d+$/;

function parseFloatToken(token: string): number {
  if (token === "inf") return Infinity;
  if (token === "-inf") return -Infinity;
  if (token === "nan") return NaN;
  if (!/[.eE]/.test(token)) {
    throw new LiteralError(`bad float literal ${JSON.stringify(token)}`);
  }
  const x = Number(token);
  if (Number.isNaN(x)) {
    throw new LiteralError(`bad float literal ${JSON.stringify(token)}`);
  }
  return x;
}

function parseElementToken(dtype: DTypeToken, token: string): Element {
  if (dtype === "int64") {
    if (!INT_RE.test(token)) throw new LiteralError(`bad int64 element ${token}`);
    return BigInt(token);
  }
  if (dtype === "float64") return parseFloatToken(token);
  if (dtype === "bool") {
    if (token === "true") return true;
    if (token === "false") return false;
    throw new LiteralError(`bad bool element ${token}`);
  }
  const [value, end] = scanQuoted(token, 0);
  if (end !== token.length) throw new LiteralError(`bad str element ${token}`);
  return value;
}

function parseShape(text: string): number[] {
  if (!text.startsWith("[") || !text.endsWith("]")) {
    throw new LiteralError(`bad shape ${text}`);
  }
  const inner = text.slice(1, -1);
  if (inner === "") return [];
  return inner.split(",").map((d) => {
    if (!/^\d+$/.test(d)) throw new LiteralError(`bad shape ${text}`);
    return Number(d);
  });
}

/** Split on commas that sit outside quotes and brackets. */
function splitTopLevel(text: string): string[] {
  const parts: string[] = [];
  let depth = 0;
  let field = "";
  let i = 0;
  while (i < text.length) {
    const c = text[i]!;
    if (c === '"') {
      const start = i;
      const [, end] = scanQuoted(text, i);
      field += text.slice(start, end);
      i = end;
      continue;
    }
    if (c === "[") depth += 1;
    if (c === "]") depth -= 1;
    if (c === "," && depth === 0) {
      parts.push(field);
      field = "";
    } else {
      field += c;
    }
    i += 1;
  }
  parts.push(field);
  return parts.map((p) => p.trim());
}

export function parseTensorLiteral(text: string): TensorValue {
  if (!text.startsWith("tensor(") || !text.endsWith(")")) {
    throw new LiteralError(`bad tensor literal ${text}`);
  }
  const parts = splitTopLevel(text.slice("tensor(".length, -1));
  if (parts.length !== 3) throw new LiteralError(`bad tensor literal ${text}`);
  const dtype = parts[0] as DTypeToken;
  if (!DTYPE_TOKENS.includes(dtype)) {
    throw new LiteralError(`unknown dtype ${parts[0]}`);
  }
  const shapePart = parts[1]!;
  if (!shapePart.startsWith("shape=")) {
    throw new LiteralError(`bad tensor literal ${text}`);
  }
  const shape = parseShape(shapePart.slice("shape=".length));
  const body = parts[2]!;
  if (body.startsWith("fill=")) {
    const fill = parseElementToken(dtype, body.slice("fill=".length));
    return constant(fill, shape, dtype);
  }
  if (body.startsWith("values=[") && body.endsWith("]")) {
    const inner = body.slice("values=[".length, -1);
    const tokens = inner === "" ? [] : splitTopLevel(inner);
    const values = tokens.map((t) => parseElementToken(dtype, t));
    return fromValues(dtype, shape, values);
  }
  throw new LiteralError(`bad tensor literal ${text}`);
}

/**
 * Parse a literal without being told the parameter type. Unambiguous for
 * canonical text: floats always carry `.`/`e`/inf/nan, so a bare digit
 * string can only be an int64.
 */
export function parseAnyLiteral(text: string): ArgValue {
  const t = text.trim();
  if (t.startsWith("tensor(")) return parseTensorLiteral(t);
  if (t.startsWith("[")) {
    if (!t.endsWith("]")) throw new LiteralError(`bad int list ${t}`);
    const inner = t.slice(1, -1);
    if (inner === "") return [];
    return inner.split(",").map((tok) => {
      if (!INT_RE.test(tok)) throw new LiteralError(`bad int list ${t}`);
      return BigInt(tok);
    });
  }
  if (t === "true") return true;
  if (t === "false") return false;
  if (t.startsWith('"')) {
    const [value, end] = scanQuoted(t, 0);
    if (end !== t.length) throw new LiteralError(`bad string literal ${t}`);
    return value;
  }
  if (INT_RE.test(t)) return BigInt(t);
  return parseFloatToken(t);
}
