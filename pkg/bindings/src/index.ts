export {
  type ArgValue,
  type DTypeToken,
  type Element,
  type TensorValue,
  LiteralError,
  constant,
  floatText,
  fromValues,
  isTensorValue,
  isUniform,
  parseAnyLiteral,
  parseTensorLiteral,
  quoteString,
  renderLiteral,
  tensorEquals,
} from "./literals.js";
export {
  type ExpectToken,
  type FaultToken,
  type PovManifest,
  ManifestError,
  parsePovManifest,
  renderPovManifest,
} from "./manifest.js";
export {
  type ExecOutcome,
  FAULT_EXIT_CODES,
  KernelRejection,
  OperationalError,
  classifyExit,
  execKernel,
  pythonExecutable,
} from "./runtime.js";
export {
  type CorpusDescription,
  describeCorpus,
  generateOpsSource,
  writeOpsModule,
} from "./codegen.js";
export {
  SnippetError,
  defaultBindingImport,
  emitSnippet,
  runSnippet,
} from "./snippets.js";
export { ops } from "./ops.js";
