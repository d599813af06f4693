// Generated by codegen.ts from the native corpus description.
// Do not edit by hand; run `npm run codegen` instead.

import { type TensorValue } from "./literals.js";
import { OperationalError, execKernel } from "./runtime.js";

export const ops = {
  add(a: TensorValue, b: TensorValue): TensorValue {
    const out = execKernel("ops.add", "add", [["a", a], ["b", b]]);
    if (out.result === null) {
      throw new OperationalError("add returned no value");
    }
    return out.result;
  },
  concat(a: TensorValue, b: TensorValue): TensorValue {
    const out = execKernel("ops.concat", "concat", [["a", a], ["b", b]]);
    if (out.result === null) {
      throw new OperationalError("concat returned no value");
    }
    return out.result;
  },
  delete_handle(handle: TensorValue): null {
    execKernel("ops.delete_handle", "delete_handle", [["handle", handle]]);
    return null;
  },
  insert_dim(sizes: TensorValue, batch_size: bigint, out_dim: bigint): TensorValue {
    const out = execKernel("ops.insert_dim", "insert_dim", [["sizes", sizes], ["batch_size", batch_size], ["out_dim", out_dim]]);
    if (out.result === null) {
      throw new OperationalError("insert_dim returned no value");
    }
    return out.result;
  },
  mean_pool(data: TensorValue, window: bigint): TensorValue {
    const out = execKernel("ops.mean_pool", "mean_pool", [["data", data], ["window", window]]);
    if (out.result === null) {
      throw new OperationalError("mean_pool returned no value");
    }
    return out.result;
  },
  normalize(data: TensorValue): TensorValue {
    const out = execKernel("ops.normalize", "normalize", [["data", data]]);
    if (out.result === null) {
      throw new OperationalError("normalize returned no value");
    }
    return out.result;
  },
  reshape(data: TensorValue, dims: bigint[]): TensorValue {
    const out = execKernel("ops.reshape", "reshape", [["data", data], ["dims", dims]]);
    if (out.result === null) {
      throw new OperationalError("reshape returned no value");
    }
    return out.result;
  },
  scale(data: TensorValue, factor: number): TensorValue {
    const out = execKernel("ops.scale", "scale", [["data", data], ["factor", factor]]);
    if (out.result === null) {
      throw new OperationalError("scale returned no value");
    }
    return out.result;
  },
  strided_write(indices: TensorValue, strides: TensorValue, payload: bigint): TensorValue {
    const out = execKernel("ops.strided_write", "strided_write", [["indices", indices], ["strides", strides], ["payload", payload]]);
    if (out.result === null) {
      throw new OperationalError("strided_write returned no value");
    }
    return out.result;
  },
};
