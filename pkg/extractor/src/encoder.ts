/** Embedding encoders: the checkpoint boundary.
 *
 * Real vision-language checkpoints plug in behind the Encoder interface.
 * The built-in hash-v1 encoder needs no weights: it expands a SHA-256 of
 * the content into a deterministic unit vector, so the full extraction
 * pipeline (manifests, batching, normalization, bank bytes) is exercised
 * and testable on machines with no checkpoint files.
 */

import { createHash } from 'node:crypto';

import { CheckpointUnavailable, ExtractError } from './errors.js';

export interface Encoder {
  readonly modelId: string;
  readonly dim: number;
  /** Encode one batch, preserving order; returns unit vectors (float64). */
  encodeBatch(contents: Buffer[]): Float64Array[];
}

export const DEFAULT_MODEL = 'hash-v1';
export const DEFAULT_DIM = 512;

/** Normalize in float64; rejects degenerate inputs. */
export function normalize(vector: Float64Array): Float64Array {
  let sumsq = 0;
  for (let j = 0; j < vector.length; j++) {
    sumsq += vector[j]! * vector[j]!;
  }
  const norm = Math.sqrt(sumsq);
  if (!Number.isFinite(norm) || norm < 1e-12) {
    throw new ExtractError(`cannot normalize vector with norm ${norm}`);
  }
  const out = new Float64Array(vector.length);
  for (let j = 0; j < vector.length; j++) {
    out[j] = vector[j]! / norm;
  }
  return out;
}

class HashEncoder implements Encoder {
  readonly modelId = DEFAULT_MODEL;

  constructor(readonly dim: number) {
    if (!Number.isInteger(dim) || dim < 1) {
      throw new ExtractError(`dim must be a positive integer, got ${dim}`);
    }
  }

  encodeBatch(contents: Buffer[]): Float64Array[] {
    return contents.map((content) => this.encodeOne(content));
  }

  private encodeOne(content: Buffer): Float64Array {
    const digest = createHash('sha256').update(content).digest();
    const raw = new Float64Array(this.dim);
    const counter = Buffer.alloc(4);
    for (let block = 0; block * 8 < this.dim; block++) {
      counter.writeUInt32LE(block, 0);
      const expanded = createHash('sha256').update(digest).update(counter).digest();
      for (let j = 0; j < 8 && block * 8 + j < this.dim; j++) {
        // u32 mapped to [-1, 1).
        raw[block * 8 + j] = (expanded.readUInt32LE(4 * j) / 2 ** 32) * 2 - 1;
      }
    }
    return normalize(raw);
  }
}

/** Look up an encoder by model id; unknown checkpoints abort the job. */
export function createEncoder(modelId: string, dim: number): Encoder {
  if (modelId === DEFAULT_MODEL) {
    return new HashEncoder(dim);
  }
  throw new CheckpointUnavailable(
    `checkpoint '${modelId}' is not available in this environment (only '${DEFAULT_MODEL}' ships with the extractor)`,
  );
}
