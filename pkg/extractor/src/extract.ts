/** Extraction jobs: manifest in, embedding bank file out. */

import { readFileSync, writeFileSync } from 'node:fs';

import { BankRecord, Modality, writeBank } from './ceb1.js';
import { createEncoder } from './encoder.js';
import { ExtractError, MissingFile } from './errors.js';
import { ManifestEntry, parseManifest } from './manifest.js';

export type JobKind = 'image' | 'text';

export interface ExtractionJob {
  modelId: string;
  manifestPath: string;
  outPath: string;
  dim: number;
  batchSize: number;
  /** Advisory placement hint for checkpoint encoders; hash-v1 ignores it. */
  device?: string;
}

export interface ExtractionResult {
  outPath: string;
  dim: number;
  modality: Modality;
  nRecords: number;
}

function readManifest(path: string): ManifestEntry[] {
  let text: string;
  try {
    text = readFileSync(path, 'utf-8');
  } catch (e) {
    throw new MissingFile(`cannot read manifest ${path}: ${(e as Error).message}`);
  }
  return parseManifest(text);
}

/** Load content bytes per entry; every unreadable path is named. */
function readImageContents(entries: ManifestEntry[]): Buffer[] {
  const contents: Buffer[] = [];
  const failures: string[] = [];
  for (const entry of entries) {
    try {
      contents.push(readFileSync(entry.payload));
    } catch (e) {
      failures.push(`'${entry.id}' (line ${entry.lineno}): ${(e as Error).message}`);
    }
  }
  if (failures.length > 0) {
    throw new MissingFile(`unreadable image for ${failures.length} id(s): ${failures.join('; ')}`);
  }
  return contents;
}

/** Run one extraction job; ordering follows the manifest. */
export function runExtraction(job: ExtractionJob, kind: JobKind): ExtractionResult {
  if (!Number.isInteger(job.batchSize) || job.batchSize < 1) {
    throw new ExtractError(`batch size must be a positive integer, got ${job.batchSize}`);
  }
  // Checkpoint problems abort before any per-id work.
  const encoder = createEncoder(job.modelId, job.dim);
  const entries = readManifest(job.manifestPath);
  const contents =
    kind === 'image'
      ? readImageContents(entries)
      : entries.map((e) => Buffer.from(e.payload, 'utf-8'));

  const records: BankRecord[] = [];
  for (let start = 0; start < contents.length; start += job.batchSize) {
    const batch = contents.slice(start, start + job.batchSize);
    const vectors = encoder.encodeBatch(batch);
    for (let j = 0; j < vectors.length; j++) {
      records.push({ id: entries[start + j]!.id, vector: vectors[j]! });
    }
  }

  const modality = kind === 'image' ? Modality.Image : Modality.Text;
  const data = writeBank(job.dim, modality, records);
  writeFileSync(job.outPath, data);
  return { outPath: job.outPath, dim: job.dim, modality, nRecords: records.length };
}
