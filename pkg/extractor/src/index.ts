/** Public surface of the extractor package. */

export { HEADER_SIZE, MAGIC, MAX_ID_BYTES, Modality, NORM_TOLERANCE, loadBank, writeBank } from './ceb1.js';
export type { BankFile, BankRecord } from './ceb1.js';
export { convertBenchmark, formatInstances } from './convert.js';
export type { Benchmark, CaptionMode, ConvertOptions, Conversion, ConvertedInstance } from './convert.js';
export { DEFAULT_DIM, DEFAULT_MODEL, createEncoder, normalize } from './encoder.js';
export type { Encoder } from './encoder.js';
export * from './errors.js';
export { runExtraction } from './extract.js';
export type { ExtractionJob, ExtractionResult, JobKind } from './extract.js';
export { formatManifest, parseManifest } from './manifest.js';
export type { ManifestEntry } from './manifest.js';
