/** Embedding bank binary format: byte-exact writer and validating reader.
 *
 * Layout (little-endian): magic "CEB1", u32 dim, u64 record count, one
 * modality byte, 15 reserved zero bytes; then per record a u16 id byte
 * length (1..256), the UTF-8 id, and dim float32 components.
 */

import {
  BadHeader,
  BadMagic,
  BadRecord,
  DuplicateId,
  NonFinite,
  NormDrift,
  TrailingData,
  TruncatedFile,
} from './errors.js';

export const MAGIC = Buffer.from('CEB1', 'ascii');
export const HEADER_SIZE = 32;
export const MAX_ID_BYTES = 256;
export const NORM_TOLERANCE = 1e-3;

export enum Modality {
  Unspecified = 0,
  Image = 1,
  Text = 2,
}

export interface BankRecord {
  id: string;
  /** Unit vector; components are quantized to float32 on write. */
  vector: Float64Array;
}

export interface BankFile {
  dim: number;
  modality: Modality;
  records: BankRecord[];
}

const utf8Strict = new TextDecoder('utf-8', { fatal: true });

/** Serialize records to CEB1 bytes; vectors are stored as float32. */
export function writeBank(dim: number, modality: Modality, records: BankRecord[]): Buffer {
  if (!Number.isInteger(dim) || dim < 1) {
    throw new BadHeader(`dim must be a positive integer, got ${dim}`);
  }
  const seen = new Set<string>();
  const chunks: Buffer[] = [];
  const header = Buffer.alloc(HEADER_SIZE);
  MAGIC.copy(header, 0);
  header.writeUInt32LE(dim, 4);
  header.writeBigUInt64LE(BigInt(records.length), 8);
  header.writeUInt8(modality, 16);
  chunks.push(header);

  for (const rec of records) {
    if (seen.has(rec.id)) {
      throw new DuplicateId(`duplicate id: '${rec.id}'`);
    }
    seen.add(rec.id);
    const idBytes = Buffer.from(rec.id, 'utf-8');
    if (idBytes.length < 1 || idBytes.length > MAX_ID_BYTES) {
      throw new BadRecord(`id '${rec.id}': byte length ${idBytes.length} out of [1, ${MAX_ID_BYTES}]`);
    }
    if (rec.vector.length !== dim) {
      throw new BadRecord(`id '${rec.id}': vector has ${rec.vector.length} components, expected ${dim}`);
    }
    const body = Buffer.alloc(2 + idBytes.length + 4 * dim);
    body.writeUInt16LE(idBytes.length, 0);
    idBytes.copy(body, 2);
    for (let j = 0; j < dim; j++) {
      const c = rec.vector[j]!;
      if (!Number.isFinite(c)) {
        throw new NonFinite(`id '${rec.id}': non-finite component at index ${j}`);
      }
      body.writeFloatLE(c, 2 + idBytes.length + 4 * j);
    }
    chunks.push(body);
  }
  return Buffer.concat(chunks);
}

function need(data: Buffer, offset: number, n: number, what: string): void {
  if (offset + n > data.length) {
    throw new TruncatedFile(`unexpected end of data reading ${what}`);
  }
}

/** Parse CEB1 bytes, enforcing the same invariants the engine enforces. */
export function loadBank(data: Buffer): BankFile {
  need(data, 0, 4, 'magic');
  if (!data.subarray(0, 4).equals(MAGIC)) {
    throw new BadMagic(`expected magic ${JSON.stringify(MAGIC.toString('ascii'))}, got ${JSON.stringify(data.subarray(0, 4).toString('latin1'))}`);
  }
  need(data, 4, HEADER_SIZE - 4, 'header');
  const dim = data.readUInt32LE(4);
  const count = data.readBigUInt64LE(8);
  const tag = data.readUInt8(16);
  if (dim < 1) {
    throw new BadHeader('dim must be >= 1');
  }
  if (!(tag in Modality)) {
    throw new BadHeader(`unknown modality tag ${tag}`);
  }
  for (let i = 17; i < HEADER_SIZE; i++) {
    if (data[i] !== 0) {
      throw new BadHeader('reserved header bytes must be zero');
    }
  }

  const records: BankRecord[] = [];
  const seen = new Set<string>();
  let offset = HEADER_SIZE;
  for (let rec = 0n; rec < count; rec++) {
    need(data, offset, 2, `record ${rec} id length`);
    const idLen = data.readUInt16LE(offset);
    offset += 2;
    if (idLen < 1 || idLen > MAX_ID_BYTES) {
      throw new BadRecord(`record ${rec}: id byte length ${idLen} out of [1, ${MAX_ID_BYTES}]`);
    }
    need(data, offset, idLen, `record ${rec} id`);
    let id: string;
    try {
      id = utf8Strict.decode(data.subarray(offset, offset + idLen));
    } catch {
      throw new BadRecord(`record ${rec}: id is not valid UTF-8`);
    }
    offset += idLen;
    need(data, offset, 4 * dim, `record ${rec} vector`);
    const vector = new Float64Array(dim);
    let sumsq = 0;
    for (let j = 0; j < dim; j++) {
      const c = data.readFloatLE(offset + 4 * j);
      if (!Number.isFinite(c)) {
        throw new NonFinite(`record ${rec} ('${id}'): non-finite component`);
      }
      vector[j] = c;
      sumsq += c * c;
    }
    offset += 4 * dim;
    const dev = Math.abs(Math.sqrt(sumsq) - 1.0);
    if (dev > NORM_TOLERANCE) {
      throw new NormDrift(`record ${rec} ('${id}'): norm deviates by ${dev.toExponential(3)}`);
    }
    if (seen.has(id)) {
      throw new DuplicateId(`record ${rec}: duplicate id: '${id}'`);
    }
    seen.add(id);
    records.push({ id, vector });
  }
  if (offset !== data.length) {
    throw new TrailingData(`extra bytes after ${count} declared records`);
  }
  return { dim, modality: tag as Modality, records };
}
