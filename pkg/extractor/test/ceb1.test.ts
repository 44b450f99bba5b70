import { describe, expect, it } from 'vitest';

import {
  HEADER_SIZE,
  Modality,
  loadBank,
  writeBank,
} from '../src/ceb1.js';
import {
  BadHeader,
  BadMagic,
  BadRecord,
  DuplicateId,
  NonFinite,
  NormDrift,
  TrailingData,
  TruncatedFile,
} from '../src/errors.js';
import { normalize } from '../src/encoder.js';

// Bytes produced by the engine's own writer for these exact inputs; the
// components are exactly representable in float32 and exactly unit norm,
// so any correct writer must reproduce them bit for bit.
const GOLDEN_TEXT_BANK =
  '43454231040000000300000000000000020000000000000000000000000000000100610000803f000000000000000000000000' +
  '0400ceb1ceb20000003f0000003f0000003f0000003f' +
  '03007a2d390000000000000000000080bf00000000';
const GOLDEN_IMAGE_BANK =
  '434542310200000001000000000000000100000000000000000000000000000002007130000000000000803f';

function goldenTextRecords() {
  return [
    { id: 'a', vector: Float64Array.from([1, 0, 0, 0]) },
    { id: 'αβ', vector: Float64Array.from([0.5, 0.5, 0.5, 0.5]) },
    { id: 'z-9', vector: Float64Array.from([0, 0, -1, 0]) },
  ];
}

describe('writeBank', () => {
  it('reproduces the engine writer byte for byte', () => {
    const data = writeBank(4, Modality.Text, goldenTextRecords());
    expect(data.toString('hex')).toBe(GOLDEN_TEXT_BANK);
  });

  it('matches the golden single-record image bank', () => {
    const data = writeBank(2, Modality.Image, [{ id: 'q0', vector: Float64Array.from([0, 1]) }]);
    expect(data.toString('hex')).toBe(GOLDEN_IMAGE_BANK);
  });

  it('writes an empty bank as a bare header', () => {
    const data = writeBank(8, Modality.Unspecified, []);
    expect(data.length).toBe(HEADER_SIZE);
    expect(loadBank(data).records).toEqual([]);
  });

  it('rejects duplicate ids', () => {
    const rec = { id: 'a', vector: Float64Array.from([1, 0]) };
    expect(() => writeBank(2, Modality.Image, [rec, rec])).toThrow(DuplicateId);
  });

  it('rejects vectors of the wrong dimension', () => {
    expect(() => writeBank(3, Modality.Image, [{ id: 'a', vector: Float64Array.from([1, 0]) }])).toThrow(BadRecord);
  });

  it('rejects empty and oversized ids', () => {
    const vector = Float64Array.from([1, 0]);
    expect(() => writeBank(2, Modality.Image, [{ id: '', vector }])).toThrow(BadRecord);
    expect(() => writeBank(2, Modality.Image, [{ id: 'x'.repeat(257), vector }])).toThrow(BadRecord);
  });

  it('rejects non-finite components', () => {
    expect(() => writeBank(2, Modality.Image, [{ id: 'a', vector: Float64Array.from([NaN, 1]) }])).toThrow(NonFinite);
  });

  it('rejects a non-positive dimension', () => {
    expect(() => writeBank(0, Modality.Image, [])).toThrow(BadHeader);
  });
});

describe('loadBank', () => {
  it('round trips the golden bank', () => {
    const bank = loadBank(Buffer.from(GOLDEN_TEXT_BANK, 'hex'));
    expect(bank.dim).toBe(4);
    expect(bank.modality).toBe(Modality.Text);
    expect(bank.records.map((r) => r.id)).toEqual(['a', 'αβ', 'z-9']);
    expect(Array.from(bank.records[0]!.vector)).toEqual([1, 0, 0, 0]);
    expect(Array.from(bank.records[1]!.vector)).toEqual([0.5, 0.5, 0.5, 0.5]);
    const rewritten = writeBank(bank.dim, bank.modality, bank.records);
    expect(rewritten.toString('hex')).toBe(GOLDEN_TEXT_BANK);
  });

  it('round trips vectors that need float32 quantization', () => {
    const records = [
      { id: 'p', vector: normalize(Float64Array.from([1, 2, 3])) },
      { id: 'q', vector: normalize(Float64Array.from([-0.3, 0.04, 7])) },
    ];
    const data = writeBank(3, Modality.Image, records);
    const loaded = loadBank(data);
    expect(writeBank(3, Modality.Image, loaded.records).equals(data)).toBe(true);
    // Loaded components are the float32 quantization of the inputs.
    expect(loaded.records[0]!.vector[0]).toBe(Math.fround(records[0]!.vector[0]!));
  });

  it('rejects a wrong magic', () => {
    const data = Buffer.from(GOLDEN_IMAGE_BANK, 'hex');
    data.write('XXXX', 0, 'ascii');
    expect(() => loadBank(data)).toThrow(BadMagic);
  });

  it('rejects a truncated header', () => {
    expect(() => loadBank(Buffer.from(GOLDEN_IMAGE_BANK, 'hex').subarray(0, 10))).toThrow(TruncatedFile);
  });

  it('rejects dim zero', () => {
    const data = Buffer.from(GOLDEN_IMAGE_BANK, 'hex');
    data.writeUInt32LE(0, 4);
    expect(() => loadBank(data)).toThrow(BadHeader);
  });

  it('rejects an unknown modality tag', () => {
    const data = Buffer.from(GOLDEN_IMAGE_BANK, 'hex');
    data.writeUInt8(7, 16);
    expect(() => loadBank(data)).toThrow(BadHeader);
  });

  it('rejects nonzero reserved header bytes', () => {
    const data = Buffer.from(GOLDEN_IMAGE_BANK, 'hex');
    data.writeUInt8(1, 20);
    expect(() => loadBank(data)).toThrow(BadHeader);
  });

  it('rejects an out-of-range id length', () => {
    const data = Buffer.from(GOLDEN_IMAGE_BANK, 'hex');
    data.writeUInt16LE(0, HEADER_SIZE);
    expect(() => loadBank(data)).toThrow(BadRecord);
  });

  it('rejects an id that is not valid UTF-8', () => {
    const data = Buffer.from(GOLDEN_IMAGE_BANK, 'hex');
    data.writeUInt8(0xff, HEADER_SIZE + 2);
    expect(() => loadBank(data)).toThrow(BadRecord);
  });

  it('rejects a truncated vector', () => {
    const data = Buffer.from(GOLDEN_IMAGE_BANK, 'hex');
    expect(() => loadBank(data.subarray(0, data.length - 3))).toThrow(TruncatedFile);
  });

  it('rejects trailing bytes', () => {
    const data = Buffer.concat([Buffer.from(GOLDEN_IMAGE_BANK, 'hex'), Buffer.from([0])]);
    expect(() => loadBank(data)).toThrow(TrailingData);
  });

  it('rejects duplicate record ids', () => {
    // Two records with the same id; build by declaring count 2 and
    // repeating the record body.
    const one = Buffer.from(GOLDEN_IMAGE_BANK, 'hex');
    const record = one.subarray(HEADER_SIZE);
    const header = Buffer.from(one.subarray(0, HEADER_SIZE));
    header.writeBigUInt64LE(2n, 8);
    expect(() => loadBank(Buffer.concat([header, record, record]))).toThrow(DuplicateId);
  });

  it('rejects non-finite components', () => {
    const data = Buffer.from(GOLDEN_IMAGE_BANK, 'hex');
    // float32 NaN over the first component.
    data.writeFloatLE(NaN, HEADER_SIZE + 2 + 2);
    expect(() => loadBank(data)).toThrow(NonFinite);
  });

  it('rejects norm drift beyond tolerance', () => {
    const data = Buffer.from(GOLDEN_IMAGE_BANK, 'hex');
    data.writeFloatLE(2.0, HEADER_SIZE + 2 + 2 + 4);
    expect(() => loadBank(data)).toThrow(NormDrift);
  });

  it('accepts norm deviation inside tolerance', () => {
    const data = Buffer.from(GOLDEN_IMAGE_BANK, 'hex');
    data.writeFloatLE(1.0005, HEADER_SIZE + 2 + 2 + 4);
    expect(loadBank(data).records[0]!.vector[1]).toBeCloseTo(1.0005, 6);
  });
});
