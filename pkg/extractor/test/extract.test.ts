import { existsSync, mkdtempSync, readFileSync, writeFileSync } from 'node:fs';
import { tmpdir } from 'node:os';
import { join } from 'node:path';

import { beforeAll, describe, expect, it } from 'vitest';

import { Modality, loadBank } from '../src/ceb1.js';
import { CheckpointUnavailable, DuplicateId, ExtractError, MissingFile } from '../src/errors.js';
import { ExtractionJob, runExtraction } from '../src/extract.js';

let dir: string;

function job(overrides: Partial<ExtractionJob>): ExtractionJob {
  return {
    modelId: 'hash-v1',
    manifestPath: join(dir, 'manifest.tsv'),
    outPath: join(dir, 'out.ceb1'),
    dim: 8,
    batchSize: 32,
    ...overrides,
  };
}

beforeAll(() => {
  dir = mkdtempSync(join(tmpdir(), 'extract-'));
  writeFileSync(join(dir, 'img-a.bin'), Buffer.from('pixels of image a'));
  writeFileSync(join(dir, 'img-b.bin'), Buffer.from('pixels of image b'));
});

describe('text extraction', () => {
  it('writes one record per manifest row, in manifest order', () => {
    const manifest = join(dir, 'texts.tsv');
    writeFileSync(manifest, 'c0\tis red\nc1\thas long sleeves\nc2\tis red\n');
    const out = join(dir, 'texts.ceb1');
    const result = runExtraction(job({ manifestPath: manifest, outPath: out }), 'text');
    expect(result.nRecords).toBe(3);
    const bank = loadBank(readFileSync(out));
    expect(bank.dim).toBe(8);
    expect(bank.modality).toBe(Modality.Text);
    expect(bank.records.map((r) => r.id)).toEqual(['c0', 'c1', 'c2']);
    // Same caption under two ids embeds identically.
    expect(Array.from(bank.records[0]!.vector)).toEqual(Array.from(bank.records[2]!.vector));
    expect(Array.from(bank.records[0]!.vector)).not.toEqual(Array.from(bank.records[1]!.vector));
  });

  it('is deterministic across reruns', () => {
    const manifest = join(dir, 'texts2.tsv');
    writeFileSync(manifest, 'c0\tsome caption\nc1\tanother caption\n');
    const outA = join(dir, 'run-a.ceb1');
    const outB = join(dir, 'run-b.ceb1');
    runExtraction(job({ manifestPath: manifest, outPath: outA }), 'text');
    runExtraction(job({ manifestPath: manifest, outPath: outB }), 'text');
    expect(readFileSync(outA).equals(readFileSync(outB))).toBe(true);
  });

  it('does not depend on batch size', () => {
    const manifest = join(dir, 'texts3.tsv');
    writeFileSync(manifest, 'c0\tone\nc1\ttwo\nc2\tthree\nc3\tfour\nc4\tfive\n');
    const outs = [1, 2, 100].map((batchSize) => {
      const out = join(dir, `batch-${batchSize}.ceb1`);
      runExtraction(job({ manifestPath: manifest, outPath: out, batchSize }), 'text');
      return readFileSync(out);
    });
    expect(outs[0]!.equals(outs[1]!)).toBe(true);
    expect(outs[0]!.equals(outs[2]!)).toBe(true);
  });
});

describe('image extraction', () => {
  it('embeds file contents; the same file under two ids gives identical vectors', () => {
    const manifest = join(dir, 'images.tsv');
    writeFileSync(
      manifest,
      `a\t${join(dir, 'img-a.bin')}\nb\t${join(dir, 'img-b.bin')}\na-again\t${join(dir, 'img-a.bin')}\n`,
    );
    const out = join(dir, 'images.ceb1');
    const result = runExtraction(job({ manifestPath: manifest, outPath: out }), 'image');
    expect(result.modality).toBe(Modality.Image);
    const bank = loadBank(readFileSync(out));
    expect(bank.records.map((r) => r.id)).toEqual(['a', 'b', 'a-again']);
    expect(Array.from(bank.records[0]!.vector)).toEqual(Array.from(bank.records[2]!.vector));
    expect(Array.from(bank.records[0]!.vector)).not.toEqual(Array.from(bank.records[1]!.vector));
  });

  it('names every unreadable image id and writes nothing', () => {
    const manifest = join(dir, 'missing.tsv');
    writeFileSync(
      manifest,
      `a\t${join(dir, 'img-a.bin')}\ngone1\t${join(dir, 'no-such-1.bin')}\ngone2\t${join(dir, 'no-such-2.bin')}\n`,
    );
    const out = join(dir, 'missing.ceb1');
    try {
      runExtraction(job({ manifestPath: manifest, outPath: out }), 'image');
      expect.unreachable('extraction should have failed');
    } catch (e) {
      expect(e).toBeInstanceOf(MissingFile);
      expect((e as Error).message).toMatch(/'gone1' \(line 2\)/);
      expect((e as Error).message).toMatch(/'gone2' \(line 3\)/);
    }
    expect(existsSync(out)).toBe(false);
  });
});

describe('job validation', () => {
  it('rejects duplicate manifest ids before encoding', () => {
    const manifest = join(dir, 'dup.tsv');
    writeFileSync(manifest, 'a\tone\na\ttwo\n');
    const out = join(dir, 'dup.ceb1');
    expect(() => runExtraction(job({ manifestPath: manifest, outPath: out }), 'text')).toThrow(DuplicateId);
    expect(existsSync(out)).toBe(false);
  });

  it('aborts on an unavailable checkpoint before touching the manifest', () => {
    expect(() =>
      runExtraction(job({ modelId: 'clip-vit-large-patch14', manifestPath: join(dir, 'no-such-manifest.tsv') }), 'text'),
    ).toThrow(CheckpointUnavailable);
  });

  it('reports an unreadable manifest', () => {
    expect(() => runExtraction(job({ manifestPath: join(dir, 'no-such-manifest.tsv') }), 'text')).toThrow(MissingFile);
  });

  it('rejects a non-positive batch size', () => {
    expect(() => runExtraction(job({ batchSize: 0 }), 'text')).toThrow(ExtractError);
  });
});
