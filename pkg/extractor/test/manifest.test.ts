import { describe, expect, it } from 'vitest';

import { DuplicateId, SchemaMismatch } from '../src/errors.js';
import { formatManifest, parseManifest } from '../src/manifest.js';

describe('parseManifest', () => {
  it('parses id and payload with line numbers', () => {
    const entries = parseManifest('a\timg/a.jpg\nb\timg/b.jpg\n');
    expect(entries).toEqual([
      { lineno: 1, id: 'a', payload: 'img/a.jpg' },
      { lineno: 2, id: 'b', payload: 'img/b.jpg' },
    ]);
  });

  it('skips blank lines and comments, tolerates CRLF', () => {
    const entries = parseManifest('# header\n\na\tone\r\n  # indented comment\nb\ttwo\n');
    expect(entries.map((e) => [e.lineno, e.id, e.payload])).toEqual([
      [3, 'a', 'one'],
      [5, 'b', 'two'],
    ]);
  });

  it('splits on the first tab only, so captions may contain tabs', () => {
    const entries = parseManifest('c1\ta shirt\twith stripes\n');
    expect(entries[0]!.payload).toBe('a shirt\twith stripes');
  });

  it('rejects rows without a tab, naming the line', () => {
    expect(() => parseManifest('a\tok\nno-tab-here\n')).toThrow(SchemaMismatch);
    expect(() => parseManifest('a\tok\nno-tab-here\n')).toThrow(/line 2/);
  });

  it('rejects an empty id or empty payload', () => {
    expect(() => parseManifest('\tpayload\n')).toThrow(SchemaMismatch);
    expect(() => parseManifest('id\t\n')).toThrow(SchemaMismatch);
  });

  it('rejects duplicate ids, naming both lines', () => {
    expect(() => parseManifest('a\tone\nb\ttwo\na\tthree\n')).toThrow(DuplicateId);
    expect(() => parseManifest('a\tone\nb\ttwo\na\tthree\n')).toThrow(/line 3.*'a'.*line 1/);
  });

  it('rejects an empty manifest', () => {
    expect(() => parseManifest('# only a comment\n')).toThrow(SchemaMismatch);
  });
});

describe('formatManifest', () => {
  it('round trips through parseManifest', () => {
    const rows = [
      { id: 'c0', payload: 'is red and shorter' },
      { id: 'c1', payload: 'has\ta tab' },
    ];
    const parsed = parseManifest(formatManifest(rows));
    expect(parsed.map((e) => ({ id: e.id, payload: e.payload }))).toEqual(rows);
  });

  it('rejects ids with tabs and payloads with newlines', () => {
    expect(() => formatManifest([{ id: 'a\tb', payload: 'x' }])).toThrow(SchemaMismatch);
    expect(() => formatManifest([{ id: 'a', payload: 'x\ny' }])).toThrow(SchemaMismatch);
  });
});
