#!/usr/bin/env node
/** Command-line entry: extract embedding banks, convert benchmark annotations. */

import { readFileSync, realpathSync, writeFileSync } from 'node:fs';
import { pathToFileURL } from 'node:url';
import { parseArgs } from 'node:util';

import { Modality } from './ceb1.js';
import { Benchmark, CaptionMode, convertBenchmark, formatInstances } from './convert.js';
import { DEFAULT_DIM, DEFAULT_MODEL } from './encoder.js';
import { ExtractError, MalformedInput } from './errors.js';
import { JobKind, runExtraction } from './extract.js';
import { formatManifest } from './manifest.js';

const USAGE = `usage:
  cir-extract extract-images <manifest.tsv> <out.ceb1> [--model ID] [--dim N] [--batch-size N] [--device HINT]
  cir-extract extract-texts  <manifest.tsv> <out.ceb1> [--model ID] [--dim N] [--batch-size N] [--device HINT]
  cir-extract convert <cirr|circo|fashioniq> <annotations.json> <out.jsonl>
                      [--captions-out FILE] [--id-prefix PREFIX] [--caption-mode concat|first|second]

Manifests are TSV rows of id <TAB> image-path (images) or id <TAB> caption
(texts). Banks are written in the engine's CEB1 format; instance files in
its JSON-lines format. Exit codes: 0 ok, 1 domain error, 2 malformed input.`;

function parsePositiveInt(raw: string, flag: string): number {
  if (!/^\d+$/.test(raw) || Number.parseInt(raw, 10) < 1) {
    throw new MalformedInput(`${flag}: expected a positive integer, got '${raw}'`);
  }
  return Number.parseInt(raw, 10);
}

function runExtract(kind: JobKind, argv: string[]): Record<string, unknown> {
  const { values, positionals } = parseArgs({
    args: argv,
    options: {
      model: { type: 'string', default: DEFAULT_MODEL },
      dim: { type: 'string', default: String(DEFAULT_DIM) },
      'batch-size': { type: 'string', default: '32' },
      device: { type: 'string' },
    },
    allowPositionals: true,
  });
  if (positionals.length !== 2) {
    throw new MalformedInput(`expected <manifest.tsv> <out.ceb1>, got ${positionals.length} positional argument(s)`);
  }
  const result = runExtraction(
    {
      modelId: values.model!,
      manifestPath: positionals[0]!,
      outPath: positionals[1]!,
      dim: parsePositiveInt(values.dim!, '--dim'),
      batchSize: parsePositiveInt(values['batch-size']!, '--batch-size'),
      device: values.device,
    },
    kind,
  );
  return {
    out_bank: result.outPath,
    n_records: result.nRecords,
    dim: result.dim,
    modality: Modality[result.modality]!.toLowerCase(),
    model: values.model,
  };
}

function runConvert(argv: string[]): Record<string, unknown> {
  const { values, positionals } = parseArgs({
    args: argv,
    options: {
      'captions-out': { type: 'string' },
      'id-prefix': { type: 'string' },
      'caption-mode': { type: 'string', default: 'concat' },
    },
    allowPositionals: true,
  });
  if (positionals.length !== 3) {
    throw new MalformedInput(`expected <benchmark> <annotations.json> <out.jsonl>, got ${positionals.length} positional argument(s)`);
  }
  const benchmark = positionals[0]!;
  if (benchmark !== 'cirr' && benchmark !== 'circo' && benchmark !== 'fashioniq') {
    throw new MalformedInput(`unknown benchmark '${benchmark}' (expected cirr, circo, or fashioniq)`);
  }
  const mode = values['caption-mode']!;
  if (mode !== 'concat' && mode !== 'first' && mode !== 'second') {
    throw new MalformedInput(`--caption-mode: expected concat, first, or second, got '${mode}'`);
  }
  let jsonText: string;
  try {
    jsonText = readFileSync(positionals[1]!, 'utf-8');
  } catch (e) {
    throw new ExtractError(`cannot read ${positionals[1]}: ${(e as Error).message}`);
  }
  const conversion = convertBenchmark(benchmark as Benchmark, jsonText, {
    idPrefix: values['id-prefix'],
    captionMode: mode as CaptionMode,
  });
  writeFileSync(positionals[2]!, formatInstances(conversion.instances));
  const out: Record<string, unknown> = {
    out_instances: positionals[2],
    n_instances: conversion.instances.length,
    benchmark,
  };
  if (values['captions-out'] !== undefined) {
    writeFileSync(values['captions-out'], formatManifest(conversion.captions));
    out.captions_out = values['captions-out'];
    out.n_captions = conversion.captions.length;
  }
  return out;
}

export function main(argv: string[]): number {
  const [command, ...rest] = argv;
  try {
    let result: Record<string, unknown>;
    if (command === 'extract-images') {
      result = runExtract('image', rest);
    } else if (command === 'extract-texts') {
      result = runExtract('text', rest);
    } else if (command === 'convert') {
      result = runConvert(rest);
    } else if (command === undefined || command === '--help' || command === '-h') {
      console.log(USAGE);
      return command === undefined ? 2 : 0;
    } else {
      throw new MalformedInput(`unknown command '${command}'`);
    }
    console.log(JSON.stringify(result, null, 2));
    return 0;
  } catch (e) {
    // parseArgs rejects unknown flags with ERR_PARSE_ARGS_* codes.
    if (e instanceof Error && (e as NodeJS.ErrnoException).code?.startsWith('ERR_PARSE_ARGS')) {
      console.error(`error: ${e.message}`);
      return 2;
    }
    if (e instanceof MalformedInput) {
      console.error(`error: ${e.name}: ${e.message}`);
      return 2;
    }
    if (e instanceof ExtractError) {
      console.error(`error: ${e.name}: ${e.message}`);
      return 1;
    }
    throw e;
  }
}

function invokedDirectly(): boolean {
  if (process.argv[1] === undefined) {
    return false;
  }
  try {
    // realpath resolves the npm bin symlink to this file.
    return import.meta.url === pathToFileURL(realpathSync(process.argv[1])).href;
  } catch {
    return false;
  }
}

if (invokedDirectly()) {
  process.exit(main(process.argv.slice(2)));
}
