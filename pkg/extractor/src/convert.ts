/** Benchmark annotation converters: official JSON in, instance JSONL out.
 *
 * Each converter also collects (caption_id, caption) rows so a text bank
 * can be extracted for the instances it emitted. Conversion is lossless
 * and deterministic: annotation order is kept, objects are written with
 * sorted keys, and reruns produce byte-identical files.
 */

import { BadInstance, SchemaMismatch } from './errors.js';

export type Benchmark = 'cirr' | 'circo' | 'fashioniq';
export type CaptionMode = 'concat' | 'first' | 'second';

export interface ConvertedInstance {
  query_id: string;
  reference_id: string;
  target_ids: string[];
  caption_id: string;
  caption: string;
  subset_ids?: string[];
  /** FashionIQ only: the unmodified per-triplet caption list. */
  source_captions?: string[];
}

export interface Conversion {
  instances: ConvertedInstance[];
  /** One row per instance: caption_id and the text to embed for it. */
  captions: Array<{ id: string; payload: string }>;
}

export interface ConvertOptions {
  /** Prefix for generated query/caption ids; defaults to the benchmark name. */
  idPrefix?: string;
  /** FashionIQ caption handling; default concat. */
  captionMode?: CaptionMode;
}

function asArray(parsed: unknown, what: string): unknown[] {
  if (!Array.isArray(parsed)) {
    throw new SchemaMismatch(`${what}: expected a top-level JSON array`);
  }
  return parsed;
}

function asObject(value: unknown, where: string): Record<string, unknown> {
  if (typeof value !== 'object' || value === null || Array.isArray(value)) {
    throw new SchemaMismatch(`${where}: expected a JSON object`);
  }
  return value as Record<string, unknown>;
}

function getString(obj: Record<string, unknown>, key: string, where: string): string {
  const value = obj[key];
  if (typeof value !== 'string' || value.length === 0) {
    throw new SchemaMismatch(`${where}: missing or non-string '${key}'`);
  }
  return value;
}

/** Ids appear as strings (CIRR image names) or numbers (COCO image ids). */
function getId(value: unknown, where: string): string {
  if (typeof value === 'string' && value.length > 0) {
    return value;
  }
  if (typeof value === 'number' && Number.isFinite(value)) {
    return String(value);
  }
  throw new SchemaMismatch(`${where}: expected a string or numeric id`);
}

function distinct(ids: string[], where: string): void {
  if (new Set(ids).size !== ids.length) {
    throw new BadInstance(`${where}: ids must be distinct`);
  }
}

/** Captions go into a TSV manifest, which cannot hold raw newlines. */
function manifestText(caption: string): string {
  return caption.replace(/[\r\n]+/g, ' ');
}

function convertCirr(annotations: unknown[], prefix: string): Conversion {
  const instances: ConvertedInstance[] = [];
  const captions: Conversion['captions'] = [];
  for (let i = 0; i < annotations.length; i++) {
    const where = `annotations[${i}]`;
    const ann = asObject(annotations[i], where);
    const pairid = getId(ann.pairid, `${where}.pairid`);
    const reference = getId(ann.reference, `${where}.reference`);
    const target = getId(ann.target_hard, `${where}.target_hard`);
    const caption = getString(ann, 'caption', where);
    const imgSet = asObject(ann.img_set, `${where}.img_set`);
    if (!Array.isArray(imgSet.members) || imgSet.members.length === 0) {
      throw new SchemaMismatch(`${where}.img_set.members: expected a non-empty array`);
    }
    const members = imgSet.members.map((m, j) => getId(m, `${where}.img_set.members[${j}]`));
    distinct(members, `${where}.img_set.members`);
    if (!members.includes(target)) {
      throw new BadInstance(`${where} (pairid ${pairid}): target_hard '${target}' not in img_set.members`);
    }
    if (target === reference) {
      throw new BadInstance(`${where} (pairid ${pairid}): target_hard equals reference`);
    }
    const captionId = `${prefix}-c${pairid}`;
    instances.push({
      query_id: `${prefix}-q${pairid}`,
      reference_id: reference,
      target_ids: [target],
      caption_id: captionId,
      caption,
      subset_ids: members,
    });
    captions.push({ id: captionId, payload: manifestText(caption) });
  }
  return { instances, captions };
}

function convertCirco(annotations: unknown[], prefix: string): Conversion {
  const instances: ConvertedInstance[] = [];
  const captions: Conversion['captions'] = [];
  for (let i = 0; i < annotations.length; i++) {
    const where = `annotations[${i}]`;
    const ann = asObject(annotations[i], where);
    const id = getId(ann.id, `${where}.id`);
    const reference = getId(ann.reference_img_id, `${where}.reference_img_id`);
    const target = getId(ann.target_img_id, `${where}.target_img_id`);
    const caption = getString(ann, 'relative_caption', where);
    if (!Array.isArray(ann.gt_img_ids) || ann.gt_img_ids.length === 0) {
      throw new SchemaMismatch(`${where}.gt_img_ids: expected a non-empty array`);
    }
    const targets = ann.gt_img_ids.map((t, j) => getId(t, `${where}.gt_img_ids[${j}]`));
    distinct(targets, `${where}.gt_img_ids`);
    if (!targets.includes(target)) {
      throw new BadInstance(`${where} (id ${id}): target_img_id '${target}' not in gt_img_ids`);
    }
    const captionId = `${prefix}-c${id}`;
    instances.push({
      query_id: `${prefix}-q${id}`,
      reference_id: reference,
      target_ids: targets,
      caption_id: captionId,
      caption,
    });
    captions.push({ id: captionId, payload: manifestText(caption) });
  }
  return { instances, captions };
}

function fashionIqCaption(rawCaptions: string[], mode: CaptionMode, where: string): string {
  if (mode === 'first') {
    return rawCaptions[0]!;
  }
  if (mode === 'second') {
    if (rawCaptions.length < 2) {
      throw new BadInstance(`${where}: caption mode 'second' needs two captions, got ${rawCaptions.length}`);
    }
    return rawCaptions[1]!;
  }
  return rawCaptions.join(' and ');
}

function convertFashionIq(annotations: unknown[], prefix: string, mode: CaptionMode): Conversion {
  const instances: ConvertedInstance[] = [];
  const captions: Conversion['captions'] = [];
  for (let i = 0; i < annotations.length; i++) {
    const where = `annotations[${i}]`;
    const ann = asObject(annotations[i], where);
    const target = getId(ann.target, `${where}.target`);
    const reference = getId(ann.candidate, `${where}.candidate`);
    if (!Array.isArray(ann.captions) || ann.captions.length === 0) {
      throw new SchemaMismatch(`${where}.captions: expected a non-empty array`);
    }
    const rawCaptions = ann.captions.map((c, j) => {
      if (typeof c !== 'string' || c.length === 0) {
        throw new SchemaMismatch(`${where}.captions[${j}]: expected a non-empty string`);
      }
      return c;
    });
    const caption = fashionIqCaption(rawCaptions, mode, where);
    const captionId = `${prefix}-c${i}`;
    instances.push({
      query_id: `${prefix}-q${i}`,
      reference_id: reference,
      target_ids: [target],
      caption_id: captionId,
      caption,
      source_captions: rawCaptions,
    });
    captions.push({ id: captionId, payload: manifestText(caption) });
  }
  return { instances, captions };
}

/** Convert one benchmark's annotation JSON text. */
export function convertBenchmark(benchmark: Benchmark, jsonText: string, options: ConvertOptions = {}): Conversion {
  let parsed: unknown;
  try {
    parsed = JSON.parse(jsonText);
  } catch (e) {
    throw new SchemaMismatch(`invalid JSON: ${(e as Error).message}`);
  }
  const annotations = asArray(parsed, benchmark);
  const prefix = options.idPrefix ?? benchmark;
  if (benchmark === 'cirr') {
    return convertCirr(annotations, prefix);
  }
  if (benchmark === 'circo') {
    return convertCirco(annotations, prefix);
  }
  return convertFashionIq(annotations, prefix, options.captionMode ?? 'concat');
}

/** Render instances as JSONL with sorted keys, one line each. */
export function formatInstances(instances: ConvertedInstance[]): string {
  let out = '';
  for (const inst of instances) {
    const obj: Record<string, unknown> = {
      caption: inst.caption,
      caption_id: inst.caption_id,
      query_id: inst.query_id,
      reference_id: inst.reference_id,
    };
    if (inst.source_captions !== undefined) {
      obj.source_captions = inst.source_captions;
    }
    if (inst.subset_ids !== undefined) {
      obj.subset_ids = inst.subset_ids;
    }
    obj.target_ids = inst.target_ids;
    out += JSON.stringify(obj) + '\n';
  }
  return out;
}
