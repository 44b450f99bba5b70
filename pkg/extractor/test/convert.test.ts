import { describe, expect, it } from 'vitest';

import { convertBenchmark, formatInstances } from '../src/convert.js';
import { BadInstance, SchemaMismatch } from '../src/errors.js';

function cirrAnnotations() {
  return [
    {
      pairid: 101,
      reference: 'dev-12-0-img0',
      target_hard: 'dev-40-1-img1',
      target_soft: { 'dev-40-1-img1': 1.0 },
      caption: 'remove one dog and add a hat',
      img_set: {
        id: 3,
        members: ['dev-12-0-img0', 'dev-40-1-img1', 'dev-7-2-img0', 'dev-9-0-img1', 'dev-3-3-img0', 'dev-5-1-img1'],
      },
    },
    {
      pairid: 102,
      reference: 'dev-2-0-img1',
      target_hard: 'dev-8-0-img0',
      target_soft: { 'dev-8-0-img0': 1.0 },
      caption: 'same breed, outdoors',
      img_set: {
        id: 4,
        members: ['dev-8-0-img0', 'dev-1-1-img0', 'dev-4-2-img1', 'dev-6-0-img0', 'dev-2-2-img1', 'dev-11-0-img0'],
      },
    },
  ];
}

describe('cirr conversion', () => {
  it('maps the labeled candidate set onto subset_ids', () => {
    const { instances, captions } = convertBenchmark('cirr', JSON.stringify(cirrAnnotations()));
    expect(instances.length).toBe(2);
    const first = instances[0]!;
    expect(first.query_id).toBe('cirr-q101');
    expect(first.caption_id).toBe('cirr-c101');
    expect(first.reference_id).toBe('dev-12-0-img0');
    expect(first.target_ids).toEqual(['dev-40-1-img1']);
    expect(first.subset_ids!.length).toBe(6);
    expect(first.subset_ids).toContain('dev-40-1-img1');
    // The reference sits in the candidate set in the source annotations
    // and stays there; the engine drops it when reranking.
    expect(first.subset_ids).toContain('dev-12-0-img0');
    expect(captions.map((c) => c.id)).toEqual(['cirr-c101', 'cirr-c102']);
    expect(captions[0]!.payload).toBe('remove one dog and add a hat');
  });

  it('honors a custom id prefix', () => {
    const { instances } = convertBenchmark('cirr', JSON.stringify(cirrAnnotations()), { idPrefix: 'val' });
    expect(instances[0]!.query_id).toBe('val-q101');
    expect(instances[0]!.caption_id).toBe('val-c101');
  });

  it('rejects a target outside the candidate set, naming the pair', () => {
    const bad = cirrAnnotations();
    bad[0]!.img_set.members = bad[0]!.img_set.members.filter((m) => m !== bad[0]!.target_hard);
    bad[0]!.img_set.members.push('dev-99-0-img0');
    expect(() => convertBenchmark('cirr', JSON.stringify(bad))).toThrow(BadInstance);
    expect(() => convertBenchmark('cirr', JSON.stringify(bad))).toThrow(/pairid 101/);
  });

  it('rejects a target equal to the reference', () => {
    const bad = cirrAnnotations();
    // The reference is already a candidate-set member, so containment holds.
    bad[0]!.target_hard = bad[0]!.reference;
    expect(() => convertBenchmark('cirr', JSON.stringify(bad))).toThrow(BadInstance);
  });

  it('rejects duplicate candidate-set members', () => {
    const bad = cirrAnnotations();
    bad[0]!.img_set.members[2] = bad[0]!.img_set.members[1]!;
    expect(() => convertBenchmark('cirr', JSON.stringify(bad))).toThrow(BadInstance);
  });

  it('rejects structural schema problems with an index diagnostic', () => {
    const noImgSet: Record<string, unknown>[] = cirrAnnotations();
    delete noImgSet[1]!.img_set;
    expect(() => convertBenchmark('cirr', JSON.stringify(noImgSet))).toThrow(SchemaMismatch);
    expect(() => convertBenchmark('cirr', JSON.stringify(noImgSet))).toThrow(/annotations\[1\]/);
    expect(() => convertBenchmark('cirr', '{"not": "an array"}')).toThrow(SchemaMismatch);
    expect(() => convertBenchmark('cirr', 'not json at all')).toThrow(SchemaMismatch);
  });
});

describe('circo conversion', () => {
  const annotations = [
    {
      id: 0,
      reference_img_id: 25633,
      target_img_id: 65722,
      relative_caption: 'has three dogs instead of one',
      gt_img_ids: [65722, 4221, 90381],
      shared_concept: 'dog',
    },
  ];

  it('keeps every ground-truth id as a target, stringifying numbers', () => {
    const { instances } = convertBenchmark('circo', JSON.stringify(annotations));
    const inst = instances[0]!;
    expect(inst.query_id).toBe('circo-q0');
    expect(inst.reference_id).toBe('25633');
    expect(inst.target_ids).toEqual(['65722', '4221', '90381']);
    expect(inst.subset_ids).toBeUndefined();
    expect(inst.caption).toBe('has three dogs instead of one');
  });

  it('rejects a target_img_id missing from gt_img_ids', () => {
    const bad = structuredClone(annotations);
    bad[0]!.gt_img_ids = [4221, 90381];
    expect(() => convertBenchmark('circo', JSON.stringify(bad))).toThrow(BadInstance);
  });

  it('rejects empty or duplicated ground truths', () => {
    const empty = structuredClone(annotations);
    empty[0]!.gt_img_ids = [];
    expect(() => convertBenchmark('circo', JSON.stringify(empty))).toThrow(SchemaMismatch);
    const dup = structuredClone(annotations);
    dup[0]!.gt_img_ids = [65722, 65722];
    expect(() => convertBenchmark('circo', JSON.stringify(dup))).toThrow(BadInstance);
  });
});

describe('fashioniq conversion', () => {
  const annotations = [
    { target: 'B00A3EPFGS', candidate: 'B00CLEPYGU', captions: ['is red', 'has short sleeves'] },
    { target: 'B008Y1Q4V4', candidate: 'B00A3EPFGS', captions: ['is darker', 'is a dress'] },
  ];

  it('emits one instance per annotation with both captions kept', () => {
    const { instances, captions } = convertBenchmark('fashioniq', JSON.stringify(annotations));
    expect(instances.length).toBe(annotations.length);
    const inst = instances[0]!;
    expect(inst.query_id).toBe('fashioniq-q0');
    expect(inst.reference_id).toBe('B00CLEPYGU');
    expect(inst.target_ids).toEqual(['B00A3EPFGS']);
    expect(inst.caption).toBe('is red and has short sleeves');
    expect(inst.source_captions).toEqual(['is red', 'has short sleeves']);
    expect(captions[0]!.payload).toBe('is red and has short sleeves');
  });

  it('supports first and second caption modes', () => {
    const first = convertBenchmark('fashioniq', JSON.stringify(annotations), { captionMode: 'first' });
    expect(first.instances[0]!.caption).toBe('is red');
    const second = convertBenchmark('fashioniq', JSON.stringify(annotations), { captionMode: 'second' });
    expect(second.instances[0]!.caption).toBe('has short sleeves');
  });

  it('rejects second mode when a triplet has one caption', () => {
    const single = [{ target: 't', candidate: 'c', captions: ['only one'] }];
    expect(() => convertBenchmark('fashioniq', JSON.stringify(single), { captionMode: 'second' })).toThrow(BadInstance);
    expect(convertBenchmark('fashioniq', JSON.stringify(single)).instances[0]!.caption).toBe('only one');
  });

  it('normalizes newlines for the caption manifest but not the instance', () => {
    const annotated = [{ target: 't', candidate: 'c', captions: ['line one\nline two'] }];
    const { instances, captions } = convertBenchmark('fashioniq', JSON.stringify(annotated));
    expect(instances[0]!.caption).toBe('line one\nline two');
    expect(captions[0]!.payload).toBe('line one line two');
  });
});

describe('formatInstances', () => {
  it('writes sorted keys and is deterministic across reruns', () => {
    const run = () => formatInstances(convertBenchmark('cirr', JSON.stringify(cirrAnnotations())).instances);
    const text = run();
    expect(run()).toBe(text);
    const lines = text.trimEnd().split('\n');
    expect(lines.length).toBe(2);
    const keys = Object.keys(JSON.parse(lines[0]!));
    expect(keys).toEqual([...keys].sort());
  });

  it('keeps annotation order', () => {
    const text = formatInstances(convertBenchmark('circo', JSON.stringify([
      { id: 5, reference_img_id: 1, target_img_id: 2, relative_caption: 'b', gt_img_ids: [2] },
      { id: 3, reference_img_id: 1, target_img_id: 2, relative_caption: 'a', gt_img_ids: [2] },
    ])).instances);
    const ids = text.trimEnd().split('\n').map((line) => JSON.parse(line).query_id);
    expect(ids).toEqual(['circo-q5', 'circo-q3']);
  });
});
