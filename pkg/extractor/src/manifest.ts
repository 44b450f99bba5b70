/** Manifest files: TSV rows of id <TAB> image-path-or-caption. */

import { DuplicateId, SchemaMismatch } from './errors.js';

export interface ManifestEntry {
  lineno: number;
  id: string;
  /** Image path for image jobs, caption text for text jobs. */
  payload: string;
}

/** Parse manifest TSV; blank lines and # comments are skipped.
 *
 * Splits on the first tab only, so captions may themselves contain tabs.
 * Duplicate ids are rejected here, before any inference runs.
 */
export function parseManifest(text: string): ManifestEntry[] {
  const entries: ManifestEntry[] = [];
  const seen = new Map<string, number>();
  const lines = text.split('\n');
  for (let i = 0; i < lines.length; i++) {
    const lineno = i + 1;
    const line = lines[i]!.replace(/\r$/, '');
    if (!line.trim() || line.trimStart().startsWith('#')) {
      continue;
    }
    const tab = line.indexOf('\t');
    if (tab <= 0 || tab === line.length - 1) {
      throw new SchemaMismatch(`line ${lineno}: expected id <TAB> payload`);
    }
    const id = line.slice(0, tab);
    const payload = line.slice(tab + 1);
    const first = seen.get(id);
    if (first !== undefined) {
      throw new DuplicateId(`line ${lineno}: duplicate id '${id}' (first seen on line ${first})`);
    }
    seen.set(id, lineno);
    entries.push({ lineno, id, payload });
  }
  if (entries.length === 0) {
    throw new SchemaMismatch('manifest has no entries');
  }
  return entries;
}

/** Render (id, caption) rows back to manifest TSV. */
export function formatManifest(rows: Array<{ id: string; payload: string }>): string {
  let out = '';
  for (const row of rows) {
    if (row.id.includes('\t') || row.id.includes('\n') || row.payload.includes('\n')) {
      throw new SchemaMismatch(`id '${row.id}': ids may not contain tabs and payloads may not contain newlines`);
    }
    out += `${row.id}\t${row.payload}\n`;
  }
  return out;
}
