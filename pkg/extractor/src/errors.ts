/** Error types, split the same way the engine splits its exit codes. */

/** Domain failure in otherwise well-formed input (exit code 1). */
export class ExtractError extends Error {
  constructor(message: string) {
    super(message);
    this.name = new.target.name;
  }
}

/** Structurally unparseable input (exit code 2). */
export class MalformedInput extends ExtractError {}

export class BadMagic extends MalformedInput {}
export class TruncatedFile extends MalformedInput {}
export class BadHeader extends MalformedInput {}
export class BadRecord extends MalformedInput {}
export class TrailingData extends MalformedInput {}
export class SchemaMismatch extends MalformedInput {}

export class DuplicateId extends ExtractError {}
export class NonFinite extends ExtractError {}
export class NormDrift extends ExtractError {}
export class MissingFile extends ExtractError {}
export class CheckpointUnavailable extends ExtractError {}
export class BadInstance extends ExtractError {}
