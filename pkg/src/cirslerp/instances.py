"""Benchmark instances (one composed-retrieval query each) and JSONL io.

Instance file format: JSON lines, one object per query with keys query_id,
reference_id, caption_id (or a raw caption for extractor-produced files),
target_ids, and optional subset_ids.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .errors import BadInstance, MalformedInput


@dataclass(frozen=True)
class BenchmarkInstance:
    """One composed-retrieval query: reference image, caption, ground truth."""

    query_id: str
    reference_id: str
    target_ids: tuple[str, ...]
    caption_id: str | None = None
    caption: str | None = None
    subset_ids: tuple[str, ...] | None = None

    def __post_init__(self):
        if not self.query_id:
            raise BadInstance("query_id must be non-empty")
        if not self.reference_id:
            raise BadInstance(f"{self.query_id}: reference_id must be non-empty")
        if self.caption_id is None and self.caption is None:
            raise BadInstance(f"{self.query_id}: needs caption_id or caption")
        if not self.target_ids:
            raise BadInstance(f"{self.query_id}: target_ids must be non-empty")
        if len(set(self.target_ids)) != len(self.target_ids):
            raise BadInstance(f"{self.query_id}: target_ids must be distinct")
        if self.subset_ids is not None:
            missing = set(self.target_ids) - set(self.subset_ids)
            if missing:
                raise BadInstance(
                    f"{self.query_id}: target_ids not contained in subset_ids: {sorted(missing)}"
                )
            if self.reference_id in self.target_ids:
                raise BadInstance(
                    f"{self.query_id}: reference_id may not be a target in a subset instance"
                )

    @property
    def text_key(self) -> str:
        """Id under which this query's caption embedding is stored."""
        return self.caption_id if self.caption_id is not None else self.query_id

    def to_json_obj(self) -> dict:
        obj: dict = {
            "query_id": self.query_id,
            "reference_id": self.reference_id,
            "target_ids": list(self.target_ids),
        }
        if self.caption_id is not None:
            obj["caption_id"] = self.caption_id
        if self.caption is not None:
            obj["caption"] = self.caption
        if self.subset_ids is not None:
            obj["subset_ids"] = list(self.subset_ids)
        return obj


def _instance_from_obj(obj: dict, where: str) -> BenchmarkInstance:
    if not isinstance(obj, dict):
        raise MalformedInput(f"{where}: expected a JSON object")
    try:
        return BenchmarkInstance(
            query_id=str(obj["query_id"]),
            reference_id=str(obj["reference_id"]),
            target_ids=tuple(str(t) for t in obj["target_ids"]),
            caption_id=None if obj.get("caption_id") is None else str(obj["caption_id"]),
            caption=None if obj.get("caption") is None else str(obj["caption"]),
            subset_ids=None if obj.get("subset_ids") is None else tuple(str(s) for s in obj["subset_ids"]),
        )
    except KeyError as e:
        raise MalformedInput(f"{where}: missing key {e.args[0]!r}") from None
    except BadInstance as e:
        raise BadInstance(f"{where}: {e}") from None


def load_instances(source: str | Path | Iterable[str]) -> list[BenchmarkInstance]:
    """Parse a JSONL instance file; errors carry line numbers."""
    if isinstance(source, (str, Path)):
        text = Path(source).read_text(encoding="utf-8").splitlines()
    else:
        text = list(source)
    instances = []
    for lineno, line in enumerate(text, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as e:
            raise MalformedInput(f"line {lineno}: invalid JSON ({e.msg})") from None
        instances.append(_instance_from_obj(obj, f"line {lineno}"))
    return instances


def dump_instances(instances: Sequence[BenchmarkInstance], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for inst in instances:
            f.write(json.dumps(inst.to_json_obj(), sort_keys=True) + "\n")


def load_pairs(source: str | Path | Iterable[str]) -> list[tuple[int, str | None, str, str]]:
    """Parse an image/text pairing file into (line, query_id, image_id, text_id).

    Two formats: a benchmark instance JSONL file (query_id, reference_id,
    and caption_id or caption are used), or a TSV with rows of either
    query_id <TAB> image_id <TAB> text_id or just image_id <TAB> text_id,
    in which case query_id is None. Blank lines and # comments are skipped.
    """
    if isinstance(source, (str, Path)):
        lines = Path(source).read_text(encoding="utf-8").splitlines()
    else:
        lines = list(source)
    first = next((ln for ln in lines if ln.strip() and not ln.lstrip().startswith("#")), "")
    if first.lstrip().startswith("{"):
        out_jsonl: list[tuple[int, str | None, str, str]] = []
        for lineno, line in enumerate(lines, start=1):
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise MalformedInput(f"line {lineno}: invalid JSON ({e.msg})") from None
            inst = _instance_from_obj(obj, f"line {lineno}")
            out_jsonl.append((lineno, inst.query_id, inst.reference_id, inst.text_key))
        if not out_jsonl:
            raise MalformedInput("pairs file has no entries")
        return out_jsonl
    out: list[tuple[int, str | None, str, str]] = []
    for lineno, line in enumerate(lines, start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        cols = line.rstrip("\n").split("\t")
        if len(cols) == 3:
            out.append((lineno, cols[0], cols[1], cols[2]))
        elif len(cols) == 2:
            out.append((lineno, None, cols[0], cols[1]))
        else:
            raise MalformedInput(f"line {lineno}: expected 2 or 3 tab-separated columns, got {len(cols)}")
    if not out:
        raise MalformedInput("pairs file has no entries")
    return out
