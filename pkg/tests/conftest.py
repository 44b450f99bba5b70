"""Shared fixtures and helpers for the test suite."""

from __future__ import annotations

import json

import numpy as np
import pytest

from cirslerp.bank import EmbeddingBank, Modality, write_bank


def unit(v: np.ndarray) -> np.ndarray:
    return np.asarray(v, dtype=np.float64) / np.linalg.norm(v)


def unit_rows(rng: np.random.Generator, n: int, dim: int) -> np.ndarray:
    m = rng.standard_normal((n, dim))
    return m / np.linalg.norm(m, axis=1, keepdims=True)


def make_bank(ids, vectors, modality: Modality = Modality.UNSPECIFIED) -> EmbeddingBank:
    return EmbeddingBank.from_vectors(list(zip(ids, vectors)), modality=modality)


def write_bank_file(path, ids, vectors, modality: Modality = Modality.UNSPECIFIED):
    bank = make_bank(ids, vectors, modality)
    write_bank(bank, path)
    return bank


def write_jsonl(path, objects) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for obj in objects:
            f.write(json.dumps(obj) + "\n")


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240817)
