"""Composed image retrieval via spherical interpolation of embeddings."""

from .bank import BankReport, EmbeddingBank, Modality, bank_to_bytes, load_bank, validate, write_bank
from .errors import EngineError, MalformedInput
from .geometry import angle, cosine, normalize, slerp
from .instances import BenchmarkInstance, dump_instances, load_instances
from .metrics import EvalReport, alpha_sweep, evaluate, macro_average, map_at_k, recall_at_k
from .search import RankedList, batch_top_k, rank_candidates, to_tsv, top_k

__version__ = "0.1.0"

__all__ = [
    "BankReport",
    "BenchmarkInstance",
    "EmbeddingBank",
    "EngineError",
    "EvalReport",
    "MalformedInput",
    "Modality",
    "RankedList",
    "alpha_sweep",
    "angle",
    "bank_to_bytes",
    "batch_top_k",
    "cosine",
    "dump_instances",
    "evaluate",
    "load_bank",
    "load_instances",
    "macro_average",
    "map_at_k",
    "normalize",
    "rank_candidates",
    "recall_at_k",
    "slerp",
    "to_tsv",
    "top_k",
    "validate",
    "write_bank",
]
