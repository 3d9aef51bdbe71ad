"""Shared corpus builders and random-corpus generators."""

from __future__ import annotations

import random
from pathlib import Path

import pytest

from recnet.corpus import IngestOptions, KnowledgeContext, Record, build_context


def write_krc(path: Path, rows: list[tuple[str, list[str], list[str]]]) -> Path:
    lines = ["#krc 1"]
    for rid, kws, cites in rows:
        lines.append(f"{rid}\t{','.join(kws)}\t{','.join(cites)}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def random_records(
    rng: random.Random,
    n_records: int,
    n_keywords: int,
    n_extra_docs: int,
    max_kws: int = 6,
    max_cites: int = 6,
) -> list[Record]:
    keywords = [f"k{i}" for i in range(n_keywords)]
    record_ids = [f"r{i}" for i in range(n_records)]
    extra_docs = [f"x{i}" for i in range(n_extra_docs)]
    citable = record_ids + extra_docs
    records = []
    for rid in record_ids:
        kws = rng.sample(keywords, rng.randint(0, min(max_kws, n_keywords)))
        cites = rng.sample(citable, rng.randint(0, min(max_cites, len(citable))))
        cites = [c for c in cites if c != rid]
        records.append(Record(rid, frozenset(kws), frozenset(cites)))
    return records


def random_context(rng: random.Random, **kwargs) -> KnowledgeContext:
    n_records = kwargs.pop("n_records", rng.randint(5, 40))
    n_keywords = kwargs.pop("n_keywords", rng.randint(3, 15))
    n_extra = kwargs.pop("n_extra_docs", rng.randint(0, 10))
    min_freq = kwargs.pop("min_keyword_freq", 1)
    records = random_records(rng, n_records, n_keywords, n_extra, **kwargs)
    return build_context(records, IngestOptions(min_keyword_freq=min_freq))


@pytest.fixture
def tiny_ctx(tmp_path) -> KnowledgeContext:
    """The 3-record hand-trace corpus: r1{k1,k2}->s1, r2{k2}->r1, r3{k3}->."""
    from recnet.corpus import ingest

    path = write_krc(
        tmp_path / "tiny.krc",
        [("r1", ["k1", "k2"], ["s1"]), ("r2", ["k2"], ["r1"]), ("r3", ["k3"], [])],
    )
    return ingest(path, IngestOptions(min_keyword_freq=1))
