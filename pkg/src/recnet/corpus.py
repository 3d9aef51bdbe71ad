"""Record ingestion and the raw relations everything else derives from.

A corpus is a line-oriented record file (format ``#krc 1``): each record names
the keywords that qualify it and the documents it cites.  Ingestion interns
identifiers to dense indices and materializes the keyword-record incidence and
the document citation graph.  Cited documents that are not themselves records
carry no keywords; they exist only as citation-graph nodes.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Iterable

from scipy.sparse import csr_matrix

if TYPE_CHECKING:  # pragma: no cover
    from .proximity import SparseProximity
    from .trails import TraversalMatrix

HEADER = "#krc 1"
KEYWORD_HEADER = "#kws 1"
_IDENT = re.compile(r"[A-Za-z0-9_.:-]+\Z")


class CorpusError(ValueError):
    """Malformed record file or inconsistent corpus."""


@dataclass(frozen=True)
class Record:
    """One ingested record: a document pointer with keyword and citation sets."""

    id: str
    keywords: frozenset[str]
    citations: frozenset[str]
    title: str | None = None


@dataclass
class IngestOptions:
    # keywords qualifying fewer records than this are dropped
    min_keyword_freq: int = 2
    stemming: bool = False


def light_stem(word: str) -> str:
    """Lowercase and strip common English suffixes (a light Porter-style pass).

    Deliberately shallow: enough to merge obvious inflections, never intended
    to be linguistically complete.
    """
    w = word.lower()
    for suffix, repl in (("sses", "ss"), ("ies", "i"), ("ing", ""), ("ed", ""), ("ly", ""), ("s", "")):
        if w.endswith(suffix) and len(w) - len(suffix) + len(repl) >= 3:
            if suffix == "s" and w.endswith("ss"):
                continue
            return w[: len(w) - len(suffix)] + repl
    return w


@dataclass
class KnowledgeContext:
    """One information resource's relational substrate.

    Index assignment is lexicographic by identifier at build time, so all
    derived matrices are reproducible.  Keywords added later (propagation)
    are appended after the sorted block, in arrival order.
    """

    records: tuple[str, ...]
    keywords: list[str]
    cited: frozenset[str]
    citing_records: frozenset[str]
    documents: tuple[str, ...]

    record_index: dict[str, int]
    keyword_index: dict[str, int]
    document_index: dict[str, int]

    record_keywords: list[set[int]]   # record -> keyword indices
    keyword_records: list[set[int]]   # keyword -> record indices
    record_citations: list[frozenset[str]]
    doc_out: list[set[int]]           # document -> documents it cites
    doc_in: list[set[int]]            # document -> documents citing it

    # filled by the proximity / trails / conversation modules
    derived: dict[str, "SparseProximity"] = field(default_factory=dict)
    working_ksp: "SparseProximity | None" = None
    traversal: "TraversalMatrix | None" = None

    @property
    def m(self) -> int:
        return len(self.records)

    @property
    def n(self) -> int:
        return len(self.keywords)

    @property
    def o(self) -> int:
        return len(self.cited)

    @property
    def p(self) -> int:
        return len(self.documents)

    def keyword_frequency(self, keyword: str) -> int:
        """Number of records the keyword qualifies (row sum of the incidence)."""
        if keyword not in self.keyword_index:
            raise KeyError(f"unknown keyword: {keyword!r}")
        return len(self.keyword_records[self.keyword_index[keyword]])

    def propagated_keywords(self) -> list[str]:
        """Keywords added after ingestion; they qualify no records."""
        return [k for k, rows in zip(self.keywords, self.keyword_records) if not rows]

    def add_keyword(self, keyword: str) -> int:
        """Append a zero-incidence keyword (knowledge propagation target)."""
        if keyword in self.keyword_index:
            return self.keyword_index[keyword]
        idx = len(self.keywords)
        self.keywords.append(keyword)
        self.keyword_index[keyword] = idx
        self.keyword_records.append(set())
        self.derived.pop("keyword_semantic", None)
        return idx

    def incidence_csr(self) -> csr_matrix:
        """Boolean keyword-record incidence A (n x m) as int CSR."""
        rows, cols = [], []
        for ki, recs in enumerate(self.keyword_records):
            for rj in sorted(recs):
                rows.append(ki)
                cols.append(rj)
        data = [1] * len(rows)
        return csr_matrix((data, (rows, cols)), shape=(self.n, self.m), dtype="int64")

    def citation_csr(self) -> csr_matrix:
        """Boolean citation matrix C (p x p) as int CSR; c_ij = 1 iff d_i cites d_j."""
        rows, cols = [], []
        for di, outs in enumerate(self.doc_out):
            for dj in sorted(outs):
                rows.append(di)
                cols.append(dj)
        data = [1] * len(rows)
        return csr_matrix((data, (rows, cols)), shape=(self.p, self.p), dtype="int64")


def _parse_identifier(token: str, what: str, lineno: int) -> str:
    if not _IDENT.match(token):
        raise CorpusError(f"line {lineno}: invalid {what} identifier: {token!r}")
    return token


def parse_record_file(path: str | Path, options: IngestOptions | None = None) -> list[Record]:
    """Parse a ``#krc 1`` record file into Record objects.

    Raises CorpusError with a line number for malformed lines, duplicate
    record ids, a bad header, or an empty file.
    """
    options = options or IngestOptions()
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    lines = text.splitlines()
    if not lines or lines[0].strip() != HEADER:
        raise CorpusError(f"{path}: missing '{HEADER}' header")

    records: list[Record] = []
    seen: set[str] = set()
    for lineno, line in enumerate(lines[1:], start=2):
        if line == "":
            raise CorpusError(f"line {lineno}: blank line")
        parts = line.split("\t")
        if len(parts) != 3:
            raise CorpusError(f"line {lineno}: expected 3 tab-separated fields, got {len(parts)}")
        rid, kw_field, cit_field = parts
        rid = _parse_identifier(rid, "record", lineno)
        if rid in seen:
            raise CorpusError(f"line {lineno}: duplicate record id: {rid!r}")
        seen.add(rid)
        keywords = set()
        if kw_field:
            for tok in kw_field.split(","):
                kw = _parse_identifier(tok, "keyword", lineno)
                keywords.add(light_stem(kw) if options.stemming else kw)
        citations = set()
        if cit_field:
            for tok in cit_field.split(","):
                citations.add(_parse_identifier(tok, "citation", lineno))
        records.append(Record(rid, frozenset(keywords), frozenset(citations)))
    if not records:
        raise CorpusError(f"{path}: no records")
    return records


def build_context(records: Iterable[Record], options: IngestOptions | None = None) -> KnowledgeContext:
    """Intern a record collection into a KnowledgeContext.

    Unlike ingest(), an empty record collection is accepted here (a brand-new
    user history context starts empty).
    """
    options = options or IngestOptions()
    recs = sorted(records, key=lambda r: r.id)
    record_ids = tuple(r.id for r in recs)
    record_index = {rid: i for i, rid in enumerate(record_ids)}
    if len(record_index) != len(record_ids):
        raise CorpusError("duplicate record id in collection")

    freq: dict[str, int] = {}
    for r in recs:
        for k in r.keywords:
            freq[k] = freq.get(k, 0) + 1
    kept = sorted(k for k, c in freq.items() if c >= options.min_keyword_freq)
    keyword_index = {k: i for i, k in enumerate(kept)}

    keyword_records: list[set[int]] = [set() for _ in kept]
    record_keywords: list[set[int]] = []
    for i, r in enumerate(recs):
        kws = {keyword_index[k] for k in r.keywords if k in keyword_index}
        record_keywords.append(kws)
        for ki in kws:
            keyword_records[ki].add(i)

    cited = frozenset(c for r in recs for c in r.citations)
    citing = frozenset(
        r.id for r in recs if r.citations or r.id in cited
    )
    documents = tuple(sorted(citing | cited))
    document_index = {d: i for i, d in enumerate(documents)}

    doc_out: list[set[int]] = [set() for _ in documents]
    doc_in: list[set[int]] = [set() for _ in documents]
    for r in recs:
        if not r.citations:
            continue
        di = document_index[r.id]
        for c in r.citations:
            dj = document_index[c]
            doc_out[di].add(dj)
            doc_in[dj].add(di)

    return KnowledgeContext(
        records=record_ids,
        keywords=list(kept),
        cited=cited,
        citing_records=citing,
        documents=documents,
        record_index=record_index,
        keyword_index=keyword_index,
        document_index=document_index,
        record_keywords=record_keywords,
        keyword_records=keyword_records,
        record_citations=[r.citations for r in recs],
        doc_out=doc_out,
        doc_in=doc_in,
    )


def ingest(record_file: str | Path, options: IngestOptions | None = None) -> KnowledgeContext:
    """Ingest a record file into a fully populated KnowledgeContext."""
    return build_context(parse_record_file(record_file, options), options)


def keyword_frequency(ctx: KnowledgeContext, keyword: str) -> int:
    return ctx.keyword_frequency(keyword)


def dump_records(ctx: KnowledgeContext) -> str:
    """Re-emit the corpus in canonical ``#krc 1`` form (records in index order)."""
    lines = [HEADER]
    for i, rid in enumerate(ctx.records):
        kws = ",".join(sorted(ctx.keywords[k] for k in ctx.record_keywords[i]))
        cites = ",".join(sorted(ctx.record_citations[i]))
        lines.append(f"{rid}\t{kws}\t{cites}")
    return "\n".join(lines) + "\n"


def dump_keywords(ctx: KnowledgeContext) -> str:
    """Keyword universe in index order (``#kws 1``), covering propagated keywords."""
    return "\n".join([KEYWORD_HEADER, *ctx.keywords]) + "\n"


def load_keywords(text: str) -> list[str]:
    lines = text.splitlines()
    if not lines or lines[0].strip() != KEYWORD_HEADER:
        raise CorpusError(f"missing '{KEYWORD_HEADER}' header")
    return [ln for ln in lines[1:] if ln]
