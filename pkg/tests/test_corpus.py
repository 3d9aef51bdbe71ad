import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from recnet.corpus import (
    CorpusError,
    IngestOptions,
    Record,
    build_context,
    dump_keywords,
    dump_records,
    ingest,
    keyword_frequency,
    light_stem,
    load_keywords,
    parse_record_file,
)

from conftest import random_records, write_krc


def test_ingest_hand_trace(tiny_ctx):
    assert tiny_ctx.m == 3
    assert tiny_ctx.n == 3
    assert sorted(tiny_ctx.citing_records) == ["r1", "r2"]
    assert sorted(tiny_ctx.cited) == ["r1", "s1"]
    assert tiny_ctx.documents == ("r1", "r2", "s1")
    assert tiny_ctx.p == 3


def test_ingest_frequency_floor(tmp_path):
    path = write_krc(
        tmp_path / "t.krc",
        [("r1", ["k1", "k2"], ["s1"]), ("r2", ["k2"], ["r1"]), ("r3", ["k3"], [])],
    )
    ctx = ingest(path)  # default floor 2
    assert ctx.keywords == ["k2"]


def test_ingest_is_deterministic(tmp_path):
    rows = [("r2", ["b", "a"], ["r1", "z9"]), ("r1", ["a"], []), ("r10", ["c", "a"], ["r2"])]
    p1 = write_krc(tmp_path / "a.krc", rows)
    p2 = write_krc(tmp_path / "b.krc", list(reversed(rows)))
    c1 = ingest(p1, IngestOptions(min_keyword_freq=1))
    c2 = ingest(p2, IngestOptions(min_keyword_freq=1))
    assert c1.records == c2.records
    assert c1.keywords == c2.keywords
    assert c1.documents == c2.documents
    assert c1.record_keywords == c2.record_keywords
    assert c1.doc_out == c2.doc_out
    assert dump_records(c1) == dump_records(c2)


def test_citation_matrix_orientation(tiny_ctx):
    C = tiny_ctx.citation_csr()
    d = tiny_ctx.document_index
    assert C[d["r1"], d["s1"]] == 1  # r1 cites s1
    assert C[d["r2"], d["r1"]] == 1
    assert C[d["s1"], d["r1"]] == 0


def test_malformed_line_reports_lineno(tmp_path):
    path = tmp_path / "bad.krc"
    path.write_text("#krc 1\nr1\tk1\t\nbroken line without tabs\n", encoding="utf-8")
    with pytest.raises(CorpusError, match="line 3"):
        parse_record_file(path)


def test_duplicate_record_id_rejected(tmp_path):
    path = tmp_path / "dup.krc"
    path.write_text("#krc 1\nr1\tk1\t\nr1\tk2\t\n", encoding="utf-8")
    with pytest.raises(CorpusError, match="duplicate record id"):
        parse_record_file(path)


def test_empty_file_rejected(tmp_path):
    path = tmp_path / "empty.krc"
    path.write_text("#krc 1\n", encoding="utf-8")
    with pytest.raises(CorpusError, match="no records"):
        parse_record_file(path)


def test_missing_header_rejected(tmp_path):
    path = tmp_path / "noheader.krc"
    path.write_text("r1\tk1\t\n", encoding="utf-8")
    with pytest.raises(CorpusError, match="header"):
        parse_record_file(path)


def test_bad_identifier_rejected(tmp_path):
    path = tmp_path / "badid.krc"
    path.write_text("#krc 1\nr 1\tk1\t\n", encoding="utf-8")
    with pytest.raises(CorpusError, match="line 2"):
        parse_record_file(path)


def test_empty_fields_allowed(tmp_path):
    path = tmp_path / "empties.krc"
    path.write_text("#krc 1\nr1\t\t\nr2\tk1\t\nr3\tk1\tr1\n", encoding="utf-8")
    ctx = ingest(path, IngestOptions(min_keyword_freq=1))
    assert ctx.m == 3
    assert ctx.record_keywords[ctx.record_index["r1"]] == set()


def test_keyword_frequency_full_coverage(tmp_path):
    rows = [(f"r{i}", ["common"], []) for i in range(7)]
    ctx = ingest(write_krc(tmp_path / "c.krc", rows), IngestOptions(min_keyword_freq=1))
    assert keyword_frequency(ctx, "common") == 7


def test_keyword_frequency_unknown_errors(tiny_ctx):
    with pytest.raises(KeyError):
        keyword_frequency(tiny_ctx, "nope")


def test_keyword_frequency_matches_rescan(tmp_path):
    # independent oracle: recount keyword occurrences straight off the file
    rng = random.Random(11)
    records = random_records(rng, 50, 12, 5)
    rows = [(r.id, sorted(r.keywords), sorted(r.citations)) for r in records]
    path = write_krc(tmp_path / "r.krc", rows)
    ctx = ingest(path, IngestOptions(min_keyword_freq=1))

    counts: dict[str, int] = {}
    for line in path.read_text().splitlines()[1:]:
        _, kw_field, _ = line.split("\t")
        for kw in filter(None, kw_field.split(",")):
            counts[kw] = counts.get(kw, 0) + 1
    for kw, count in counts.items():
        assert keyword_frequency(ctx, kw) == count
    # column sums: per-record keyword counts
    for i, rid in enumerate(ctx.records):
        row = next(l for l in path.read_text().splitlines()[1:] if l.split("\t")[0] == rid)
        expected = len([k for k in row.split("\t")[1].split(",") if k])
        assert len(ctx.record_keywords[i]) == expected


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=0, max_value=10_000))
def test_set_relations_invariants(seed):
    rng = random.Random(seed)
    records = random_records(rng, rng.randint(1, 25), rng.randint(1, 8), rng.randint(0, 6))
    ctx = build_context(records, IngestOptions(min_keyword_freq=1))
    assert len(ctx.documents) <= len(ctx.citing_records) + len(ctx.cited)
    assert set(ctx.documents) == set(ctx.citing_records) | set(ctx.cited)
    # every citation endpoint is a document
    for outs in ctx.doc_out:
        assert all(0 <= j < ctx.p for j in outs)
    # inverted lists agree with forward lists
    for ki, recs in enumerate(ctx.keyword_records):
        for r in recs:
            assert ki in ctx.record_keywords[r]


def test_record_may_cite_nonrecord(tiny_ctx):
    assert "s1" in tiny_ctx.cited
    assert "s1" not in tiny_ctx.record_index


def test_light_stem_examples():
    assert light_stem("Cells") == "cell"
    assert light_stem("studies") == "studi"
    assert light_stem("expressed") == "express"
    assert light_stem("model") == "model"
    # too short to strip
    assert light_stem("as") == "as"


def test_stemming_merges_keywords(tmp_path):
    rows = [("r1", ["cells"], []), ("r2", ["cell"], []), ("r3", ["cell"], [])]
    ctx = ingest(write_krc(tmp_path / "s.krc", rows), IngestOptions(min_keyword_freq=1, stemming=True))
    assert ctx.keywords == ["cell"]
    assert keyword_frequency(ctx, "cell") == 3


def test_keyword_dump_roundtrip(tiny_ctx):
    tiny_ctx.add_keyword("zz_new")
    text = dump_keywords(tiny_ctx)
    assert load_keywords(text) == tiny_ctx.keywords
    assert tiny_ctx.propagated_keywords() == ["zz_new"]


def test_dump_records_reingests_identically(tmp_path):
    rng = random.Random(3)
    records = random_records(rng, 20, 8, 4)
    ctx = build_context(records, IngestOptions(min_keyword_freq=1))
    path = tmp_path / "round.krc"
    path.write_text(dump_records(ctx), encoding="utf-8")
    again = ingest(path, IngestOptions(min_keyword_freq=1))
    assert again.records == ctx.records
    assert again.keywords == ctx.keywords
    assert again.record_keywords == ctx.record_keywords
    assert again.doc_out == ctx.doc_out
