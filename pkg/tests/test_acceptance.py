"""Acceptance suite: one test per criterion, at the stated tolerances.

Run with `pytest tests/test_acceptance.py -v -s` to see one line per criterion.
"""

import math
import random
import time

import numpy as np
import pytest
from scipy.sparse import csr_matrix

from recnet.conversation import FuzzyCategory, adapt, ensure_working_ksp
from recnet.corpus import IngestOptions, Record, build_context
from recnet.engine import Engine, EngineConfig, replay_events
from recnet.proximity import (
    SparseProximity,
    hits_from_matrix,
    inwards_proximity,
    keyword_semantic_proximity,
    outwards_proximity,
    record_semantic_proximity,
    semi_metric_ratio,
)
from recnet.service import create_app
from recnet.simulate import AsgiApiClient, ClusterSpec, CommunitySpec, run_community_sim
from recnet.spreading import SAConfig, spread_detailed
from recnet.trails import UserPath, extract_paths, learn, symmetrized, ClickEvent

from conftest import random_records, write_krc


def _pass(n: int, note: str) -> None:
    print(f"[acceptance] criterion {n}: PASS ({note})")


# -------------------------------------------------------------- criterion 1

def set_jaccard(a: set, b: set) -> float:
    union = len(a | b)
    return len(a & b) / union if union else 0.0


def test_criterion_1_proximity_oracle_equivalence():
    rng = random.Random(20260809)
    t0 = time.monotonic()
    worst = 0.0
    for corpus_i in range(50):
        n_records = rng.randint(20, 200)
        n_keywords = rng.randint(5, 50)
        n_extra = rng.randint(0, 100)  # documents stay <= records + extras <= 300
        records = random_records(rng, n_records, n_keywords, n_extra, max_kws=8, max_cites=8)
        ctx = build_context(records, IngestOptions(min_keyword_freq=1))
        assert ctx.p <= 300 and ctx.m <= 200 and ctx.n <= 50

        ancestors: dict[str, set] = {}
        descendants: dict[str, set] = {}
        kw_records: dict[str, set] = {}
        rec_keywords: dict[str, set] = {}
        for r in records:
            descendants[r.id] = set(r.citations)
            rec_keywords[r.id] = set(r.keywords)
            for c in r.citations:
                ancestors.setdefault(c, set()).add(r.id)
            for k in r.keywords:
                kw_records.setdefault(k, set()).add(r.id)

        checks = [
            (inwards_proximity(ctx), ancestors, ctx.documents),
            (outwards_proximity(ctx), descendants, ctx.documents),
            (keyword_semantic_proximity(ctx), kw_records, tuple(ctx.keywords)),
            (record_semantic_proximity(ctx), rec_keywords, ctx.records),
        ]
        for prox, sets, labels in checks:
            for ai in range(len(labels)):
                sa = sets.get(labels[ai], set())
                for bi in range(ai + 1, len(labels)):
                    expected = set_jaccard(sa, sets.get(labels[bi], set()))
                    err = abs(prox.get(ai, bi) - expected)
                    worst = max(worst, err)
                    assert err <= 1e-12, (labels[ai], labels[bi], err)
    elapsed = time.monotonic() - t0
    assert elapsed <= 60.0, f"runtime {elapsed:.1f}s exceeds 60s"
    _pass(1, f"50 corpora, worst |err|={worst:.1e}, {elapsed:.1f}s")


# -------------------------------------------------------------- criterion 2

def _chain_ctx(n_docs: int):
    docs = [f"d{i}" for i in range(n_docs)]
    records = [
        Record(docs[i], frozenset(), frozenset({docs[(i + 1) % n_docs]}))
        for i in range(n_docs)
    ]
    return build_context(records, IngestOptions(min_keyword_freq=1))


def test_criterion_2_trail_rules_exact_and_invariant():
    ctx = _chain_ctx(3)
    T = learn(ctx, [UserPath("d0", "d1", "d2")])
    assert T.get("d0", "d1") == 1.0
    assert T.get("d1", "d2") == 1.0
    assert T.get("d1", "d0") == 0.3
    assert T.get("d2", "d1") == 0.3
    assert T.get("d0", "d2") == 0.5
    assert T.nnz == 5

    rng = random.Random(99)
    big = _chain_ctx(10)
    docs = list(big.documents)
    for _ in range(1000):
        paths = []
        for _ in range(rng.randint(1, 15)):
            a = rng.choice(docs)
            b = rng.choice([d for d in docs if d != a])
            c = rng.choice([d for d in docs if d != b])
            paths.append(UserPath(a, b, c))
        base = list(learn(big, paths).items())
        shuffled = paths[:]
        rng.shuffle(shuffled)
        assert list(learn(big, shuffled).items()) == base  # order invariance
        assert list(learn(big, paths * 2).items()) == base  # batch linearity
    _pass(2, "single-path values exact; 1000 batches order/duplication invariant")


# -------------------------------------------------------------- criterion 3

def test_criterion_3_planted_trail_recovery():
    t0 = time.monotonic()
    rng = random.Random(31)
    ctx = _chain_ctx(20)
    cluster_a = [f"d{i}" for i in range(10)]
    cluster_b = [f"d{i}" for i in range(10, 20)]

    paths: list[UserPath] = []
    session = 0
    while len(paths) < 1000:
        cluster = cluster_a if session % 2 else cluster_b
        doc = rng.choice(cluster)
        seq = [doc]
        for _ in range(9):
            if rng.random() < 0.9:
                doc = rng.choice([d for d in cluster if d != doc])
            else:
                cluster = cluster_b if cluster is cluster_a else cluster_a
                doc = rng.choice(cluster)
            seq.append(doc)
        clicks = [ClickEvent(f"s{session}", float(i), d) for i, d in enumerate(seq)]
        paths.extend(extract_paths(clicks))
        session += 1
    paths = paths[:1000]
    That = symmetrized(learn(ctx, paths))

    def mean_over(pairs):
        vals = [That.get(a, b) for a, b in pairs]
        return sum(vals) / len(vals)

    intra_pairs = [
        (c[i], c[j])
        for c in (cluster_a, cluster_b)
        for i in range(10)
        for j in range(i + 1, 10)
    ]
    inter_pairs = [(a, b) for a in cluster_a for b in cluster_b]
    intra, inter = mean_over(intra_pairs), mean_over(inter_pairs)
    elapsed = time.monotonic() - t0
    assert intra >= 5 * inter, (intra, inter)
    assert elapsed <= 10.0
    _pass(3, f"intra/inter = {intra / inter:.1f}x in {elapsed:.2f}s")


# -------------------------------------------------------------- criterion 4

def test_criterion_4_spreading_activation():
    chain = SparseProximity("traversal", ("n1", "n2", "n3"))
    chain.set("n1", "n2", 1.0)
    chain.set("n2", "n3", 1.0)
    res = spread_detailed(chain, ["n1"], SAConfig(decay=0.5))
    assert res.converged
    assert np.max(np.abs(res.activations - np.array([1.0, 0.5, 0.25]))) < 1e-6

    rng = random.Random(404)
    worst_iters = 0
    for _ in range(100):
        n = rng.randint(10, 500)
        W = SparseProximity("composite", tuple(f"x{i}" for i in range(n)))
        for _ in range(rng.randint(n, 4 * n)):
            i, j = rng.sample(range(n), 2)
            W.set(i, j, rng.uniform(0.01, 1.0))
        cues = rng.sample(range(n), rng.randint(1, 3))
        out = spread_detailed(W, cues, SAConfig(decay=0.8, eps=1e-8, max_iters=500))
        assert out.converged and out.iterations <= 500
        worst_iters = max(worst_iters, out.iterations)
    _pass(4, f"chain fixed point exact; 100 nets converged (max {worst_iters} iters)")


# -------------------------------------------------------------- criterion 5

def test_criterion_5_hits_matches_dense_oracle():
    rng = np.random.default_rng(5150)
    worst = 0.0
    for _ in range(20):
        C = (rng.random((20, 20)) < 0.2).astype(float)
        np.fill_diagonal(C, 0)
        while not C.any():
            C = (rng.random((20, 20)) < 0.2).astype(float)
            np.fill_diagonal(C, 0)
        auth, _ = hits_from_matrix(csr_matrix(C), iterations=5000, eps=1e-15)
        w, v = np.linalg.eigh(C.T @ C)
        principal = np.abs(v[:, np.argmax(w)])
        err = float(np.max(np.abs(auth - principal)))
        worst = max(worst, err)
        assert err < 1e-6
    _pass(5, f"20 digraphs, worst |err|={worst:.1e}")


# -------------------------------------------------------------- criterion 6

def _triple_corpus_at_tenth():
    """Three keywords with pairwise keyword proximity exactly 1/10."""
    k1 = {f"r{i}" for i in range(1, 12)}          # r1..r11
    k2 = {f"r{i}" for i in range(10, 21)}         # r10..r20 (shares r10, r11)
    k3 = {"r1", "r2", "r19", "r20"} | {f"r{i}" for i in range(21, 28)}
    records = []
    for i in range(1, 28):
        rid = f"r{i}"
        kws = {k for k, s in (("k1", k1), ("k2", k2), ("k3", k3)) if rid in s}
        records.append(Record(rid, frozenset(kws), frozenset()))
    return build_context(records, IngestOptions(min_keyword_freq=2))


def test_criterion_6_hebbian_dynamics():
    ctx = _triple_corpus_at_tenth()
    W = ensure_working_ksp(ctx)
    for pair in (("k1", "k2"), ("k1", "k3"), ("k2", "k3")):
        assert W.get(*pair) == 0.1, pair

    category = FuzzyCategory({"k1": 1.0, "k2": 1.0})
    for _ in range(20):
        adapt(ctx, category, lambda_plus=0.1, lambda_minus=0.02)

    reinforced = ctx.working_ksp.get("k1", "k2")
    decayed = ctx.working_ksp.get("k1", "k3")
    decayed2 = ctx.working_ksp.get("k2", "k3")
    assert reinforced >= 0.85, reinforced            # 1 - 0.9^20 * 0.9 ~ 0.8906
    assert decayed <= 0.07 and decayed2 <= 0.07      # 0.1 * 0.98^20 ~ 0.0668
    for _, _, v in ctx.working_ksp.items():
        assert 0.0 <= v <= 1.0
    _pass(6, f"reinforced {reinforced:.4f} >= 0.85, decayed {decayed:.4f} <= 0.07")


# -------------------------------------------------------------- criterion 7

def test_criterion_7_knowledge_propagation_scenario(tmp_path):
    t0 = time.monotonic()
    alpha = write_krc(
        tmp_path / "alpha.krc",
        [
            ("a1", ["gen", "ns", "ga"], ["x1"]),
            ("a2", ["gen", "ga"], ["a1"]),
            ("a3", ["ns", "ga"], ["x1"]),
            ("a4", ["gen", "ns"], ["a1"]),
            ("a5", ["ga", "gen"], ["a2"]),
        ],
    )
    beta = write_krc(
        tmp_path / "beta.krc",
        [
            ("b1", ["gen", "ns"], ["y1"]),
            ("b2", ["gen", "sel"], ["b1"]),
            ("b3", ["ns", "sel"], ["y1"]),
            ("b4", ["gen", "ns"], ["b1"]),
        ],
    )
    engine = Engine.from_config(EngineConfig(context_files=[str(alpha), str(beta)]))
    client = AsgiApiClient(create_app(engine))
    spec = CommunitySpec(
        users=1,
        clusters=[
            ClusterSpec(
                keywords=["gen", "ns", "ga"],
                profile_from=["gen", "ns"],
                relevant_records={"alpha": ["a1", "a2", "a3", "a4", "a5"]},
            )
        ],
        sessions_per_user=50,
        clicks_per_session=3,
        profile_size=2,
        answer_relevant_prob=1.0,
        seed=44,
    )
    report = run_community_sim(spec, client)

    beta_stats = client.get("/admin/contexts/beta/stats")
    assert "ga" in beta_stats["propagated_keywords"]
    for target in ("gen", "ns"):
        series = report.series("prop_pair", context="beta", key=f"ga|{target}")
        assert len(series) == 50
        assert all(b > a for a, b in zip(series, series[1:])), target

    sid = client.post("/sessions", {"user": "probe"})["session_id"]
    resp = client.post(f"/sessions/{sid}/query", {"keywords": ["ga"]})
    while "question" in resp:
        resp = client.post(
            f"/sessions/{sid}/answer",
            {"keyword": resp["question"]["keyword"], "relevant": True},
        )
    recs = resp["recommendations"]
    alpha_recs = [r["record_id"] for r in recs if r["context_id"] == "alpha"]
    assert set(alpha_recs) & {"a1", "a2", "a3", "a5"}  # the ga-qualified records
    elapsed = time.monotonic() - t0
    assert elapsed <= 30.0
    _pass(7, f"series strictly increasing over 50 sessions; probe query hits alpha ({elapsed:.1f}s)")


# -------------------------------------------------------------- criterion 8

def test_criterion_8_semi_metric_detection():
    tri = SparseProximity("composite", ("a", "b", "c"))
    tri.set("a", "b", 0.1)
    tri.set("a", "c", 0.8)
    tri.set("c", "b", 0.8)
    ratio = semi_metric_ratio(tri, "a", "b")
    assert abs(ratio - 18.0) <= 1e-9

    rng = random.Random(88)
    n = 12
    metric = SparseProximity("composite", tuple(f"m{i}" for i in range(n)))
    for i in range(n):
        for j in range(i + 1, n):
            # distances in [1, 1.9]: every two-hop path costs >= 2, so each
            # direct edge is the unique shortest path
            metric.set(i, j, 1.0 / (1.0 + rng.uniform(1.0, 1.9)))
    for i in range(n):
        for j in range(i + 1, n):
            assert semi_metric_ratio(metric, i, j) == 1.0
    _pass(8, "triangle ratio 18 exact; metric graph all ratios 1")


# -------------------------------------------------------------- criterion 9

def test_criterion_9_replay_determinism(tmp_path):
    alpha = write_krc(
        tmp_path / "alpha.krc",
        [
            ("a1", ["gen", "ns", "ga"], ["x1"]),
            ("a2", ["gen", "ga"], ["a1"]),
            ("a3", ["ns", "ga"], ["x1", "a1"]),
            ("a4", ["gen", "ns"], ["a1"]),
        ],
    )
    beta = write_krc(
        tmp_path / "beta.krc",
        [("b1", ["gen", "ns"], ["y1"]), ("b2", ["gen", "sel"], ["b1"]), ("b3", ["ns", "sel"], ["y1"])],
    )
    config = EngineConfig(context_files=[str(alpha), str(beta)])
    events = [
        {"op": "session", "session": "s1", "user": "u1"},
        {"op": "query", "session": "s1", "keywords": ["gen", "ns"]},
        {"op": "answer", "session": "s1", "keyword": "ga", "relevant": True},
        {"op": "answer", "session": "s1", "keyword": "sel", "relevant": False},
        {"op": "click", "session": "s1", "document": "a1", "t": 10.0},
        {"op": "click", "session": "s1", "document": "a2", "t": 20.0},
        {"op": "click", "session": "s1", "document": "a4", "t": 30.0},
        {"op": "adapt"},
        {"op": "session", "session": "s2", "user": "u2"},
        {"op": "query", "session": "s2", "keywords": ["ga"]},
        {"op": "click", "session": "s2", "document": "a1", "t": 40.0},
        {"op": "click", "session": "s2", "document": "a3", "t": 50.0},
        {"op": "click", "session": "s2", "document": "x1", "t": 60.0},
        {"op": "adapt"},
    ]
    dirs = []
    for run in (1, 2):
        out = tmp_path / f"snap{run}"
        replay_events(config, events).snapshot(out)
        dirs.append(out)
    files = sorted(p.relative_to(dirs[0]) for p in dirs[0].rglob("*") if p.is_file())
    assert files, "snapshot produced no files"
    for rel in files:
        b1 = (dirs[0] / rel).read_bytes()
        b2 = (dirs[1] / rel).read_bytes()
        assert b1 == b2, f"snapshot file differs: {rel}"
    _pass(9, f"{len(files)} snapshot files byte-identical across replays")
