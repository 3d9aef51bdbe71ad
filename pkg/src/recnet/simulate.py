"""Synthetic user communities driving the full loop through the public API.

The harness only ever talks to the HTTP surface (directly or in-process), so
a simulation run doubles as an end-to-end integration test.  Every source of
randomness hangs off one seeded generator: a fixed seed fixes the trajectory.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Protocol

import httpx

SIM_REPORT_HEADER = "#simreport 1"


@dataclass
class ClusterSpec:
    """A planted interest cluster.

    ``keywords`` is the full set the community treats as relevant;  profiles
    are sampled from ``profile_from`` (default: all cluster keywords), which
    lets a scenario plant keywords users recognize but never query directly.
    ``relevant_records`` maps context ids to the records counted as on-topic
    when scoring recommendation precision.
    """

    keywords: list[str]
    weight: float = 1.0
    profile_from: list[str] | None = None
    relevant_records: dict[str, list[str]] = field(default_factory=dict)


@dataclass
class CommunitySpec:
    users: int
    clusters: list[ClusterSpec]
    sessions_per_user: int
    clicks_per_session: int = 3
    profile_size: int = 2
    answer_relevant_prob: float = 0.9
    auto_answer_level: float = 0.0
    adapt_each_session: bool = True
    seed: int = 0

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "CommunitySpec":
        clusters = [ClusterSpec(**c) for c in data.pop("clusters")]
        return cls(clusters=clusters, **data)

    @classmethod
    def from_file(cls, path: str | Path) -> "CommunitySpec":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


class ApiClient(Protocol):
    def get(self, path: str, params: dict[str, Any] | None = None) -> dict: ...

    def post(self, path: str, body: dict[str, Any] | None = None) -> dict: ...


class HttpApiClient:
    """Client against a live server."""

    def __init__(self, base_url: str):
        self._client = httpx.Client(base_url=base_url, timeout=60.0)

    def get(self, path: str, params: dict[str, Any] | None = None) -> dict:
        resp = self._client.get(path, params=params)
        resp.raise_for_status()
        return resp.json()

    def post(self, path: str, body: dict[str, Any] | None = None) -> dict:
        resp = self._client.post(path, json=body or {})
        resp.raise_for_status()
        return resp.json()


class AsgiApiClient:
    """Client against an in-process app; same surface, no sockets."""

    def __init__(self, app: Any):
        from fastapi.testclient import TestClient

        self._client = TestClient(app)

    def get(self, path: str, params: dict[str, Any] | None = None) -> dict:
        resp = self._client.get(path, params=params)
        resp.raise_for_status()
        return resp.json()

    def post(self, path: str, body: dict[str, Any] | None = None) -> dict:
        resp = self._client.post(path, json=body or {})
        resp.raise_for_status()
        return resp.json()


@dataclass
class SimReport:
    """Long-format time series: one row per (session, metric, context, key)."""

    rows: list[dict[str, Any]] = field(default_factory=list)

    def add(self, session: int, metric: str, value: float, context: str = "", key: str = "") -> None:
        self.rows.append(
            {"session": session, "metric": metric, "context": context, "key": key, "value": value}
        )

    def series(self, metric: str, context: str = "", key: str = "") -> list[float]:
        return [
            r["value"]
            for r in self.rows
            if r["metric"] == metric
            and (not context or r["context"] == context)
            and (not key or r["key"] == key)
        ]

    def to_tsv(self) -> str:
        lines = [SIM_REPORT_HEADER, "session\tmetric\tcontext\tkey\tvalue"]
        for r in self.rows:
            lines.append(f"{r['session']}\t{r['metric']}\t{r['context']}\t{r['key']}\t{r['value']!r}")
        return "\n".join(lines) + "\n"


def _mean(values: list[float]) -> float:
    return sum(values) / len(values) if values else 0.0


def _pair_lookup(entries: list[list[Any]]) -> dict[tuple[str, str], float]:
    table: dict[tuple[str, str], float] = {}
    for a, b, v in entries:
        key = (a, b) if a <= b else (b, a)
        table[key] = max(table.get(key, 0.0), float(v))
    return table


def _collect_metrics(
    report: SimReport, client: ApiClient, spec: CommunitySpec, session_idx: int, context_ids: list[str]
) -> None:
    for cid in context_ids:
        stats = client.get(f"/admin/contexts/{cid}/stats")
        prox = client.get(f"/admin/contexts/{cid}/proximity", params={"kind": "working"})
        present = set(prox["present"])
        pairs = _pair_lookup(prox["entries"])
        for ci, cluster in enumerate(spec.clusters):
            inside = sorted(set(cluster.keywords) & present)
            outside = sorted(present - set(cluster.keywords))
            in_vals = [
                pairs.get((a, b), 0.0)
                for i, a in enumerate(inside)
                for b in inside[i + 1 :]
            ]
            out_vals = [
                pairs.get((a, b) if a <= b else (b, a), 0.0)
                for a in inside
                for b in outside
            ]
            report.add(session_idx, "ksp_in", _mean(in_vals), cid, f"c{ci}")
            report.add(session_idx, "ksp_out", _mean(out_vals), cid, f"c{ci}")
            for g in stats["propagated_keywords"]:
                for k in inside:
                    if k == g:
                        continue
                    value = pairs.get((g, k) if g <= k else (k, g), 0.0)
                    report.add(session_idx, "prop_pair", value, cid, f"{g}|{k}")

        trav = client.get(f"/admin/contexts/{cid}/proximity", params={"kind": "traversal"})
        tpairs = _pair_lookup(trav["entries"])
        tpresent = set(trav["present"])
        doc_sets = [
            sorted(set(cluster.relevant_records.get(cid, ())) & tpresent)
            for cluster in spec.clusters
        ]
        for ci, docs in enumerate(doc_sets):
            intra = [
                tpairs.get((a, b), 0.0) for i, a in enumerate(docs) for b in docs[i + 1 :]
            ]
            report.add(session_idx, "t_intra", _mean(intra), cid, f"c{ci}")
            for cj in range(ci + 1, len(doc_sets)):
                inter = [
                    tpairs.get((a, b) if a <= b else (b, a), 0.0)
                    for a in docs
                    for b in doc_sets[cj]
                ]
                report.add(session_idx, "t_inter", _mean(inter), cid, f"c{ci}|c{cj}")


def run_community_sim(spec: CommunitySpec, client: ApiClient) -> SimReport:
    """Drive every scheduled session through the public API and collect series.

    Users take turns round-robin; each session queries a sampled profile,
    answers questions by cluster membership, clicks recommended records
    proportionally to score, and (by default) triggers an adaptation cycle.
    """
    rng = random.Random(spec.seed)
    report = SimReport()
    context_ids = client.get("/admin/contexts")["contexts"]
    weights = [c.weight for c in spec.clusters]

    session_idx = 0
    for _round in range(spec.sessions_per_user):
        for u in range(spec.users):
            session_idx += 1
            ci = rng.choices(range(len(spec.clusters)), weights=weights)[0]
            cluster = spec.clusters[ci]
            pool = cluster.profile_from or cluster.keywords
            profile = sorted(rng.sample(pool, min(spec.profile_size, len(pool))))

            sid = client.post(
                "/sessions", {"user": f"u{u}", "auto_answer_level": spec.auto_answer_level}
            )["session_id"]
            resp = client.post(f"/sessions/{sid}/query", {"keywords": profile})
            while "question" in resp:
                kw = resp["question"]["keyword"]
                p_rel = (
                    spec.answer_relevant_prob
                    if kw in cluster.keywords
                    else 1.0 - spec.answer_relevant_prob
                )
                relevant = rng.random() < p_rel
                resp = client.post(
                    f"/sessions/{sid}/answer", {"keyword": kw, "relevant": relevant}
                )

            recs = resp.get("recommendations", [])
            if cluster.relevant_records and recs:
                hits = sum(
                    1
                    for r in recs
                    if r["record_id"] in cluster.relevant_records.get(r["context_id"], ())
                )
                report.add(session_idx, "precision", hits / len(recs), key=f"c{ci}")

            last: str | None = None
            for c in range(spec.clicks_per_session):
                if not recs:
                    break
                choices = [r for r in recs if r["record_id"] != last] or recs
                pick = rng.choices(choices, weights=[r["score"] for r in choices])[0]
                last = pick["record_id"]
                client.post(
                    f"/sessions/{sid}/click",
                    {"document_id": last, "t": float(session_idx * 10000 + c)},
                )

            if spec.adapt_each_session:
                client.post("/admin/adapt-now", {})
            _collect_metrics(report, client, spec, session_idx, context_ids)
    return report
