"""Engine state binding every subsystem into one loop.

Sessions run conversations against the configured contexts plus the user's
own history context; finalized categories queue for the next adaptation
cycle; clicks append to a single path log from which each context's traversal
matrix is rebuilt.  Reads always see complete structures: adaptation swaps
rebuilt matrices in atomically under the single writer lock.
"""

from __future__ import annotations

import json
import re
import threading
import time
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Iterable

from .conversation import (
    Answer,
    ConversationConfig,
    ConversationState,
    FuzzyCategory,
    InterestProfile,
    Question,
    UserHistoryContext,
    adapt,
    apply_answer,
    auto_answer,
    ensure_working_ksp,
    finalize,
    finalize_preview,
    init_category,
    next_question,
    propagate_keywords,
    recommend_records,
)
from .corpus import (
    CorpusError,
    IngestOptions,
    KnowledgeContext,
    Record,
    build_context,
    dump_keywords,
    dump_records,
    ingest,
    load_keywords,
    parse_record_file,
)
from .proximity import (
    SparseProximity,
    combine_structural,
    derived_proximity,
    read_proximity,
    write_proximity,
)
from .spreading import SAConfig, spread
from .trails import (
    ClickEvent,
    RewardConfig,
    composite_proximity,
    dump_path_log,
    extract_paths,
    learn,
    parse_path_log,
)

_CTX_ID = re.compile(r"[A-Za-z0-9_.:-]+\Z")

SNAPSHOT_VERSION = 1


@dataclass
class EngineConfig:
    context_files: list[str] = field(default_factory=list)
    host: str = "127.0.0.1"
    port: int = 8765
    snapshot_dir: str | None = None
    static_dir: str | None = None

    min_keyword_freq: int = 2
    stemming: bool = False

    structural_lambda: float = 0.5
    composite_weights: tuple[float, float, float] = (1 / 3, 1 / 3, 1 / 3)

    sa_decay: float = 0.8
    sa_max_iters: int = 500
    sa_eps: float = 1e-8
    related_n: int = 10
    recommend_n: int = 20

    session_gap: float = 1800.0
    symm_factor: float = 0.3
    trans_factor: float = 0.5

    lambda_plus: float = 0.1
    lambda_minus: float = 0.02
    dispute_threshold: float = 0.2
    question_budget: int = 10
    entropy_floor: float = 0.25
    auto_answer_threshold: float = 0.5
    membership_floor: float = 0.01

    adapt_period: float = 60.0

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "EngineConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        kwargs = dict(data)
        if "composite_weights" in kwargs:
            kwargs["composite_weights"] = tuple(kwargs["composite_weights"])
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path: str | Path) -> "EngineConfig":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {}
        for f in fields(self):
            value = getattr(self, f.name)
            out[f.name] = list(value) if isinstance(value, tuple) else value
        return out

    def ingest_options(self) -> IngestOptions:
        return IngestOptions(min_keyword_freq=self.min_keyword_freq, stemming=self.stemming)

    def conversation_config(self) -> ConversationConfig:
        return ConversationConfig(
            dispute_threshold=self.dispute_threshold,
            question_budget=self.question_budget,
            entropy_floor=self.entropy_floor,
            auto_answer_threshold=self.auto_answer_threshold,
            membership_floor=self.membership_floor,
        )

    def reward_config(self) -> RewardConfig:
        return RewardConfig(symm_factor=self.symm_factor, trans_factor=self.trans_factor)

    def sa_config(self, top_k: int | None = None) -> SAConfig:
        return SAConfig(
            decay=self.sa_decay,
            max_iters=self.sa_max_iters,
            eps=self.sa_eps,
            top_k=top_k,
        )


@dataclass
class Session:
    id: str
    user: str
    auto_answer_level: float = 0.0
    created: float = field(default_factory=time.time)
    last_active: float = field(default_factory=time.time)
    state: ConversationState | None = None
    category: FuzzyCategory | None = None
    clicks: list[ClickEvent] = field(default_factory=list)
    enqueued: bool = False


class Engine:
    """One process-wide engine: contexts, users, sessions, path log, queue."""

    def __init__(self, config: EngineConfig | None = None):
        self.config = config or EngineConfig()
        self.contexts: dict[str, KnowledgeContext] = {}
        self.users: dict[str, KnowledgeContext] = {}
        self.sessions: dict[str, Session] = {}
        self.path_log: list[ClickEvent] = []
        self.pending: list[tuple[FuzzyCategory, list[str]]] = []
        self._user_records: dict[str, dict[str, Record]] = {}
        self._composites: dict[str, SparseProximity] = {}
        self._session_seq = 0
        self._lock = threading.RLock()

    @classmethod
    def from_config(cls, config: EngineConfig) -> "Engine":
        engine = cls(config)
        for path in config.context_files:
            engine.add_context(path)
        return engine

    # -- contexts -----------------------------------------------------------

    def add_context(self, record_file: str | Path, context_id: str | None = None) -> str:
        cid = context_id or Path(record_file).stem
        if not _CTX_ID.match(cid):
            raise ValueError(f"bad context id: {cid!r}")
        with self._lock:
            if cid in self.contexts:
                raise ValueError(f"duplicate context id: {cid!r}")
            self.contexts[cid] = ingest(record_file, self.config.ingest_options())
        return cid

    def context(self, context_id: str) -> KnowledgeContext:
        try:
            return self.contexts[context_id]
        except KeyError:
            raise KeyError(f"unknown context: {context_id!r}") from None

    def _participant(self, pid: str) -> KnowledgeContext | None:
        if pid.startswith("user:"):
            return self.users.get(pid.removeprefix("user:"))
        return self.contexts.get(pid)

    # -- sessions and conversations -----------------------------------------

    def create_session(
        self,
        user: str = "anon",
        auto_answer_level: float = 0.0,
        session_id: str | None = None,
    ) -> Session:
        if not 0.0 <= auto_answer_level <= 1.0:
            raise ValueError(f"auto_answer_level out of [0,1]: {auto_answer_level}")
        with self._lock:
            if session_id is None:
                self._session_seq += 1
                session_id = f"s{self._session_seq}"
            if session_id in self.sessions:
                raise ValueError(f"duplicate session id: {session_id!r}")
            session = Session(id=session_id, user=user, auto_answer_level=auto_answer_level)
            self.sessions[session_id] = session
        return session

    def session(self, session_id: str) -> Session:
        try:
            session = self.sessions[session_id]
        except KeyError:
            raise KeyError(f"unknown session: {session_id!r}") from None
        session.last_active = time.time()
        return session

    def _history(self, session: Session) -> UserHistoryContext | None:
        ctx = self.users.get(session.user)
        if ctx is None or ctx.n == 0:
            return None
        return UserHistoryContext(ctx, session.auto_answer_level)

    def query(self, session_id: str, keywords: Iterable[str]) -> dict[str, Any]:
        session = self.session(session_id)
        kws = frozenset(keywords)
        if not kws or any(not isinstance(k, str) or not k for k in kws):
            raise ValueError("query needs a nonempty list of nonempty keywords")
        profile = InterestProfile(kws)
        state = init_category(profile, self.contexts, self._history(session), self.config.conversation_config())
        session.state = state
        session.category = None
        session.enqueued = False
        return self._advance(session)

    def answer(self, session_id: str, keyword: str, relevant: bool) -> dict[str, Any]:
        session = self.session(session_id)
        state = session.state
        if state is None:
            raise ValueError("no active query in this session")
        if session.category is not None:
            raise ValueError("conversation already finalized; start a new query")
        if keyword not in state.blend:
            raise KeyError(f"keyword not part of this conversation: {keyword!r}")
        question = Question(
            keyword=keyword,
            memberships={cid: f.get(keyword, 0.0) for cid, f in state.fuzzy.items()},
            spread=0.0,
        )
        apply_answer(state, question, Answer(relevant=relevant, answered_by="user"))
        return self._advance(session)

    def _advance(self, session: Session) -> dict[str, Any]:
        state = session.state
        assert state is not None
        while (q := next_question(state)) is not None:
            silent = auto_answer(state, q)
            if silent is None:
                return {
                    "question": {
                        "keyword": q.keyword,
                        "memberships": q.memberships,
                        "spread": q.spread,
                        "asked": state.questions_asked,
                        "budget": state.config.question_budget,
                    },
                    "missing": state.missing,
                }
            apply_answer(state, q, silent)
        if session.category is None:
            session.category = finalize(state)
            if session.category.membership and not session.enqueued:
                participants = [
                    f"user:{session.user}" if cid == "history" else cid
                    for cid in state.contexts
                ]
                with self._lock:
                    self.pending.append((session.category, participants))
                session.enqueued = True
        return {
            "recommendations": self.recommendations(session.id, self.config.recommend_n),
            "category": _category_payload(session.category),
            "missing": state.missing,
        }

    def recommendations(self, session_id: str, n: int | None = None) -> list[dict[str, Any]]:
        session = self.session(session_id)
        if session.category is not None:
            category = session.category
        elif session.state is not None:
            category = finalize_preview(session.state)
        else:
            raise ValueError("no query in this session yet")
        if not category.membership:
            return []
        entries: list[dict[str, Any]] = []
        for cid, ctx in self.contexts.items():
            for rid, score in recommend_records(category, ctx):
                entries.append({"record_id": rid, "score": score, "context_id": cid})
        entries.sort(key=lambda e: (-e["score"], e["record_id"], e["context_id"]))
        return entries if n is None else entries[:n]

    # -- clicks and related documents ----------------------------------------

    def click(self, session_id: str, document_id: str, t: float | None = None) -> list[dict[str, Any]]:
        session = self.session(session_id)
        home: tuple[str, KnowledgeContext] | None = None
        record_ctx: KnowledgeContext | None = None
        for cid, ctx in self.contexts.items():
            if home is None and document_id in ctx.document_index:
                home = (cid, ctx)
            if record_ctx is None and document_id in ctx.record_index:
                record_ctx = ctx
        if home is None and record_ctx is None:
            raise KeyError(f"unknown document: {document_id!r}")
        with self._lock:
            event = ClickEvent(session.id, time.time() if t is None else float(t), document_id)
            self.path_log.append(event)
            session.clicks.append(event)
            if record_ctx is not None:
                self._update_history(session.user, record_ctx, document_id)
        if home is None:
            return []
        W = self._composite(home[0])
        ranked = spread(W, [document_id], self.config.sa_config(top_k=self.config.related_n))
        return [{"document_id": d, "activation": a} for d, a in ranked]

    def related(
        self,
        document_id: str,
        network: str = "composite",
        n: int | None = None,
        context_id: str | None = None,
    ) -> dict[str, Any]:
        if context_id is None:
            for cid, ctx in self.contexts.items():
                if document_id in ctx.document_index:
                    context_id = cid
                    break
            if context_id is None:
                raise KeyError(f"document not in any citation graph: {document_id!r}")
        ctx = self.context(context_id)
        W = self._network(context_id, ctx, network)
        top = n if n is not None else self.config.related_n
        ranked = spread(W, [document_id], self.config.sa_config(top_k=top))
        return {
            "context_id": context_id,
            "network": network,
            "related": [{"document_id": d, "activation": a} for d, a in ranked],
        }

    def _network(self, cid: str, ctx: KnowledgeContext, network: str) -> SparseProximity:
        if network == "composite":
            return self._composite(cid)
        if network == "structural":
            if "structural" not in ctx.derived:
                ctx.derived["structural"] = combine_structural(
                    derived_proximity(ctx, "inwards"),
                    derived_proximity(ctx, "outwards"),
                    self.config.structural_lambda,
                )
            return ctx.derived["structural"]
        if network == "traversal":
            return ctx.traversal if ctx.traversal is not None else SparseProximity("traversal", ctx.documents)
        if network in ("inwards", "outwards"):
            return derived_proximity(ctx, network)
        raise ValueError(f"unknown network kind: {network!r}")

    def _composite(self, cid: str) -> SparseProximity:
        with self._lock:
            if cid not in self._composites:
                ctx = self.context(cid)
                p_struct = self._network(cid, ctx, "structural")
                T = ctx.traversal if ctx.traversal is not None else SparseProximity("traversal", ctx.documents)
                self._composites[cid] = composite_proximity(
                    T, p_struct, derived_proximity(ctx, "record_semantic"), self.config.composite_weights
                )
            return self._composites[cid]

    def _update_history(self, user: str, ctx: KnowledgeContext, record_id: str) -> None:
        records = self._user_records.setdefault(user, {})
        if record_id in records:
            return
        ri = ctx.record_index[record_id]
        records[record_id] = Record(
            id=record_id,
            keywords=frozenset(ctx.keywords[k] for k in ctx.record_keywords[ri]),
            citations=ctx.record_citations[ri],
        )
        old = self.users.get(user)
        rebuilt = build_context(records.values(), IngestOptions(min_keyword_freq=1))
        if old is not None:
            # carry propagated keywords and adapted proximity values by label
            for kw in old.keywords:
                if kw not in rebuilt.keyword_index:
                    rebuilt.add_keyword(kw)
            if old.working_ksp is not None:
                W = ensure_working_ksp(rebuilt)
                for i, j, v in old.working_ksp.items():
                    W.set(old.working_ksp.labels[i], old.working_ksp.labels[j], v)
        self.users[user] = rebuilt

    # -- adaptation ------------------------------------------------------------

    def run_adaptation_cycle(self) -> dict[str, Any]:
        with self._lock:
            applied = len(self.pending)
            touched: set[str] = set()
            for category, participants in self.pending:
                for pid in participants:
                    ctx = self._participant(pid)
                    if ctx is None:
                        continue
                    if pid not in touched:
                        # copy-on-write: readers keep the matrix they hold;
                        # the adapted copy becomes visible only when complete
                        ctx.working_ksp = ensure_working_ksp(ctx).copy()
                    adapt(ctx, category, self.config.lambda_plus, self.config.lambda_minus)
                    propagate_keywords(category, ctx, self.config.lambda_plus)
                    touched.add(pid)
            self.pending.clear()

            paths = extract_paths(self.path_log, self.config.session_gap)
            paths_per_context: dict[str, int] = {}
            traversal_entries: dict[str, int] = {}
            for cid, ctx in self.contexts.items():
                local = [
                    p
                    for p in paths
                    if p.first in ctx.document_index
                    and p.second in ctx.document_index
                    and p.third in ctx.document_index
                ]
                paths_per_context[cid] = len(local)
                if local:
                    ctx.traversal = learn(ctx, local, self.config.reward_config())
                traversal_entries[cid] = ctx.traversal.nnz if ctx.traversal is not None else 0
            self._composites.clear()
            return {
                "categories_applied": applied,
                "participants_adapted": sorted(touched),
                "paths_extracted": len(paths),
                "paths_per_context": paths_per_context,
                "traversal_entries": traversal_entries,
            }

    # -- inspection --------------------------------------------------------------

    def stats(self, context_id: str) -> dict[str, Any]:
        ctx = self.context(context_id)
        paths = extract_paths(self.path_log, self.config.session_gap)
        local = sum(
            1
            for p in paths
            if p.first in ctx.document_index
            and p.second in ctx.document_index
            and p.third in ctx.document_index
        )
        working = ctx.working_ksp
        return {
            "context_id": context_id,
            "records": ctx.m,
            "keywords": ctx.n,
            "cited_documents": ctx.o,
            "documents": ctx.p,
            "citing_records": len(ctx.citing_records),
            "incidence_entries": sum(len(s) for s in ctx.keyword_records),
            "citation_entries": sum(len(s) for s in ctx.doc_out),
            "working_proximity_entries": working.nnz if working is not None else 0,
            "traversal_entries": ctx.traversal.nnz if ctx.traversal is not None else 0,
            "propagated_keywords": ctx.propagated_keywords(),
            "path_triples": local,
            "clicks_total": len(self.path_log),
        }

    def proximity_entries(
        self, context_id: str, kind: str = "working", nodes: Iterable[str] | None = None
    ) -> dict[str, Any]:
        """Stored proximity entries (optionally restricted to given node ids)."""
        ctx = self.context(context_id)
        if kind == "working":
            W = ensure_working_ksp(ctx)
        elif kind in ("keyword_semantic", "record_semantic", "inwards", "outwards"):
            W = derived_proximity(ctx, kind)
        elif kind in ("structural", "composite", "traversal"):
            W = self._network(context_id, ctx, kind)
        else:
            raise ValueError(f"unknown proximity kind: {kind!r}")
        wanted = None if nodes is None else {n for n in nodes}
        present = [lb for lb in W.labels if wanted is None or lb in wanted]
        present_set = set(present)
        entries = [
            [W.labels[i], W.labels[j], v]
            for i, j, v in W.items()
            if W.labels[i] in present_set and W.labels[j] in present_set
        ]
        return {"context_id": context_id, "kind": kind, "present": present, "entries": entries}

    # -- persistence ----------------------------------------------------------

    def snapshot(self, directory: str | Path) -> Path:
        base = Path(directory)
        (base / "contexts").mkdir(parents=True, exist_ok=True)
        (base / "users").mkdir(parents=True, exist_ok=True)
        with self._lock:
            for cid, ctx in self.contexts.items():
                _write_context_files(base / "contexts", cid, ctx)
            for uid in sorted(self.users):
                _write_context_files(base / "users", uid, self.users[uid])
            (base / "pathlog.plog").write_text(dump_path_log(self.path_log), encoding="utf-8")
            manifest = {
                "version": SNAPSHOT_VERSION,
                "config": self.config.to_dict(),
                "contexts": list(self.contexts),
                "users": sorted(self.users),
            }
            (base / "manifest.json").write_text(
                json.dumps(manifest, sort_keys=True, indent=2) + "\n", encoding="utf-8"
            )
        return base

    @classmethod
    def restore(cls, directory: str | Path, config: EngineConfig | None = None) -> "Engine":
        base = Path(directory)
        manifest = json.loads((base / "manifest.json").read_text(encoding="utf-8"))
        if manifest.get("version") != SNAPSHOT_VERSION:
            raise ValueError(f"unsupported snapshot version: {manifest.get('version')}")
        if config is None:
            config = EngineConfig.from_dict(manifest["config"])
        engine = cls(config)
        opts = config.ingest_options()
        for cid in manifest["contexts"]:
            engine.contexts[cid] = _read_context_files(
                base / "contexts", cid, IngestOptions(opts.min_keyword_freq, stemming=False)
            )
        for uid in manifest["users"]:
            ctx = _read_context_files(base / "users", uid, IngestOptions(min_keyword_freq=1, stemming=False))
            engine.users[uid] = ctx
            engine._user_records[uid] = {
                rid: Record(
                    id=rid,
                    keywords=frozenset(ctx.keywords[k] for k in ctx.record_keywords[i]),
                    citations=ctx.record_citations[i],
                )
                for i, rid in enumerate(ctx.records)
            }
        with (base / "pathlog.plog").open(encoding="utf-8") as fh:
            engine.path_log = parse_path_log(fh)
        return engine


def _category_payload(category: FuzzyCategory) -> list[dict[str, Any]]:
    rows = [
        {
            "keyword": kw,
            "membership": mu,
            "contexts": list(category.provenance.get(kw, ())),
        }
        for kw, mu in category.membership.items()
    ]
    rows.sort(key=lambda r: (-r["membership"], r["keyword"]))
    return rows


def _write_context_files(base: Path, cid: str, ctx: KnowledgeContext) -> None:
    (base / f"{cid}.krc").write_text(dump_records(ctx), encoding="utf-8")
    (base / f"{cid}.kws").write_text(dump_keywords(ctx), encoding="utf-8")
    with (base / f"{cid}.wksp").open("w", encoding="utf-8") as fh:
        write_proximity(ensure_working_ksp(ctx), fh)
    traversal = ctx.traversal if ctx.traversal is not None else SparseProximity("traversal", ctx.documents)
    with (base / f"{cid}.trav").open("w", encoding="utf-8") as fh:
        write_proximity(traversal, fh)


def _read_context_files(base: Path, cid: str, options: IngestOptions) -> KnowledgeContext:
    records = parse_record_file(base / f"{cid}.krc", options)
    ctx = build_context(records, options)
    keywords = load_keywords((base / f"{cid}.kws").read_text(encoding="utf-8"))
    for kw in keywords:
        if kw not in ctx.keyword_index:
            ctx.add_keyword(kw)
    if ctx.keywords != keywords:
        raise CorpusError(f"{cid}: keyword universe does not match snapshot")
    self_ones = (i for i, recs in enumerate(ctx.keyword_records) if recs)
    with (base / f"{cid}.wksp").open(encoding="utf-8") as fh:
        ctx.working_ksp = read_proximity(fh, "keyword_semantic", labels=ctx.keywords, self_ones=self_ones)
    with (base / f"{cid}.trav").open(encoding="utf-8") as fh:
        ctx.traversal = read_proximity(fh, "traversal", labels=ctx.documents)
    return ctx


def load_events(path: str | Path) -> list[dict[str, Any]]:
    """Event log: one JSON object per line (queries, answers, clicks, adapt)."""
    events = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            events.append(json.loads(line))
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}: line {lineno}: {exc}") from None
    return events


def replay_events(config: EngineConfig, events: Iterable[dict[str, Any]]) -> Engine:
    """Re-run an event log against a freshly ingested engine.

    Clicks without an explicit timestamp get a deterministic logical time, so
    two replays of one log always produce identical state.
    """
    engine = Engine.from_config(config)
    counter = 0
    for ev in events:
        op = ev.get("op")
        if op == "session":
            engine.create_session(
                user=ev.get("user", "anon"),
                auto_answer_level=ev.get("auto_answer", 0.0),
                session_id=ev.get("session"),
            )
        elif op == "query":
            engine.query(ev["session"], ev["keywords"])
        elif op == "answer":
            engine.answer(ev["session"], ev["keyword"], bool(ev["relevant"]))
        elif op == "click":
            counter += 1
            engine.click(ev["session"], ev["document"], t=ev.get("t", float(counter)))
        elif op == "adapt":
            engine.run_adaptation_cycle()
        else:
            raise ValueError(f"unknown event op: {op!r}")
    return engine
