"""Traversal proximity learned from user click trails.

Sequential retrieval of two documents by the same user is treated as evidence
of a relation between them.  Each 3-click window contributes a frequency
reward along its two hops, a weaker symmetry reward on the reverse hops, and
a transitivity reward across the endpoints.  Rewards are accumulated as
integer rule counts and converted to values in one expression, so the learned
matrix is exactly independent of path order and of batch duplication.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import IO, Iterable, Sequence, TypeAlias

from .corpus import KnowledgeContext
from .proximity import SparseProximity

PLOG_HEADER = "#plog 1"

TraversalMatrix: TypeAlias = SparseProximity  # kind "traversal"; directed, values in [0,1]


class PathLogError(ValueError):
    """Malformed or out-of-order path log."""


@dataclass(frozen=True)
class ClickEvent:
    session: str
    t: float
    document: str


@dataclass(frozen=True)
class UserPath:
    """Three documents retrieved sequentially by one user."""

    first: str
    second: str
    third: str

    def __post_init__(self) -> None:
        if self.first == self.second or self.second == self.third:
            raise ValueError("consecutive duplicate documents in path")


@dataclass
class RewardConfig:
    symm_factor: float = 0.3
    trans_factor: float = 0.5

    def __post_init__(self) -> None:
        if not 0.0 < self.symm_factor < 1.0:
            raise ValueError(f"symm_factor out of (0,1): {self.symm_factor}")
        if not 0.0 < self.trans_factor < 1.0:
            raise ValueError(f"trans_factor out of (0,1): {self.trans_factor}")


def parse_path_log(source: IO[str]) -> list[ClickEvent]:
    """Parse a ``#plog 1`` stream of session_id / epoch_seconds / document_id lines."""
    lines = source.read().splitlines()
    if not lines or lines[0].strip() != PLOG_HEADER:
        raise PathLogError(f"missing '{PLOG_HEADER}' header")
    events: list[ClickEvent] = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise PathLogError(f"line {lineno}: expected 3 tab-separated fields")
        session, t_str, doc = parts
        try:
            t = float(t_str)
        except ValueError:
            raise PathLogError(f"line {lineno}: bad timestamp: {t_str!r}") from None
        events.append(ClickEvent(session, t, doc))
    return events


def dump_path_log(events: Iterable[ClickEvent]) -> str:
    lines = [PLOG_HEADER]
    for e in events:
        t = int(e.t) if float(e.t).is_integer() else e.t
        lines.append(f"{e.session}\t{t}\t{e.document}")
    return "\n".join(lines) + "\n"


def extract_paths(log: Sequence[ClickEvent], session_gap: float = 1800.0) -> list[UserPath]:
    """Sliding 3-click windows per session, split where the inter-click gap
    exceeds session_gap; consecutive duplicate clicks collapse to one."""
    by_session: dict[str, list[ClickEvent]] = {}
    for e in log:
        by_session.setdefault(e.session, []).append(e)

    paths: list[UserPath] = []
    for session, events in by_session.items():
        runs: list[list[str]] = [[]]
        prev_t: float | None = None
        for e in events:
            if prev_t is not None and e.t < prev_t:
                raise PathLogError(f"session {session!r}: timestamps not ascending")
            if prev_t is not None and e.t - prev_t > session_gap:
                runs.append([])
            run = runs[-1]
            if not run or run[-1] != e.document:
                run.append(e.document)
            prev_t = e.t
        for run in runs:
            for i in range(len(run) - 2):
                paths.append(UserPath(run[i], run[i + 1], run[i + 2]))
    return paths


def learn(
    ctx: KnowledgeContext,
    paths: Sequence[UserPath],
    cfg: RewardConfig | None = None,
) -> TraversalMatrix:
    """Accumulate the frequency/symmetry/transitivity rewards over a path batch.

    The per-path reward unit is 1/n for a batch of n paths; entries are clamped
    to [0,1] after accumulation.
    """
    cfg = cfg or RewardConfig()
    if not paths:
        raise ValueError("no paths to learn from")
    n = len(paths)
    freq: Counter[tuple[int, int]] = Counter()
    symm: Counter[tuple[int, int]] = Counter()
    trans: Counter[tuple[int, int]] = Counter()
    for path in paths:
        try:
            i = ctx.document_index[path.first]
            j = ctx.document_index[path.second]
            k = ctx.document_index[path.third]
        except KeyError as exc:
            raise KeyError(f"unknown document: {exc.args[0]!r}") from None
        freq[(i, j)] += 1
        freq[(j, k)] += 1
        symm[(j, i)] += 1
        symm[(k, j)] += 1
        trans[(i, k)] += 1

    T = SparseProximity("traversal", ctx.documents)
    for pair in sorted(freq.keys() | symm.keys() | trans.keys()):
        value = (freq[pair] + cfg.symm_factor * symm[pair] + cfg.trans_factor * trans[pair]) / n
        T.set(pair[0], pair[1], min(1.0, value))
    return T


def symmetrized(T: TraversalMatrix) -> SparseProximity:
    """max(t_ij, t_ji) as a symmetric composite-kind matrix (diagonal dropped)."""
    out = SparseProximity("composite", T.labels)
    for i, j, v in T.items():
        if i == j:
            continue
        a, b = min(i, j), max(i, j)
        out.set(a, b, max(out.get(a, b), v))
    return out


def composite_proximity(
    T: TraversalMatrix,
    p_struct: SparseProximity,
    rsp: SparseProximity,
    weights: tuple[float, float, float],
) -> SparseProximity:
    """Blend symmetrized traversal, structural, and record-semantic proximity.

    Weights (w_t, w_s, w_r) must be nonnegative and sum to 1.  The record
    semantic matrix lives on record ids; its entries apply to the document
    pairs whose ids are records, everything else contributes 0.
    """
    wt, ws, wr = weights
    if min(wt, ws, wr) < 0.0 or abs(wt + ws + wr - 1.0) > 1e-9:
        raise ValueError(f"weights must be nonnegative and sum to 1: {weights}")
    if T.labels != p_struct.labels:
        raise ValueError("traversal and structural matrices must share one node set")

    that = symmetrized(T)
    out = SparseProximity("composite", p_struct.labels, p_struct.self_ones)
    pairs = {(i, j) for i, j, _ in that.items()}
    pairs |= {(i, j) for i, j, _ in p_struct.items()}
    rec_index = {label: i for i, label in enumerate(out.labels) if rsp.has_label(label)}
    for ri, rj, _ in rsp.items():
        la, lb = rsp.labels[ri], rsp.labels[rj]
        if la in rec_index and lb in rec_index:
            a, b = rec_index[la], rec_index[lb]
            pairs.add((min(a, b), max(a, b)))
    for i, j in sorted(pairs):
        la, lb = out.labels[i], out.labels[j]
        r_val = rsp.get(la, lb) if rsp.has_label(la) and rsp.has_label(lb) else 0.0
        out.set(i, j, wt * that.get(i, j) + ws * p_struct.get(i, j) + wr * r_val)
    return out
