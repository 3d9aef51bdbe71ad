"""Proximity matrices over corpus relations, plus graph diagnostics.

Four derived proximities share one Jaccard template: co-citation (inwards),
bibliographic coupling (outwards), keyword semantic, and record semantic.
Pairs with an empty union are omitted (proximity 0), which keeps every matrix
as sparse as its underlying relation.  Computation runs over sparse matrix
products, so cost scales with shared-neighbor counts rather than n^2.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import IO, Iterable, Iterator

import numpy as np
from scipy.sparse import csr_matrix

from .corpus import KnowledgeContext

PROX_HEADER = "#prox 1"

SYMMETRIC_KINDS = frozenset(
    {"inwards", "outwards", "keyword_semantic", "record_semantic", "composite"}
)
KINDS = SYMMETRIC_KINDS | {"traversal"}

NodeRef = int | str


class SemiMetricUndefined(ValueError):
    """No direct edge and no connecting path: the ratio has no value."""


class SparseProximity:
    """Sparse matrix of pairwise strengths in [0,1] over labeled nodes.

    Symmetric for every kind except ``traversal``.  Off-diagonal entries are
    stored explicitly (mirrored for symmetric kinds); diagonals are implicit,
    fixed at 1 for nodes in ``self_ones`` (nonempty defining set) and 0
    otherwise.
    """

    __slots__ = ("kind", "labels", "_index", "_adj", "self_ones")

    def __init__(self, kind: str, labels: Iterable[str], self_ones: Iterable[int] = ()):
        if kind not in KINDS:
            raise ValueError(f"unknown proximity kind: {kind!r}")
        self.kind = kind
        self.labels = tuple(labels)
        self._index = {lb: i for i, lb in enumerate(self.labels)}
        if len(self._index) != len(self.labels):
            raise ValueError("duplicate node labels")
        self._adj: dict[int, dict[int, float]] = {}
        self.self_ones: set[int] = set(self_ones)

    @property
    def n(self) -> int:
        return len(self.labels)

    @property
    def symmetric(self) -> bool:
        return self.kind != "traversal"

    def has_label(self, label: str) -> bool:
        return label in self._index

    def index(self, node: NodeRef) -> int:
        if isinstance(node, str):
            try:
                return self._index[node]
            except KeyError:
                raise KeyError(f"unknown node: {node!r}") from None
        if not 0 <= node < self.n:
            raise KeyError(f"node index out of range: {node}")
        return node

    def get(self, i: NodeRef, j: NodeRef) -> float:
        i, j = self.index(i), self.index(j)
        if i == j:
            diag = 1.0 if i in self.self_ones else 0.0
            stored = self._adj.get(i, {}).get(i)
            return stored if stored is not None else diag
        return self._adj.get(i, {}).get(j, 0.0)

    def set(self, i: NodeRef, j: NodeRef, value: float) -> None:
        i, j = self.index(i), self.index(j)
        if not 0.0 <= value <= 1.0:
            raise ValueError(f"proximity out of range: {value}")
        if self.symmetric and i == j:
            raise ValueError("diagonal entries are implicit for symmetric kinds")
        if value == 0.0:
            self._adj.get(i, {}).pop(j, None)
            if self.symmetric:
                self._adj.get(j, {}).pop(i, None)
            return
        self._adj.setdefault(i, {})[j] = value
        if self.symmetric:
            self._adj.setdefault(j, {})[i] = value

    def row(self, i: NodeRef) -> dict[int, float]:
        """Off-diagonal neighbors of node i (out-neighbors for traversal)."""
        i = self.index(i)
        return {j: v for j, v in self._adj.get(i, {}).items() if j != i}

    def items(self) -> Iterator[tuple[int, int, float]]:
        """Stored entries: i<j once per pair for symmetric kinds, all for directed."""
        for i in sorted(self._adj):
            for j in sorted(self._adj[i]):
                if self.symmetric and j <= i:
                    continue
                yield i, j, self._adj[i][j]

    @property
    def nnz(self) -> int:
        return sum(1 for _ in self.items())

    def add_label(self, label: str) -> int:
        if label in self._index:
            return self._index[label]
        idx = self.n
        self.labels = self.labels + (label,)
        self._index[label] = idx
        return idx

    def copy(self) -> "SparseProximity":
        dup = SparseProximity(self.kind, self.labels, self.self_ones)
        dup._adj = {i: dict(row) for i, row in self._adj.items()}
        return dup

    def to_csr(self) -> csr_matrix:
        """Explicit entries as float CSR; self-associations excluded."""
        rows, cols, data = [], [], []
        for i, neigh in self._adj.items():
            for j, v in neigh.items():
                if i != j:
                    rows.append(i)
                    cols.append(j)
                    data.append(v)
        return csr_matrix((data, (rows, cols)), shape=(self.n, self.n), dtype="float64")


@dataclass
class Neighborhood:
    """Nodes strictly above an alpha threshold around a center node."""

    center: str
    threshold: float
    members: list[tuple[str, float]]


def _jaccard_from_product(
    inter: csr_matrix, sizes: np.ndarray, kind: str, labels: tuple[str, ...]
) -> SparseProximity:
    """Jaccard proximity from a co-occurrence count product and per-node set sizes."""
    prox = SparseProximity(kind, labels, self_ones=(int(i) for i in np.flatnonzero(sizes > 0)))
    coo = inter.tocoo()
    for i, j, nij in zip(coo.row, coo.col, coo.data):
        if i >= j or nij == 0:
            continue
        nij = int(nij)
        union = int(sizes[i]) + int(sizes[j]) - nij
        prox.set(int(i), int(j), nij / union)
    return prox


def inwards_proximity(ctx: KnowledgeContext) -> SparseProximity:
    """Co-citation Jaccard: shared citing ancestors over either's ancestors."""
    C = ctx.citation_csr()
    inter = (C.T @ C).tocsr()
    sizes = np.asarray(C.sum(axis=0)).ravel()
    return _jaccard_from_product(inter, sizes, "inwards", ctx.documents)


def outwards_proximity(ctx: KnowledgeContext) -> SparseProximity:
    """Bibliographic-coupling Jaccard: shared cited descendants."""
    C = ctx.citation_csr()
    inter = (C @ C.T).tocsr()
    sizes = np.asarray(C.sum(axis=1)).ravel()
    return _jaccard_from_product(inter, sizes, "outwards", ctx.documents)


def keyword_semantic_proximity(ctx: KnowledgeContext) -> SparseProximity:
    """Keyword Jaccard over the record sets each keyword qualifies."""
    A = ctx.incidence_csr()
    inter = (A @ A.T).tocsr()
    sizes = np.asarray(A.sum(axis=1)).ravel()
    return _jaccard_from_product(inter, sizes, "keyword_semantic", tuple(ctx.keywords))


def record_semantic_proximity(ctx: KnowledgeContext) -> SparseProximity:
    """Record Jaccard over the keyword sets qualifying each record."""
    A = ctx.incidence_csr()
    inter = (A.T @ A).tocsr()
    sizes = np.asarray(A.sum(axis=0)).ravel()
    return _jaccard_from_product(inter, sizes, "record_semantic", ctx.records)


def derived_proximity(ctx: KnowledgeContext, kind: str) -> SparseProximity:
    """Fetch one of the four derived proximities, caching on the context."""
    producers = {
        "inwards": inwards_proximity,
        "outwards": outwards_proximity,
        "keyword_semantic": keyword_semantic_proximity,
        "record_semantic": record_semantic_proximity,
    }
    if kind not in producers:
        raise ValueError(f"not a derived proximity kind: {kind!r}")
    if kind not in ctx.derived:
        ctx.derived[kind] = producers[kind](ctx)
    return ctx.derived[kind]


def combine_structural(
    pin: SparseProximity, pout: SparseProximity, lam: float
) -> SparseProximity:
    """Entrywise lam*pin + (1-lam)*pout over the union of stored pairs."""
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda out of range: {lam}")
    if pin.labels != pout.labels:
        raise ValueError("structural combination requires matching node sets")
    out = SparseProximity("composite", pin.labels, pin.self_ones | pout.self_ones)
    pairs = {(i, j) for i, j, _ in pin.items()} | {(i, j) for i, j, _ in pout.items()}
    for i, j in pairs:
        out.set(i, j, lam * pin.get(i, j) + (1.0 - lam) * pout.get(i, j))
    return out


def neighborhood(p: SparseProximity, node: NodeRef, alpha: float) -> Neighborhood:
    """Nodes with proximity strictly greater than alpha, strongest first."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha out of range: {alpha}")
    i = p.index(node)
    members = [(j, v) for j, v in p.row(i).items() if v > alpha]
    members.sort(key=lambda jv: (-jv[1], jv[0]))
    return Neighborhood(
        center=p.labels[i],
        threshold=alpha,
        members=[(p.labels[j], v) for j, v in members],
    )


def hits_rank(
    ctx: KnowledgeContext, iterations: int = 200, eps: float = 1e-8
) -> tuple[np.ndarray, np.ndarray]:
    """Hub/authority scores of the citation graph by alternating power iteration.

    Returns (authority, hub): nonnegative unit-L2 vectors over ctx.documents.
    """
    return hits_from_matrix(ctx.citation_csr(), iterations, eps)


def hits_from_matrix(
    C: csr_matrix, iterations: int = 200, eps: float = 1e-8
) -> tuple[np.ndarray, np.ndarray]:
    """Alternating a <- C^T h, h <- C a with L2 normalization each step.

    Per-step normalization makes the result invariant to global scaling of C.
    """
    C = C.astype("float64")
    if C.shape[0] == 0 or C.nnz == 0:
        raise ValueError("citation matrix is empty")
    p = C.shape[0]
    hub = np.full(p, 1.0 / math.sqrt(p))
    auth = np.zeros(p)
    for _ in range(iterations):
        auth_new = C.T @ hub
        auth_new /= np.linalg.norm(auth_new)
        hub_new = C @ auth_new
        hub_new /= np.linalg.norm(hub_new)
        delta = max(np.max(np.abs(auth_new - auth)), np.max(np.abs(hub_new - hub)))
        auth, hub = auth_new, hub_new
        if delta < eps:
            break
    return auth, hub


def edge_distance(value: float) -> float:
    """Distance transform d = 1/p - 1: proximity 1 is distance 0, 0 is infinite."""
    if value <= 0.0:
        return math.inf
    return 1.0 / value - 1.0


def _shortest_distance(p: SparseProximity, src: int, dst: int) -> float:
    dist: dict[int, float] = {src: 0.0}
    heap: list[tuple[float, int]] = [(0.0, src)]
    while heap:
        d, u = heapq.heappop(heap)
        if u == dst:
            return d
        if d > dist.get(u, math.inf):
            continue
        for v, w in p.row(u).items():
            nd = d + edge_distance(w)
            if nd < dist.get(v, math.inf):
                dist[v] = nd
                heapq.heappush(heap, (nd, v))
    return math.inf


def semi_metric_ratio(p: SparseProximity, i: NodeRef, j: NodeRef) -> float:
    """Direct distance over shortest-path distance between two nodes.

    A ratio above 1 flags a semi-metric pair: some indirect pathway is shorter
    than the direct link.  Returns inf when a path exists but no direct edge
    does; raises SemiMetricUndefined when the nodes are disconnected.
    """
    i, j = p.index(i), p.index(j)
    d_direct = edge_distance(p.get(i, j))
    d_short = _shortest_distance(p, i, j)
    if math.isinf(d_short):
        raise SemiMetricUndefined(f"no direct edge and no path: {p.labels[i]!r} -> {p.labels[j]!r}")
    if d_direct == d_short:
        return 1.0
    if d_short == 0.0:
        return math.inf
    return d_direct / d_short


def write_proximity(p: SparseProximity, dest: IO[str]) -> None:
    """Export entries as ``#prox 1`` lines; i<j once per pair for symmetric kinds."""
    dest.write(PROX_HEADER + "\n")
    for i, j, v in p.items():
        dest.write(f"{p.labels[i]}\t{p.labels[j]}\t{v!r}\n")


def read_proximity(
    source: IO[str],
    kind: str,
    labels: Iterable[str] | None = None,
    self_ones: Iterable[int] = (),
) -> SparseProximity:
    """Parse a ``#prox 1`` stream.

    With explicit labels the node universe (and index order) is taken as given;
    otherwise it is the sorted set of ids appearing in the stream.
    """
    lines = source.read().splitlines()
    if not lines or lines[0].strip() != PROX_HEADER:
        raise ValueError(f"missing '{PROX_HEADER}' header")
    entries: list[tuple[str, str, float]] = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise ValueError(f"line {lineno}: expected 3 tab-separated fields")
        entries.append((parts[0], parts[1], float(parts[2])))
    if labels is None:
        labels = sorted({e[0] for e in entries} | {e[1] for e in entries})
    prox = SparseProximity(kind, labels, self_ones)
    for a, b, v in entries:
        prox.set(a, b, v)
    return prox
