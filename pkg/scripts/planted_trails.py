#!/usr/bin/env python3
"""Trail-learning recovery experiment.

Simulates browsing over two planted 10-document clusters with a configurable
intra-cluster rate, learns the traversal matrix, and prints how strongly the
clusters separate as the number of paths grows.
"""

import argparse
import random

from recnet.corpus import IngestOptions, Record, build_context
from recnet.trails import ClickEvent, extract_paths, learn, symmetrized


def make_ctx(n_docs):
    docs = [f"d{i}" for i in range(n_docs)]
    records = [Record(d, frozenset(), frozenset({docs[(i + 1) % n_docs]})) for i, d in enumerate(docs)]
    return build_context(records, IngestOptions(min_keyword_freq=1))


def browse(rng, clusters, start, length, stay):
    cluster = clusters[start]
    doc = rng.choice(cluster)
    seq = [doc]
    for _ in range(length - 1):
        if rng.random() < stay:
            doc = rng.choice([d for d in cluster if d != doc])
        else:
            cluster = clusters[1] if cluster is clusters[0] else clusters[0]
            doc = rng.choice(cluster)
        seq.append(doc)
    return seq


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--stay", type=float, default=0.9, help="intra-cluster transition rate")
    ap.add_argument("--paths", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=31)
    args = ap.parse_args()

    rng = random.Random(args.seed)
    ctx = make_ctx(20)
    clusters = ([f"d{i}" for i in range(10)], [f"d{i}" for i in range(10, 20)])

    paths, session = [], 0
    checkpoints = [args.paths // 8, args.paths // 4, args.paths // 2, args.paths]
    print(f"{'paths':>8} {'mean intra':>12} {'mean inter':>12} {'ratio':>8}")
    while paths_needed := [c for c in checkpoints if len(paths) < c]:
        target = paths_needed[0]
        while len(paths) < target:
            seq = browse(rng, clusters, session % 2, 10, args.stay)
            paths.extend(extract_paths([ClickEvent(f"s{session}", float(i), d) for i, d in enumerate(seq)]))
            session += 1
        T = symmetrized(learn(ctx, paths[:target]))
        intra = [T.get(c[i], c[j]) for c in clusters for i in range(10) for j in range(i + 1, 10)]
        inter = [T.get(a, b) for a in clusters[0] for b in clusters[1]]
        mi, me = sum(intra) / len(intra), sum(inter) / len(inter)
        print(f"{target:>8} {mi:>12.6f} {me:>12.6f} {mi / me if me else float('inf'):>8.2f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
