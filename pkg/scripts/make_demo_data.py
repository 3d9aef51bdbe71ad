#!/usr/bin/env python3
"""Emit a small demo dataset: two record files, an engine config, and a
community spec. Everything the README quickstart and the other scripts use."""

import json
import sys
from pathlib import Path

ALPHA = """#krc 1
a1\tgenetics,natural_selection,genetic_algorithms\tx1
a2\tgenetics,genetic_algorithms\ta1
a3\tnatural_selection,genetic_algorithms\tx1
a4\tgenetics,natural_selection\ta1
a5\tgenetic_algorithms,genetics\ta2
"""

BETA = """#krc 1
b1\tgenetics,natural_selection\ty1
b2\tgenetics,speciation\tb1
b3\tnatural_selection,speciation\ty1
b4\tgenetics,natural_selection\tb1
"""


def main(out_dir: str = "demo") -> int:
    base = Path(out_dir)
    base.mkdir(parents=True, exist_ok=True)
    (base / "complexity.krc").write_text(ALPHA, encoding="utf-8")
    (base / "philbio.krc").write_text(BETA, encoding="utf-8")
    (base / "engine.json").write_text(
        json.dumps(
            {
                "context_files": [str(base / "complexity.krc"), str(base / "philbio.krc")],
                "snapshot_dir": str(base / "snapshot"),
                "adapt_period": 10.0,
            },
            indent=2,
        )
        + "\n",
        encoding="utf-8",
    )
    (base / "community.json").write_text(
        json.dumps(
            {
                "users": 2,
                "clusters": [
                    {
                        "keywords": ["genetics", "natural_selection", "genetic_algorithms"],
                        "profile_from": ["genetics", "natural_selection"],
                        "relevant_records": {"complexity": ["a1", "a2", "a3", "a4", "a5"]},
                    }
                ],
                "sessions_per_user": 25,
                "clicks_per_session": 3,
                "answer_relevant_prob": 1.0,
                "seed": 7,
            },
            indent=2,
        )
        + "\n",
        encoding="utf-8",
    )
    print(f"wrote {base}/complexity.krc, philbio.krc, engine.json, community.json")
    return 0


if __name__ == "__main__":
    sys.exit(main(*sys.argv[1:]))
