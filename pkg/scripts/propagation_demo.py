#!/usr/bin/env python3
"""Keyword propagation across contexts, end to end through the HTTP API.

A community repeatedly queries two keywords that co-occur with a third in the
first context only; the third keyword is created in the second context and its
association strengthens session over session. Prints the proximity series.
"""

import argparse
from pathlib import Path

from recnet.engine import Engine, EngineConfig
from recnet.service import create_app
from recnet.simulate import AsgiApiClient, CommunitySpec, run_community_sim


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--demo-dir", default="demo", help="directory from make_demo_data.py")
    ap.add_argument("--out", default=None, help="write the full report TSV here")
    args = ap.parse_args()

    base = Path(args.demo_dir)
    config = EngineConfig.from_file(base / "engine.json")
    config.snapshot_dir = None
    spec = CommunitySpec.from_file(base / "community.json")

    client = AsgiApiClient(create_app(Engine.from_config(config)))
    report = run_community_sim(spec, client)
    if args.out:
        Path(args.out).write_text(report.to_tsv(), encoding="utf-8")

    propagated = client.get("/admin/contexts/philbio/stats")["propagated_keywords"]
    print(f"keywords created in philbio: {propagated}")
    for g in propagated:
        for target in ("genetics", "natural_selection"):
            series = report.series("prop_pair", context="philbio", key=f"{g}|{target}")
            if not series:
                continue
            shown = ", ".join(f"{v:.4f}" for v in series[:5])
            print(f"  {g} ~ {target}: {shown} ... {series[-1]:.4f} ({len(series)} sessions)")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
