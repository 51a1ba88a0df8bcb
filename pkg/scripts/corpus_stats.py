"""Per-task and per-split counts of a records file, plus molecule statistics.

    python scripts/corpus_stats.py out/records.split.jsonl
"""

import argparse
import json
from collections import Counter

from chemtune.cli import corpus_stats
from chemtune.corpus import import_jsonl


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("records")
    ap.add_argument("--molecules", action="store_true", help="also list per-molecule rows")
    args = ap.parse_args()

    records = import_jsonl(args.records)
    table = Counter((r.task, r.split or "-") for r in records)
    splits = sorted({s for _, s in table})
    tasks = sorted({t for t, _ in table})
    print("task".ljust(12) + "".join(s.rjust(8) for s in splits) + "total".rjust(8))
    for t in tasks:
        row = [table[(t, s)] for s in splits]
        print(t.ljust(12) + "".join(str(n).rjust(8) for n in row) + str(sum(row)).rjust(8))

    stats = corpus_stats(records)
    if not args.molecules:
        stats = stats["summary"]
    print(json.dumps(stats, indent=2, sort_keys=True))


if __name__ == "__main__":
    main()
