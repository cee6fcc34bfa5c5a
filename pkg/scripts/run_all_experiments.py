"""Run all five experiments and print the tables plus the utility-drop summary.

Usage:
    python3 scripts/run_all_experiments.py --data-dir ~/datasets --out results/

Expects the layout described in the README (UCI HAR Dataset/, faces/,
semeion.data). Markdown tables go to stdout; JSON reports, markdown copies
and summary.json go to --out.
"""

import argparse
import json
import logging
import time
from pathlib import Path

from desense import experiments


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--data-dir", required=True)
    ap.add_argument("--out", default="results")
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("names", nargs="*", default=list(experiments.EXPERIMENTS))
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")

    out = Path(args.out)
    t0 = time.perf_counter()
    reports, summary = experiments.run_suite(args.names, args.data_dir, out, "json",
                                             args.threads, seed=args.seed)
    for name, rep in reports.items():
        table = experiments.emit_table(rep, "markdown")
        (out / f"{name}.md").write_text(table)
        print(table)
        print(f"({name}: {rep.timing['total']:.1f}s)\n")

    print("| Dataset | Mean utility drop (pp) | Published (pp) |")
    print("|---|---|---|")
    for fam, row in summary["tradeoff"].items():
        print(f"| {fam} | {row['utility_drop_pp']:.2f} | {row['published_pp']} |")
    print(f"\ntotal {time.perf_counter() - t0:.1f}s")
    (out / "timing.json").write_text(
        json.dumps({n: r.timing for n, r in reports.items()}, indent=2) + "\n")


if __name__ == "__main__":
    main()
