"""Write small synthetic stand-ins for the three datasets.

The files use the real on-disk layouts, so every experiment can be smoke-run
without downloading anything:

    python3 scripts/make_synthetic_data.py /tmp/desense-data
    desense suite --all --data-dir /tmp/desense-data --out /tmp/reports
"""

import argparse

from desense import synthetic


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("root")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    synthetic.write_all(args.root, seed=args.seed)
    print(f"wrote synthetic HAR, CMU Faces and Semeion data under {args.root}")


if __name__ == "__main__":
    main()
