"""Plot a `tandem-iv compare` table: empirical values with 3-SE bars against
the analytic column, one panel per source tag.

    tandem-iv compare --results out/results.csv --out cmp.csv
    python docs/plot_compare.py cmp.csv cmp.png

Needs matplotlib, which the package itself does not depend on.
"""
import argparse
import csv

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def read_rows(path):
    with open(path) as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("table")
    ap.add_argument("png")
    ap.add_argument("--logx", action="store_true")
    args = ap.parse_args()

    groups = {}
    for r in read_rows(args.table):
        groups.setdefault(r["source_tag"], []).append(r)
    fig, axes = plt.subplots(1, len(groups), figsize=(5 * len(groups), 4), squeeze=False)
    for ax, (tag, rows) in zip(axes[0], sorted(groups.items())):
        rows.sort(key=lambda r: float(r["x"]))
        x = [float(r["x"]) for r in rows]
        y = [float(r["empirical"]) for r in rows]
        se = [3 * float(r["empirical_se"]) if r["empirical_se"] != "nan" else 0.0 for r in rows]
        ax.errorbar(x, y, yerr=se, fmt="o", label="empirical")
        ax.plot(x, [float(r["bound_or_prediction"]) for r in rows], "k--", label="analytic")
        if args.logx:
            ax.set_xscale("log")
        ax.set_title(tag)
        ax.set_xlabel("x")
        ax.legend()
    fig.tight_layout()
    fig.savefig(args.png, dpi=120)


if __name__ == "__main__":
    main()
