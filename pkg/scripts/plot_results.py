#!/usr/bin/env python3
"""Render accuracy curves from an experiment results CSV.

Produces one figure per (p, error family): mean normalized SHD against the
n/p ratio, one line per algorithm, and a separate accuracy-vs-Gaussian-share
figure when the sweep varied the Gaussian fraction.

Usage: plot_results.py results.csv [outdir]
"""

import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd


def main(argv):
    if not 1 <= len(argv) <= 2:
        print(__doc__.strip(), file=sys.stderr)
        return 2
    csv_path = Path(argv[0])
    outdir = Path(argv[1]) if len(argv) == 2 else csv_path.parent
    outdir.mkdir(parents=True, exist_ok=True)

    frame = pd.read_csv(csv_path, comment="#")
    frame = frame.dropna(subset=["shd"])
    frame["ratio"] = frame["n"] / frame["p"]
    written = []

    for (p, family), group in frame.groupby(["p", "errorFamily"]):
        if group["ratio"].nunique() > 1:
            fig, ax = plt.subplots(figsize=(6, 4))
            for algorithm, sub in group.groupby("algorithm"):
                stats = sub.groupby("ratio")["shd"].agg(["mean", "std"]).reset_index()
                ax.errorbar(
                    stats["ratio"], stats["mean"], yerr=stats["std"],
                    marker="o", capsize=3, label=algorithm,
                )
            ax.set_xscale("log")
            ax.set_xlabel("n / p")
            ax.set_ylabel("normalized structural Hamming distance")
            ax.set_title(f"p = {p}, {family} errors")
            ax.legend()
            fig.tight_layout()
            path = outdir / f"shd_p{p}_{family}.png"
            fig.savefig(path, dpi=150)
            plt.close(fig)
            written.append(path)

        if group["gaussFraction"].nunique() > 1:
            shared = (group["p"] - 1) - group["skeletonErrors"] // 2
            group = group.assign(accuracy=1.0 - group["orientationErrors"] / shared)
            fig, ax = plt.subplots(figsize=(6, 4))
            for algorithm, sub in group.groupby("algorithm"):
                stats = sub.groupby("gaussFraction")["accuracy"].agg(["mean", "std"]).reset_index()
                ax.errorbar(
                    stats["gaussFraction"], stats["mean"], yerr=stats["std"],
                    marker="o", capsize=3, label=algorithm,
                )
            ax.axhline(0.5, color="gray", linestyle=":", linewidth=1)
            ax.set_xlabel("share of Gaussian error nodes")
            ax.set_ylabel("orientation accuracy on shared edges")
            ax.set_title(f"p = {p}, base family {family}")
            ax.legend()
            fig.tight_layout()
            path = outdir / f"gauss_accuracy_p{p}_{family}.png"
            fig.savefig(path, dpi=150)
            plt.close(fig)
            written.append(path)

    if not written:
        print("nothing to plot: need multiple ratios or Gaussian fractions", file=sys.stderr)
        return 1
    for path in written:
        print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
