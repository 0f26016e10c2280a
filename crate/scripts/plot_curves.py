#!/usr/bin/env python3
"""Render PNG plots from iimp run directories.

Usage: plot_curves.py RUN_DIR [RUN_DIR ...]

For each directory this looks for curves.csv (or stage*/curves.csv for
tomography runs) and qfi.csv, and writes matching .png files next to them.
Plotting is a convenience only; the CSV/JSON files are the actual interface.
"""

import csv
import json
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def read_csv(path):
    with open(path, newline="") as f:
        rows = list(csv.DictReader(f))
    cols = {}
    for name in rows[0].keys():
        cols[name] = [float(r[name]) if r[name] else float("nan") for r in rows]
    return cols


def plot_curves(path):
    cols = read_csv(path)
    t = cols["t"]
    fig, ax = plt.subplots(figsize=(6, 4))
    if "scaled_ratio" in cols:
        ax.plot(t, cols["scaled_ratio"], label="scaled ratio")
    elif "ratio" in cols:
        ax.plot(t, cols["ratio"], label="ratio")
    if "fidelity" in cols:
        ax2 = ax.twinx()
        ax2.plot(t, cols["fidelity"], color="tab:green", alpha=0.6, label="fidelity")
        ax2.set_ylabel("fidelity")
    limits = path.parent / "limits.json"
    if limits.exists():
        data = json.loads(limits.read_text())
        value = data.get("scaled_exact", data.get("exact"))
        if isinstance(value, (int, float)):
            ax.axhline(value, color="tab:red", linestyle="--", linewidth=1, label="exact limit")
    if min(x for x in t if x > 0) < t[-1] / 50:
        ax.set_xscale("log")
    ax.set_xlabel("t [1/g]")
    ax.set_ylabel("value")
    ax.legend(loc="best")
    fig.tight_layout()
    out = path.with_suffix(".png")
    fig.savefig(out, dpi=150)
    plt.close(fig)
    print(f"wrote {out}")


def plot_qfi(path):
    cols = read_csv(path)
    fig, ax = plt.subplots(figsize=(6, 4))
    for name in ("f_target", "f_reference", "f_indirect"):
        if name in cols:
            ax.plot(cols["t"], cols[name], label=name)
    ax.set_xlabel("t [1/g]")
    ax.set_ylabel("F")
    ax.legend(loc="best")
    fig.tight_layout()
    out = path.with_suffix(".png")
    fig.savefig(out, dpi=150)
    plt.close(fig)
    print(f"wrote {out}")


def main(argv):
    if len(argv) < 2:
        print(__doc__)
        return 1
    for arg in argv[1:]:
        run = Path(arg)
        targets = sorted(run.glob("**/curves.csv"))
        if not targets:
            print(f"{run}: no curves.csv found", file=sys.stderr)
        for target in targets:
            plot_curves(target)
        qfi = run / "qfi.csv"
        if qfi.exists():
            plot_qfi(qfi)
    return 0


if __name__ == "__main__":
    raise SystemExit(main(sys.argv))
