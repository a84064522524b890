"""Plot the CSVs written by ``levycredit figures``.

Usage::

    levycredit figures --out out
    python docs/plot_figures.py out

Needs matplotlib, which the package itself does not depend on.
"""
import sys
from pathlib import Path

import matplotlib.pyplot as plt
import numpy as np


def load(path):
    with open(path) as fh:
        names = fh.readline().strip().split(",")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    return dict(zip(names, data.T))


def main(out="out"):
    out = Path(out)
    path = load(out / "fig1_path.csv")
    lam = load(out / "fig1_intensity.csv")
    spread = load(out / "fig2_spread.csv")

    fig, (ax1, ax2) = plt.subplots(2, 1, sharex=True, figsize=(7, 5))
    ax1.plot(path["t"], path["x"], lw=0.7, label="X")
    ax1.plot(path["t"], path["xmin"], lw=0.7, label="running minimum")
    ax1.legend()
    ax2.plot(path["t"], path["gap"], lw=0.7, label="gap")
    ax2b = ax2.twinx()
    ax2b.plot(lam["t"], lam["lambda"], lw=0.7, color="C3", label="intensity")
    ax2.set_xlabel("t (years)")
    ax2.set_ylabel("gap")
    ax2b.set_ylabel("intensity")
    fig.tight_layout()
    fig.savefig(out / "fig1.png", dpi=150)

    fig, ax = plt.subplots(figsize=(6, 4))
    h, s, e = spread["h"], spread["spread"], spread["std_error"]
    ax.errorbar(h, s, yerr=e, fmt=".-", lw=0.8, capsize=2)
    ax.set_xlabel("horizon h (years)")
    ax.set_ylabel("spread")
    fig.tight_layout()
    fig.savefig(out / "fig2.png", dpi=150)


if __name__ == "__main__":
    main(*sys.argv[1:])
