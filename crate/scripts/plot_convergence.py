"""Log-log plot of each diagnostic against k from a `cbp converge` CSV.

usage: python scripts/plot_convergence.py converge.csv [out.png]
"""
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd


def main():
    src = sys.argv[1]
    out = sys.argv[2] if len(sys.argv) > 2 else src.rsplit(".", 1)[0] + ".png"
    df = pd.read_csv(src)
    names = list(dict.fromkeys(df["diagnostic"]))
    fig, axes = plt.subplots(1, len(names), figsize=(4 * len(names), 3.5), squeeze=False)
    for ax, name in zip(axes[0], names):
        part = df[df["diagnostic"] == name]
        groups = part.groupby(part["lambda"].fillna(-1.0))
        for lam, g in groups:
            label = "-" if lam < 0 else f"lambda={lam:g}"
            ax.loglog(g["k"], g["value"].clip(lower=1e-300), marker="o", label=label)
        ax.set_title(name)
        ax.set_xlabel("k")
        ax.legend(fontsize=7)
    fig.suptitle(f"config {df['config_hash'].iloc[0]}")
    fig.tight_layout()
    fig.savefig(out, dpi=120)
    print(out)


if __name__ == "__main__":
    main()
