#!/usr/bin/env python3
"""Render figures from rgf output directories.

    plot.py tracking <fig2_3 output dir>   -> states.png, regret.png
    plot.py sweep <fig4 output dir>        -> sweep.png
"""
import argparse
import glob
import os
import re

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import pandas as pd  # noqa: E402


def tracking(d):
    traj = pd.read_csv(os.path.join(d, "trajectory.csv"))
    fig, ax = plt.subplots(figsize=(7, 4))
    for agent, g in traj.groupby("agent"):
        ax.plot(g["t"], g["x0"], lw=0.8, label=f"agent {agent}")
    star = traj[traj["agent"] == traj["agent"].min()]
    ax.plot(star["t"], star["x_star0"], "k--", lw=1.2, label="minimizer")
    ax.set_xscale("symlog", linthresh=10)
    ax.set_xlabel("t")
    ax.set_ylabel("x_i(t)")
    ax.legend(fontsize=7, ncol=2)
    fig.tight_layout()
    fig.savefig(os.path.join(d, "states.png"), dpi=150)

    reg = pd.read_csv(os.path.join(d, "regret.csv")).dropna(subset=["time_averaged_regret"])
    fig, ax = plt.subplots(figsize=(7, 4))
    for agent, g in reg.groupby("agent"):
        ax.plot(g["t"], g["time_averaged_regret"], lw=0.8, label=f"agent {agent}")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("T")
    ax.set_ylabel("R_i(T) / T")
    ax.legend(fontsize=7, ncol=2)
    fig.tight_layout()
    fig.savefig(os.path.join(d, "regret.png"), dpi=150)


def sweep(d):
    files = sorted(glob.glob(os.path.join(d, "fig4_N*.csv")), key=lambda p: int(re.search(r"N(\d+)", p).group(1)))
    fig, ax = plt.subplots(figsize=(7, 4))
    for path in files:
        s = pd.read_csv(path)
        n = re.search(r"N(\d+)", path).group(1)
        ax.plot(s["t"], s["mean_time_averaged_regret"], label=f"N = {n}")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("T")
    ax.set_ylabel("mean R_i(T) / T")
    ax.legend()
    fig.tight_layout()
    fig.savefig(os.path.join(d, "sweep.png"), dpi=150)


def main():
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("kind", choices=["tracking", "sweep"])
    p.add_argument("dir")
    a = p.parse_args()
    {"tracking": tracking, "sweep": sweep}[a.kind](a.dir)


if __name__ == "__main__":
    main()
