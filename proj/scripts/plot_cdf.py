#!/usr/bin/env python3
# SPDX-License-Identifier: Apache-2.0
"""Plot the SE and EE CDFs written by `cfmimo run` side by side.

usage: plot_cdf.py OUT_DIR [--combiner MMSE] [--save figure.png]
"""
import argparse
import pathlib

import matplotlib.pyplot as plt
import numpy as np


def load(path):
    data = np.loadtxt(path, ndmin=2)
    return data[:, 0], data[:, 1]


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("out_dir", type=pathlib.Path)
    parser.add_argument("--combiner", default="MMSE")
    parser.add_argument("--save", type=pathlib.Path)
    args = parser.parse_args()

    fig, (ax_se, ax_ee) = plt.subplots(1, 2, figsize=(10, 4))
    for metric, ax, scale, unit in (("se", ax_se, 1.0, "bits/s/Hz"), ("ee", ax_ee, 1e-9, "Gbit/J")):
        for path in sorted(args.out_dir.glob(f"cdf_{metric}_*_{args.combiner}.csv")):
            algorithm = path.stem[len(f"cdf_{metric}_"):-len(f"_{args.combiner}")]
            x, f = load(path)
            ax.plot(x * scale, f, label=algorithm)
        ax.set_xlabel(f"{metric.upper()} [{unit}]")
        ax.set_ylabel("CDF")
        ax.grid(True, alpha=0.3)
        ax.legend()
    fig.tight_layout()
    if args.save:
        fig.savefig(args.save, dpi=150)
    else:
        plt.show()


if __name__ == "__main__":
    main()
