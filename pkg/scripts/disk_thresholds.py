"""Locate disk bifurcation thresholds numerically and compare with the closed-form table."""

import argparse
import csv
import sys
from dataclasses import dataclass, field

from vstates.functional import disk_kernel_omega
from vstates.linearized import disk_threshold


@dataclass
class Experiment:
    alphas: list = field(default_factory=lambda: [0.0, 0.5, 1.0, 1.5])
    m_values: list = field(default_factory=lambda: [2, 3, 4, 5])


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--alphas", default="0,0.5,1,1.5")
    p.add_argument("--m-max", type=int, default=5)
    args = p.parse_args()
    exp = Experiment([float(a) for a in args.alphas.split(",")], list(range(2, args.m_max + 1)))

    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["alpha", "m", "located", "formula", "delta"])
    for alpha in exp.alphas:
        for m in exp.m_values:
            located = disk_kernel_omega(m, alpha)
            exact = disk_threshold(m, alpha)
            w.writerow([alpha, m, repr(located), repr(exact), f"{abs(located - exact):.2e}"])


if __name__ == "__main__":
    main()
