"""Trace the ellipse m=3 and disk m=2 branches and write them as JSON lines."""

import argparse
import time
from dataclasses import dataclass
from pathlib import Path

from vstates.solver import ContinuationConfig, trace_branch, write_jsonl


@dataclass
class Experiment:
    out_dir: Path = Path("results")
    ellipse_step: float = 2e-3
    disk_step: float = 5e-3
    steps: int = 10
    n_modes: int = 64


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--out-dir", type=Path, default=Experiment.out_dir)
    p.add_argument("--steps", type=int, default=Experiment.steps)
    p.add_argument("--n-modes", type=int, default=Experiment.n_modes)
    args = p.parse_args()
    exp = Experiment(out_dir=args.out_dir, steps=args.steps, n_modes=args.n_modes)
    exp.out_dir.mkdir(parents=True, exist_ok=True)

    runs = [("ellipse", 3, exp.ellipse_step), ("disk", 2, exp.disk_step)]
    for family, m, step in runs:
        cfg = ContinuationConfig(epsilon_step=step, n_steps=exp.steps, n_modes=exp.n_modes)
        t0 = time.perf_counter()
        points = trace_branch(m, family, cfg)
        path = exp.out_dir / f"{family}_m{m}.jsonl"
        with open(path, "w") as fh:
            write_jsonl(points, fh)
        print(f"{family} m={m}: {len(points)} points in {time.perf_counter() - t0:.1f} s -> {path}")
        for pt in points:
            print(
                f"  eps={pt.epsilon:.4f} param={pt.param:.12f} residual={pt.residual_norm:.1e} "
                f"decay={pt.decay_rate:.3f} curvature={pt.min_curvature:.3f}"
            )


if __name__ == "__main__":
    main()
