"""Integrate rotating states in time and compare the fitted rotation rate with the predicted one."""

import argparse
import json
from dataclasses import asdict, dataclass

from vstates.dynamics import Contour, fit_rotation, integrate
from vstates.solver import ContinuationConfig, trace_branch


@dataclass
class Experiment:
    n_nodes: int = 256
    dt: float = 2.5e-3
    t_ellipse: float = 0.1
    t_branch: float = 0.05
    branch_epsilon: float = 0.02


def run(before, predicted, t, dt):
    n = round(t / dt)
    after = integrate(before, dt=dt, n_steps=n)
    fit = fit_rotation(before, after, n * dt)
    return {
        "omega_predicted": predicted,
        "omega_fit": fit.omega_fit,
        "shape_error": fit.shape_error,
        "area_drift": abs(after.area() - before.area()) / before.area(),
    }


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--n-nodes", type=int, default=Experiment.n_nodes)
    p.add_argument("--dt", type=float, default=Experiment.dt)
    args = p.parse_args()
    exp = Experiment(n_nodes=args.n_nodes, dt=args.dt)
    print(json.dumps({"config": asdict(exp)}))

    bare = Contour.ellipse(0.5, exp.n_nodes)
    print(json.dumps({"case": "ellipse r=0.5", **run(bare, 2 / 9, exp.t_ellipse, exp.dt)}))

    steps = round(exp.branch_epsilon / 2e-3)
    points = trace_branch(3, "ellipse", ContinuationConfig(epsilon_step=2e-3, n_steps=steps, n_modes=64))
    pt = points[-1]
    start = Contour.from_shape(pt.shape, pt.base, exp.n_nodes, pt.family)
    print(json.dumps({"case": f"ellipse m=3 eps={pt.epsilon:g}", **run(start, pt.omega, exp.t_branch, exp.dt)}))


if __name__ == "__main__":
    main()
