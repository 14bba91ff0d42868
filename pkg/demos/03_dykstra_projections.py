"""Dykstra's algorithm: exact projections onto intersections.

Plain alternating projections find a feasible point; Dykstra's residual
corrections find the closest one.  The payoff is that any intersection
of catalogued sets becomes a single reusable operator, and the cost per
sweep is linear in the problem size, which is the whole story behind the
large-n speed advantage over generic QP solvers.
"""

import time

import numpy as np

from proxalloc.dykstra import DykstraConfig, project_box_ball, project_polyhedron
from proxalloc.prox import Box, Hyperplane, project
from proxalloc.qp import QpProblem, default_qp_config, qp_solve

print("=== naive alternating projections vs Dykstra ===")
plane = Hyperplane(np.array([1.0, 1.0]), 1.0)
box = Box(0.4, 1.0)
v = np.array([1.0, 0.0])
x = v.copy()
for _ in range(200):
    x = project(box, project(plane, x))
from proxalloc.dykstra import dykstra_cycle

best, _ = dykstra_cycle([lambda t: project(plane, t), lambda t: project(box, t)],
                        v, DykstraConfig(tol=1e-12))
print("alternating projections land at", np.round(x, 4),
      f"(distance {np.linalg.norm(x - v):.4f})")
print("Dykstra lands at            ", np.round(best, 4),
      f"(distance {np.linalg.norm(best - v):.4f})  <- the true projection")

print("\n=== two half-spaces, growing n: Dykstra vs the QP route ===")
for n in (100, 10000, 100000):
    i = np.arange(1, n + 1)
    v = np.log(1.0 + i**2)
    c = np.vstack([np.ones(n), -np.exp(-i)])
    d = np.array([0.5, 0.0])
    t0 = time.time()
    out = project_polyhedron(c, d, v, DykstraConfig(tol=1e-10))
    t_dyk = time.time() - t0
    problem = QpProblem(q=np.ones(n), r=v, c=c, d=d)
    cfg = default_qp_config(problem)
    cfg.eps = cfg.eps_prime = 1e-8
    t0 = time.time()
    x = qp_solve(problem, cfg=cfg)
    t_qp = time.time() - t0
    print(f"n={n:>6}: dykstra {t_dyk*1e3:7.1f} ms | qp route {t_qp*1e3:8.1f} ms "
          f"| agreement {np.max(np.abs(out - x)):.1e}")

print("\n=== box intersect ball: the diversification workhorse ===")
rng = np.random.default_rng(1)
v = rng.standard_normal(8)
y = project_box_ball(v, np.zeros(8), np.ones(8), np.zeros(8), np.sqrt(1 / 5))
print("input           :", np.round(v, 3))
print("projected       :", np.round(y, 3))
print("norm vs radius  :", np.linalg.norm(y), "<=", np.sqrt(1 / 5))
print("(this is exactly the y-update of the diversified minimum variance)")
