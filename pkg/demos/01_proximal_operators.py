"""Tour of the proximal-operator catalogue.

Every operator here is a closed form: evaluating prox_f(v) costs a few
vector operations, which is what makes the splitting engines cheap.  The
script evaluates each operator on small vectors and verifies the
identities that make the catalogue composable (Moreau decomposition,
idempotence of projections).
"""

import numpy as np

from proxalloc.prox import (
    Box,
    Hyperplane,
    LpBall,
    Simplex,
    project,
    prox_kl,
    prox_log_barrier,
    prox_lp_norm,
    prox_max,
    soft_threshold,
    soft_threshold_two_sided,
)

rng = np.random.default_rng(0)

print("=== soft thresholding: the prox of the l1 norm ===")
v = np.array([3.0, -0.5, 0.2, -2.4])
print("v            :", v)
print("S(v; 1.0)    :", soft_threshold(v, 1.0))
print("two-sided    :", soft_threshold_two_sided(v, 0.5, 2.0),
      " (cheap sells, expensive buys)")

print("\n=== projections onto basic sets ===")
v = np.array([0.8, 0.6])
print("hyperplane x1+x2=1:", project(Hyperplane(np.ones(2), 1.0), v))
print("box [0, 0.5]^2    :", project(Box(0.0, 0.5), v))
print("l2 ball r=0.5     :", project(LpBall(2, np.zeros(2), 0.5), v))
print("simplex           :", project(Simplex(), np.array([0.9, 0.7])))

print("\n=== the log barrier keeps weights strictly positive ===")
v = np.array([-0.4, 0.0, 1.2])
x = prox_log_barrier(v, 0.1)
print("prox(-0.1 sum ln x) at", v, "->", np.round(x, 4))
print("first-order residual:", np.max(np.abs(-0.1 / x + x - v)))

print("\n=== entropy pull toward a reference mix ===")
reference = np.array([0.5, 0.3, 0.2])
x = prox_kl(np.zeros(3), 0.05, reference)
print("prox of 0.05*KL(x | ref) at 0:", np.round(x, 4))

print("\n=== Moreau decomposition stitches norms and balls together ===")
trials = 0
for p, q in [(1, np.inf), (2, 2), (np.inf, 1)]:
    worst = 0.0
    for _ in range(200):
        v = rng.standard_normal(6) * 2
        lam = rng.uniform(0.2, 3.0)
        ball = LpBall(p, np.zeros(6), 1.0)
        recombined = prox_lp_norm(v, lam, q) + lam * project(ball, v / lam)
        worst = max(worst, np.max(np.abs(recombined - v)))
        trials += 1
    print(f"prox(lam*||.||_{q}) + lam*P(l{p} ball)(v/lam) == v   "
          f"(max error {worst:.2e})")
print(f"checked {trials} random decompositions")

print("\n=== prox of the max pins the largest coordinates ===")
v = np.array([0.5, 2.0, 1.8, -0.3])
print("prox(1.0 * max x) at", v, "->", prox_max(v, 1.0))
