"""The dense active-set QP solver on a few hand-readable problems."""

import numpy as np

from adversim import Polytope, QpProblem, solve

# 1. scalar: min x^2 subject to x >= 1
p1 = QpProblem(np.array([[2.0]]), np.zeros(1), Polytope([[-1.0]], [-1.0]))
s1 = solve(p1)
print(f"min x^2 s.t. x >= 1   ->  x = {s1.x[0]:.6f}, multiplier = {s1.dual_ineq[0]:.6f}")

# 2. projection of (3, 4) onto the unit box
box = Polytope(np.vstack([np.eye(2), -np.eye(2)]), np.ones(4))
p2 = QpProblem(2 * np.eye(2), np.array([-6.0, -8.0]), box)
s2 = solve(p2)
print(f"project (3,4) on box  ->  x = {np.round(s2.x, 6)}")

# 3. equality plus inequality
p3 = QpProblem(2 * np.eye(2), np.zeros(2), Polytope([[1.0, 0.0]], [0.5]),
               eq=(np.array([[1.0, 1.0]]), np.array([2.0])))
s3 = solve(p3)
print(f"min |x|^2, x0+x1=2, x0<=0.5  ->  x = {np.round(s3.x, 6)}")

# 4. infeasible rows produce a certificate, not a crash
p4 = QpProblem(np.array([[2.0]]), np.zeros(1), Polytope([[1.0], [-1.0]], [-1.0, -1.0]))
print("x <= -1 and x >= 1    -> ", solve(p4).status.value)

# 5. a batch of random problems, reporting KKT quality and warm-start reuse
rng = np.random.default_rng(0)
residuals, iters_cold, iters_warm = [], [], []
for _ in range(25):
    n = int(rng.integers(2, 7))
    root = rng.normal(size=(n, n))
    interior = rng.normal(size=n)
    g = rng.normal(size=(8, n))
    p = QpProblem(root @ root.T + 0.2 * np.eye(n), rng.normal(size=n),
                  Polytope(g, g @ interior + rng.uniform(0.2, 2.0, size=8)))
    cold = solve(p)
    warm = solve(p, x0=cold.x, warm_set=cold.active_set)
    residuals.append(cold.kkt_residual)
    iters_cold.append(cold.iterations)
    iters_warm.append(warm.iterations)
print(f"\n25 random QPs: worst KKT residual {max(residuals):.2e}, "
      f"mean iterations {np.mean(iters_cold):.1f} cold / {np.mean(iters_warm):.1f} warm")
