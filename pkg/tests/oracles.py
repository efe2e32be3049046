"""Independent reference computations the tests check the library against.

Everything here recomputes results by brute force or first principles and
deliberately avoids the code paths under test.
"""

from itertools import combinations, product

import numpy as np


def enumerate_active_sets(hessian, gradient, g, h, eq=None):
    """Exhaustive QP oracle: try every subset of inequality rows as the
    active set, solve the equality-constrained KKT system, keep feasible
    candidates with nonnegative multipliers, return the best (obj, x)."""
    hessian = np.asarray(hessian, dtype=float)
    gradient = np.asarray(gradient, dtype=float)
    g = np.atleast_2d(np.asarray(g, dtype=float))
    h = np.asarray(h, dtype=float).ravel()
    n = hessian.shape[0]
    m = g.shape[0]
    a_eq = b_eq = None
    n_eq = 0
    if eq is not None:
        a_eq = np.atleast_2d(np.asarray(eq[0], dtype=float))
        b_eq = np.asarray(eq[1], dtype=float).ravel()
        n_eq = a_eq.shape[0]
    best = None
    for k in range(m + 1):
        for subset in combinations(range(m), k):
            rows = g[list(subset)]
            c = rows if n_eq == 0 else np.vstack([a_eq, rows]) if k else a_eq
            nc = 0 if c is None else c.shape[0]
            kkt = np.zeros((n + nc, n + nc))
            kkt[:n, :n] = hessian
            rhs = np.concatenate([-gradient, np.zeros(nc)])
            if nc:
                kkt[:n, n:] = c.T
                kkt[n:, :n] = c
                rhs[n:n + n_eq] = b_eq if n_eq else []
                rhs[n + n_eq:] = h[list(subset)]
            try:
                z = np.linalg.solve(kkt, rhs)
            except np.linalg.LinAlgError:
                continue
            x = z[:n]
            lam = z[n + n_eq:]
            if np.any(g @ x > h + 1e-9):
                continue
            if n_eq and np.any(np.abs(a_eq @ x - b_eq) > 1e-9):
                continue
            if lam.size and np.min(lam) < -1e-9:
                continue
            obj = 0.5 * x @ hessian @ x + gradient @ x
            if best is None or obj < best[0] - 1e-12:
                best = (obj, x)
    return best


def template_step_closed_form(s, u, v_tilde, delta):
    """Direct assembly of the one-step update matrices."""
    a = np.array([
        [1.0, 0.0, delta, 0.0],
        [0.0, 1.0, 0.0, v_tilde * delta],
        [0.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
    ])
    b = np.array([[0.0, 0.0], [0.0, 0.0], [delta, 0.0], [0.0, delta / v_tilde]])
    return a @ np.asarray(s, dtype=float) + b @ np.asarray(u, dtype=float)


def rollout_closed_form(s0, u_seq, v_tilde, delta):
    """Final state A^N s0 + sum A^(N-1-i) B u_i via repeated multiplication."""
    a = np.array([
        [1.0, 0.0, delta, 0.0],
        [0.0, 1.0, 0.0, v_tilde * delta],
        [0.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
    ])
    b = np.array([[0.0, 0.0], [0.0, 0.0], [delta, 0.0], [0.0, delta / v_tilde]])
    u_seq = np.asarray(u_seq, dtype=float)
    n = u_seq.shape[0]
    a_pow = [np.eye(4)]
    for _ in range(n):
        a_pow.append(a @ a_pow[-1])
    out = a_pow[n] @ np.asarray(s0, dtype=float)
    for i in range(n):
        out = out + a_pow[n - 1 - i] @ b @ u_seq[i]
    return out


def _offset_cloud(levels_x, levels_y, n, delta):
    """All final-position offsets delta^2 sum_j (n-1-j) u_j reachable on the
    action grid, as an (m, 2) array. Duplicates are collapsed."""
    coeffs = delta * delta * np.arange(n - 1, -1, -1)
    xs = np.unique(np.round([sum(c * u for c, u in zip(coeffs, combo))
                             for combo in product(levels_x, repeat=n)], 12))
    ys = np.unique(np.round([sum(c * u for c, u in zip(coeffs, combo))
                             for combo in product(levels_y, repeat=n)], 12))
    return np.array(np.meshgrid(xs, ys)).reshape(2, -1).T


def _hull(points):
    try:
        from scipy.spatial import ConvexHull
        if len(points) > 3:
            return points[ConvexHull(points).vertices]
    except Exception:
        pass
    return points


def grid_minimax_value(sv_state, pov_state, n, delta, sv_box, pov_box,
                       sv_v_tilde=None, pov_v_tilde=None,
                       sv_rot=None, pov_rot=None, levels=5):
    """Exhaustive minimax of the final squared distance over per-axis action
    grids for both vehicles.

    The final position of each vehicle is its ballistic endpoint plus a
    control offset; the evader's inner maximum of a convex function over its
    offset cloud is attained on the cloud's hull, so only hull vertices are
    scanned there. The pursuer's outer minimum scans its full cloud."""
    sv_state = np.asarray(sv_state, dtype=float)
    pov_state = np.asarray(pov_state, dtype=float)
    sv_vt = sv_state[2] if sv_v_tilde is None else sv_v_tilde
    pov_vt = pov_state[2] if pov_v_tilde is None else pov_v_tilde
    r0 = np.eye(2) if sv_rot is None else np.asarray(sv_rot, dtype=float)
    r1 = np.eye(2) if pov_rot is None else np.asarray(pov_rot, dtype=float)

    def ballistic(s, vt):
        out = s.copy()
        for _ in range(n):
            out = template_step_closed_form(out, [0.0, 0.0], vt, delta)
        return out[:2]

    base0 = r0 @ ballistic(sv_state, sv_vt)
    base1 = r1 @ ballistic(pov_state, pov_vt)

    lv = lambda lo, hi: np.linspace(lo, hi, levels)
    cloud0 = _offset_cloud(lv(*sv_box[0]), lv(*sv_box[1]), n, delta) @ r0.T
    cloud1 = _offset_cloud(lv(*pov_box[0]), lv(*pov_box[1]), n, delta) @ r1.T

    evader_pts = base0 + _hull(cloud0)          # (nh, 2)
    pursuer_pts = base1 + cloud1                # (m, 2)
    diff = evader_pts[None, :, :] - pursuer_pts[:, None, :]
    worst = np.max(np.sum(diff * diff, axis=2), axis=1)
    return float(np.min(worst))


def circle_contains(point, radius):
    return point[0] ** 2 + point[1] ** 2 <= radius * radius * (1.0 + 1e-9)
