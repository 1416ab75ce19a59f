"""Pure NumPy implementations of the hot kernels.

Same signatures as the compiled ``_ckernels`` module; used when the
extension is not built or when ``SPARSE_FUNCTIONAL_PURE=1``.
"""
import numpy as np


def soft_threshold(v, alpha):
    v = np.asarray(v, dtype=np.float64)
    return np.sign(v) * np.maximum(np.abs(v) - alpha, 0.0)


def thresholded_iteration(A, y, thetas, record=False):
    A = np.ascontiguousarray(A, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    thetas = np.asarray(thetas, dtype=np.float64)
    n = A.shape[1]
    x = np.zeros(n)
    iterates = np.zeros((thetas.shape[0] + 1, n)) if record else None
    for k, theta in enumerate(thetas):
        v = x + A.T @ (y - A @ x)
        x = np.sign(v) * np.maximum(np.abs(v) - theta, 0.0)
        if record:
            iterates[k + 1] = x
    return x, iterates


def coherence_scan(A):
    A = np.asarray(A, dtype=np.float64)
    if A.shape[1] < 2:
        return 0.0
    An = A / np.linalg.norm(A, axis=0)
    G = np.abs(An.T @ An)
    np.fill_diagonal(G, 0.0)
    return float(min(G.max(), 1.0))


def bump(x, centers, n_cells):
    return np.clip(2.0 - 3.0 * n_cells * np.abs(x - centers), 0.0, 1.0)


def taylor_eval_r0(points, n_cells, table):
    """Evaluate sum_m h_m(x) table[m] over the (at most 2^d) cells touching x.

    ``table`` is the C-ordered flattening of an (N+1)^d array; NaN marks
    cells outside the active set.
    """
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    P, d = points.shape
    stride = (n_cells + 1) ** np.arange(d - 1, -1, -1)
    lo = np.clip(np.floor((points + 0.5) * n_cells).astype(np.int64), 0, n_cells)
    out = np.zeros(P)
    for combo in range(1 << d):
        idx = np.zeros(P, dtype=np.int64)
        w = np.ones(P)
        valid = np.ones(P, dtype=bool)
        for a in range(d):
            m = lo[:, a] + ((combo >> a) & 1)
            valid &= m <= n_cells
            m = np.minimum(m, n_cells)
            w *= bump(points[:, a], -0.5 + m / n_cells, n_cells)
            idx += m * stride[a]
        w[~valid] = 0.0
        live = w > 0.0
        if np.any(live):
            out[live] += w[live] * table[idx[live]]
    return out
