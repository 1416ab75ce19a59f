"""Partition-of-unity localized Taylor approximation on sparse coordinate sets.

Everything lives on ``[-1/2, 1/2]^d``.  Cell ``m`` (a multi-index in
``{0..N}^d``) is centered at ``-1/2 + m/N`` and carries a tensor product of
trapezoidal bumps.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import kernels
from .errors import ContractError, SizeError, SparsityError

MAX_ACTIVE = 10**6
MAX_TABLE = 2 * 10**6
GRID_PER_AXIS = 256


def bump(x, m, n_cells: int):
    """Trapezoid: 1 within ``1/(3N)`` of the center, 0 beyond ``2/(3N)``, linear between."""
    if n_cells < 1:
        raise ValueError("N must be >= 1")
    center = -0.5 + np.asarray(m, dtype=np.float64) / n_cells
    return np.clip(2.0 - 3.0 * n_cells * np.abs(np.asarray(x, dtype=np.float64) - center), 0.0, 1.0)


def tensor_bump(points, m, n_cells: int) -> np.ndarray:
    pts = np.atleast_2d(points)
    return np.prod(bump(pts, np.asarray(m)[None, :], n_cells), axis=1)


def partition_check(n_cells: int, d: int, grid_resolution: int) -> float:
    """Max deviation of ``sum_m h_m`` from 1 on a tensor grid of ``[-1/2,1/2]^d``.

    The d-dimensional sum factorizes into a product of 1-D sums, so the 1-D
    sums are formed once per axis and multiplied on the grid.
    """
    if n_cells < 1:
        raise ValueError("N must be >= 1")
    x = np.linspace(-0.5, 0.5, grid_resolution)
    ms = np.arange(n_cells + 1)
    one_d = bump(x[:, None], ms[None, :], n_cells).sum(axis=1)
    total = one_d
    for _ in range(d - 1):
        total = np.multiply.outer(total, one_d)
    return float(np.max(np.abs(total - 1.0)))


def zero_cells(n_cells: int) -> np.ndarray:
    """1-D cell indices whose bump is positive at the origin."""
    ms = np.arange(n_cells + 1)
    return ms[bump(0.0, ms, n_cells) > 0]


def active_cell_bound(d: int, n_cells: int, s: int) -> int:
    return 2**d * (n_cells + 1) ** s * math.comb(d, s)


def active_mask(d: int, n_cells: int, s: int) -> np.ndarray:
    """Boolean ``(N+1)^d`` array marking cells that meet some ``s``-sparse coordinate plane."""
    if not 1 <= s <= d:
        raise SparsityError(f"need 1 <= s <= d, got s={s}, d={d}")
    off = np.ones(n_cells + 1, dtype=np.int64)
    off[zero_cells(n_cells)] = 0
    count = np.zeros((n_cells + 1,) * d, dtype=np.int64)
    for a in range(d):
        shape = [1] * d
        shape[a] = n_cells + 1
        count = count + off.reshape(shape)
    return count <= s


def active_cells(d: int, n_cells: int, s: int) -> tuple[np.ndarray, int]:
    """Enumerate the active set as an ``(|Lambda|, d)`` array plus its cardinality bound."""
    if not 1 <= s <= d:
        raise SparsityError(f"need 1 <= s <= d, got s={s}, d={d}")
    bound = active_cell_bound(d, n_cells, s)
    if (n_cells + 1) ** s * math.comb(d, s) > MAX_ACTIVE:
        raise SizeError("active-cell enumeration exceeds the guard")
    z = set(zero_cells(n_cells).tolist())
    cells = set()
    for gamma in itertools.combinations(range(d), s):
        axes = [range(n_cells + 1) if a in gamma else sorted(z) for a in range(d)]
        cells.update(itertools.product(*axes))
    return np.array(sorted(cells), dtype=np.int64).reshape(-1, d), bound


def taylor_error_bound(d: int, r: int, beta: float, n_cells: int) -> float:
    if n_cells < 1:
        raise ValueError("N must be >= 1")
    return 2.0**d * d**r / math.factorial(r) * (d / n_cells) ** (r + beta)


def cells_for_tolerance(eps: float, d: int, r: int, beta: float) -> tuple[int, float]:
    """Grid parameter and gadget accuracy that make the approximation ``eps``-accurate.

    Reporting only; the network realization is not built.
    """
    n = math.ceil((math.factorial(r) * eps / (2 ** (d + 1) * d ** (2 * r + beta))) ** (-1.0 / (r + beta)))
    return n, eps / (2 ** (d + 1) * d**r)


def multi_indices(d: int, r: int) -> list[tuple[int, ...]]:
    return [n for k in range(r + 1) for n in itertools.product(range(k + 1), repeat=d) if sum(n) == k]


@dataclass(frozen=True)
class TaylorApproximant:
    """``f_N(x) = sum_{m in Lambda} h_m(x) P_m(x)``.

    ``coeffs`` has shape ``((N+1)^d, len(orders))`` holding ``d^n f(x_m)/n!``,
    NaN outside the active set.
    """

    d: int
    n_cells: int
    s: int
    r: int
    beta: float
    orders: tuple
    coeffs: np.ndarray = field(repr=False)
    active: np.ndarray = field(repr=False)

    @property
    def n_active(self) -> int:
        return int(self.active.sum())

    def __call__(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        if self.r == 0:
            return kernels.taylor_eval_r0(pts, self.n_cells, self.coeffs[:, 0])
        return self._eval_general(pts)

    def _eval_general(self, pts):
        N, d = self.n_cells, self.d
        stride = (N + 1) ** np.arange(d - 1, -1, -1)
        lo = np.clip(np.floor((pts + 0.5) * N).astype(np.int64), 0, N)
        orders = np.array(self.orders)
        out = np.zeros(pts.shape[0])
        for combo in range(1 << d):
            m = lo + ((combo >> np.arange(d)) & 1)
            valid = np.all(m <= N, axis=1)
            m = np.minimum(m, N)
            w = np.prod(bump(pts, m, N), axis=1)
            w[~valid] = 0.0
            live = w > 0
            if not np.any(live):
                continue
            idx = m[live] @ stride
            diff = pts[live] - (-0.5 + m[live] / N)
            mono = np.prod(diff[:, None, :] ** orders[None, :, :], axis=2)
            out[live] += w[live] * np.sum(self.coeffs[idx] * mono, axis=1)
        return out


def localized_taylor(
    f: Callable,
    r: int,
    beta: float,
    n_cells: int,
    d: int,
    s: int,
    derivative: Callable | None = None,
) -> TaylorApproximant:
    """Build the approximant from values (``r = 0``) or a derivative oracle.

    ``derivative(n, points)`` must return the mixed partial ``d^n f`` at each
    row of ``points`` for a multi-index tuple ``n``.
    """
    if n_cells < 1:
        raise ValueError("N must be >= 1")
    if r >= 1 and derivative is None:
        raise ContractError("r >= 1 needs a derivative oracle")
    if (n_cells + 1) ** d > MAX_TABLE:
        raise SizeError(f"(N+1)^d = {(n_cells + 1) ** d} cells exceeds the table guard")
    mask = active_mask(d, n_cells, s).ravel()
    grid = np.stack(np.unravel_index(np.arange(mask.size), (n_cells + 1,) * d), axis=1)
    centers = -0.5 + grid[mask] / n_cells
    orders = tuple(multi_indices(d, r))
    table = np.full((mask.size, len(orders)), np.nan)
    for j, n in enumerate(orders):
        if sum(n) == 0:
            vals = np.asarray(f(centers), dtype=np.float64)
        else:
            vals = np.asarray(derivative(n, centers), dtype=np.float64)
        table[mask, j] = vals / np.prod([math.factorial(k) for k in n])
    return TaylorApproximant(d, n_cells, s, r, beta, orders, table, mask)


def sparse_grid(d: int, s: int, per_axis: int = GRID_PER_AXIS) -> np.ndarray:
    """Points of ``[-1/2,1/2]^d`` with at most ``s`` nonzero coordinates.

    One tensor grid per coordinate subset of size ``s``; the other
    coordinates are zero.
    """
    axis = np.linspace(-0.5, 0.5, per_axis)
    blocks = []
    for gamma in itertools.combinations(range(d), s):
        mesh = np.meshgrid(*([axis] * s), indexing="ij")
        block = np.zeros((mesh[0].size, d))
        for a, g in zip(gamma, mesh):
            block[:, a] = g.ravel()
        blocks.append(block)
    return np.unique(np.concatenate(blocks), axis=0)


def sup_error_on_sparse_set(f, approx: TaylorApproximant, per_axis: int = GRID_PER_AXIS) -> float:
    pts = sparse_grid(approx.d, approx.s, per_axis)
    return float(np.max(np.abs(f(pts) - approx(pts))))


def rescale_holder(f: Callable, B: float, beta: float) -> tuple[Callable, float]:
    """``g(x) = f(2Bx)`` on the unit-width cube and the Hoelder norm inflation ``1 + (2B)^beta``."""
    if not B > 0:
        raise ValueError("B must be positive")

    def g(x):
        return f(2.0 * B * np.asarray(x, dtype=np.float64))

    return g, 1.0 + (2.0 * B) ** beta


@dataclass(frozen=True)
class LipschitzFunction:
    """``sum_k a_k sin(w_k.x + phi_k) + b |x - z|`` with Lipschitz constant at most 1."""

    a: np.ndarray
    w: np.ndarray
    phi: np.ndarray
    b: float
    z: np.ndarray

    @property
    def lipschitz_bound(self) -> float:
        return float(np.sum(np.abs(self.a) * np.linalg.norm(self.w, axis=1)) + abs(self.b))

    def __call__(self, x):
        pts = np.atleast_2d(np.asarray(x, dtype=np.float64))
        smooth = np.sin(pts @ self.w.T + self.phi) @ self.a
        return smooth + self.b * np.linalg.norm(pts - self.z, axis=1)


def random_lipschitz_function(d: int, seed: int, terms: int = 4) -> LipschitzFunction:
    rng = np.random.default_rng(seed)
    w = rng.normal(scale=6.0, size=(terms, d))
    a = rng.standard_normal(terms)
    phi = rng.uniform(0, 2 * np.pi, size=terms)
    b = float(rng.standard_normal())
    z = rng.uniform(-0.5, 0.5, size=d)
    scale = np.sum(np.abs(a) * np.linalg.norm(w, axis=1)) + abs(b)
    return LipschitzFunction(a / scale, w, phi, b / scale, z)


def sweep_row(d, r, beta, n_cells, measured, bound) -> dict:
    return {"d": d, "r": r, "beta": beta, "N": n_cells, "measured_sup_error": measured, "bound": bound}
