"""Best s-term estimators by exhaustive support search, a greedy comparator, and tail bounds."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .coherence import DesignMatrix
from .errors import SizeError, SparsityError
from .sampling import mixture_norm
from .sparse_coding import SparseCode

MAX_SUPPORTS = 10**6
_CHUNK = 4096


@dataclass(frozen=True)
class OracleResult:
    code: SparseCode
    empirical_residual: float
    p: float
    method: str

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(int(i) for i in self.code.support)


def empirical_norm(r, p: float = 2) -> float:
    """``(1/m sum |r_t|^p)^(1/p)``, or the max for ``p = inf``."""
    r = np.abs(np.asarray(r, dtype=np.float64))
    if np.isinf(p):
        return float(r.max(initial=0.0))
    return float(np.mean(r**p) ** (1.0 / p))


def _matrix(design):
    return design.entries if isinstance(design, DesignMatrix) else np.asarray(design, dtype=np.float64)


def _lp_fit(Dsub: np.ndarray, y: np.ndarray, p: float) -> np.ndarray:
    """Minimize ``||y - Dsub c||_p`` for ``p`` in {1, inf} as a linear program."""
    from scipy.optimize import linprog

    m, k = Dsub.shape
    if p == 1:
        # variables (c, t): min sum t, -t <= y - Dc <= t
        cost = np.r_[np.zeros(k), np.ones(m)]
        A = np.block([[-Dsub, -np.eye(m)], [Dsub, -np.eye(m)]])
    else:
        cost = np.r_[np.zeros(k), 1.0]
        A = np.block([[-Dsub, -np.ones((m, 1))], [Dsub, -np.ones((m, 1))]])
    b = np.r_[-y, y]
    bounds = [(None, None)] * k + [(0, None)] * (cost.size - k)
    res = linprog(cost, A_ub=A, b_ub=b, bounds=bounds, method="highs")
    return res.x[:k]


def best_s_term_exhaustive(design, y_tilde, s: int, p: float = 2) -> OracleResult:
    """Globally best ``s``-support for the sampled least-``p`` fit.

    Inner problems are minimum-norm least squares for ``p = 2``.  Supports are
    visited in lexicographic order and a candidate replaces the incumbent only
    when smaller by more than a rounding tolerance, so ties go to the lowest
    support.
    """
    D = _matrix(design)
    y = np.asarray(y_tilde, dtype=np.float64)
    m, n = D.shape
    if s < 0 or s > n:
        raise SparsityError(f"s={s} outside [0, {n}]")
    if math.comb(n, s) > MAX_SUPPORTS:
        raise SizeError(f"C({n},{s}) supports exceed {MAX_SUPPORTS}; use omp instead")
    if s == 0:
        return OracleResult(SparseCode(np.zeros(n), 0), empirical_norm(y, p), p, "exhaustive")
    best_r, best_supp, best_c = math.inf, None, None
    tol = 1e-12 * max(1.0, empirical_norm(y, p))
    combos = itertools.combinations(range(n), s)
    while True:
        chunk = np.array(list(itertools.islice(combos, _CHUNK)), dtype=np.int64)
        if chunk.size == 0:
            break
        if p == 2:
            sub = D[:, chunk].transpose(1, 0, 2)  # (K, m, s)
            coef = np.linalg.pinv(sub) @ y
            res = y[None, :] - np.einsum("kms,ks->km", sub, coef)
            r = np.sqrt(np.mean(res * res, axis=1))
        else:
            coef = np.array([_lp_fit(D[:, c], y, p) for c in chunk])
            r = np.array([empirical_norm(y - D[:, c] @ w, p) for c, w in zip(chunk, coef)])
        k = int(np.argmax(r <= r.min() + tol))  # first near-minimum within the chunk
        if r[k] < best_r - tol:
            best_r, best_supp, best_c = float(r[k]), chunk[k], coef[k]
    w = np.zeros(n)
    w[best_supp] = best_c
    return OracleResult(SparseCode(w, s), best_r, p, "exhaustive")


def omp(design, y_tilde, s: int) -> OracleResult:
    """Orthogonal matching pursuit; picks the largest normalized correlation, lowest index on ties."""
    D = _matrix(design)
    y = np.asarray(y_tilde, dtype=np.float64)
    m, n = D.shape
    if s < 0 or s > min(m, n):
        raise SparsityError(f"s={s} outside [0, min(m, N)={min(m, n)}]")
    norms = np.linalg.norm(D, axis=0)
    norms[norms == 0] = np.inf
    supp: list[int] = []
    coef = np.zeros(0)
    r = y.copy()
    for _ in range(s):
        corr = np.abs(D.T @ r) / norms
        corr[supp] = -1.0
        supp.append(int(np.argmax(corr)))
        coef = np.linalg.lstsq(D[:, supp], y, rcond=None)[0]
        r = y - D[:, supp] @ coef
    w = np.zeros(n)
    w[supp] = coef
    return OracleResult(SparseCode(w, s), empirical_norm(r), 2, "omp")


def top_s_support(coeffs, s: int) -> np.ndarray:
    """Indices of the ``s`` largest magnitudes; earlier index wins ties."""
    c = np.abs(np.asarray(coeffs, dtype=np.float64))
    return np.sort(np.argsort(-c, kind="stable")[:s])


def tail_coefficients(coeffs, s: int) -> np.ndarray:
    c = np.asarray(coeffs, dtype=np.float64).copy()
    c[top_s_support(c, s)] = 0.0
    return c


def sigma_s_tail_bound(f, s: int) -> float:
    """Sup-norm surrogate: absolute coefficient mass outside the top ``s``."""
    coeffs = getattr(f, "coeffs", f)
    return float(np.sum(np.abs(tail_coefficients(coeffs, s))))


def sigma_s_l2(coeffs, s: int, gamma: float) -> float:
    """Exact best ``s``-term error in ``L2(nu)`` for an in-span function."""
    return math.sqrt(gamma) * float(np.linalg.norm(tail_coefficients(coeffs, s)))


def sigma_s_mixture(coeffs, s: int, gamma: float, U: np.ndarray) -> float:
    """Top-``s`` tail measured in the half-true, half-empirical ``L2`` norm.

    ``U`` holds the dictionary at the sample points.
    """
    tail = tail_coefficients(coeffs, s)
    return mixture_norm(U @ tail, 2, gamma * float(tail @ tail))


def sigma_bound_a1alpha(alpha: float, s: int, dist: float = 0.0) -> float:
    if s < 1:
        raise SparsityError("s must be >= 1")
    return s ** (-alpha - 0.5) + dist


def estimator_bound_constant(p: float, C1: float) -> float:
    """Constant in the full best s-term estimator bound."""
    if not 0.0 < C1 <= 1.0:
        raise ValueError("C1 must lie in (0, 1]")
    ip = 0.0 if np.isinf(p) else 1.0 / p
    root = (1.0 + 1.0 / C1) ** ip
    return 2.0**ip * (1.0 + 2.0 * root) + 2.0**ip * C1 ** (-ip) * (2.0 + 2.0 * root)


def oracle_row(result: OracleResult) -> dict:
    return {
        "method": result.method,
        "support": " ".join(str(i) for i in result.support),
        "residual": result.empirical_residual,
    }
