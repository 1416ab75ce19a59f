"""Sampled design matrices, mutual coherence and the coherence-based sandwich."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .dictionary import Dictionary
from .errors import ContractError, DegenerateSamplingError, SparsityError
from .sampling import SampleSet, _log_term


@dataclass(frozen=True)
class DesignMatrix:
    """``entries[t, i] = u_i(xi_t)`` with its column normalizer and coherence."""

    entries: np.ndarray
    normalizer: np.ndarray
    mu: float
    C_A: float
    gamma: float = 1.0

    @property
    def m(self) -> int:
        return self.entries.shape[0]

    @property
    def n(self) -> int:
        return self.entries.shape[1]

    @property
    def normalized(self) -> np.ndarray:
        return self.entries * self.normalizer

    @property
    def sbar(self) -> float:
        return sbar(self.mu)


def design_from_matrix(entries, gamma: float = 1.0) -> DesignMatrix:
    D = np.ascontiguousarray(entries, dtype=np.float64)
    if D.ndim != 2:
        raise ValueError("design entries must be a 2-D array")
    energy = np.sum(D * D, axis=0)
    zero = np.flatnonzero(energy == 0.0)
    if zero.size:
        raise DegenerateSamplingError(int(zero[0]))
    L = 1.0 / np.sqrt(energy)
    A = D * L
    return DesignMatrix(D, L, mutual_coherence(D), float(np.max(np.abs(A))), gamma)


def build_design_matrix(dictionary: Dictionary, samples: SampleSet) -> DesignMatrix:
    return design_from_matrix(dictionary.evaluate(samples.points), dictionary.gamma)


def mutual_coherence(matrix) -> float:
    """Largest normalized inner product between two distinct columns."""
    A = np.asarray(matrix, dtype=np.float64)
    if A.ndim != 2:
        raise ValueError("expected a 2-D array")
    norms = np.linalg.norm(A, axis=0)
    zero = np.flatnonzero(norms == 0.0)
    if zero.size:
        raise DegenerateSamplingError(int(zero[0]), f"column {int(zero[0])} is zero")
    return float(kernels.coherence_scan(np.ascontiguousarray(A)))


def sbar(mu: float) -> float:
    """Admissible sparsity threshold ``(1 + 1/mu) / 2``; ``inf`` when ``mu == 0``.

    With ``inf`` the caller caps ``s`` at ``N // 2``.
    """
    if mu < 0:
        raise ValueError("coherence is nonnegative")
    return math.inf if mu == 0 else 0.5 * (1.0 + 1.0 / mu)


def select_sparsity_lemma8(gamma: float, m: int, N: int, eps: float) -> int:
    s = math.floor(0.5 * (1.0 + math.sqrt(3.0 * gamma * m / _log_term(N, eps)) / 16.0))
    return max(0, min(s, N // 2))


def coherence_bound_lemma8(gamma: float, m: int, N: int, eps: float) -> float:
    return 8.0 * math.sqrt(_log_term(N, eps) / (3.0 * gamma * m))


def rip_sandwich_check(matrix, x, tol: float = 1e-9):
    """Check ``(1-(s-1)mu)|x|^2 <= |Ax|^2 <= (1+(s-1)mu)|x|^2`` for unit-column ``A``.

    ``x`` may be a vector or a stack of row vectors sharing one sparsity.
    Returns ``(lower_ok, upper_ok, ratios)``.
    """
    A = np.asarray(matrix, dtype=np.float64)
    if not np.allclose(np.linalg.norm(A, axis=0), 1.0, rtol=0, atol=1e-12):
        raise ContractError("matrix columns must have unit Euclidean norm")
    X = np.atleast_2d(np.asarray(x, dtype=np.float64))
    s_each = np.count_nonzero(X, axis=1)
    if np.any(s_each == 0):
        raise SparsityError("test vectors must be nonzero")
    mu = mutual_coherence(A)
    nrm = np.sum(X * X, axis=1)
    ratios = np.sum((X @ A.T) ** 2, axis=1) / nrm
    lower = ratios >= 1.0 - (s_each - 1) * mu - tol
    upper = ratios <= 1.0 + (s_each - 1) * mu + tol
    if np.ndim(x) == 1:
        return bool(lower[0]), bool(upper[0]), ratios
    return lower, upper, ratios


def write_design_csv(design: DesignMatrix, path) -> None:
    np.savetxt(path, design.entries, delimiter=",", fmt="%.17g")
