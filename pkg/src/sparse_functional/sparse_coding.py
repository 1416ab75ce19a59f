"""Thresholded iteration with the class-uniform threshold schedule."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .coherence import DesignMatrix
from .dictionary import Dictionary
from .errors import AdmissibilityError, InputError

# rounding budget per unit of m * ||y||_1, treated as measurement noise
FP_DELTA = 16.0 * np.finfo(np.float64).eps


@dataclass(frozen=True)
class ThresholdSchedule:
    """``B[k]`` bounds the worst-case l1 error after ``k`` steps; ``theta[k]`` drives step ``k+1``."""

    mu: float
    s: int
    B: np.ndarray
    theta: np.ndarray
    delta: float
    C_A: float

    @property
    def rho(self) -> float:
        return 2.0 * self.mu * self.s - self.mu

    @property
    def J(self) -> int:
        return len(self.B) - 1

    @property
    def contractive(self) -> bool:
        return self.rho < 1.0

    @property
    def fixed_point(self) -> float:
        if not self.contractive:
            return math.inf
        return 2.0 * self.s * self.C_A * self.delta / (1.0 - self.rho)


def make_schedule(mu: float, s: int, B: float, delta: float, C_A: float, J: int) -> ThresholdSchedule:
    if s < 1:
        raise ValueError("s must be >= 1")
    if J < 0:
        raise ValueError("J must be >= 0")
    rho = 2.0 * mu * s - mu
    Bk = np.empty(J + 1)
    Bk[0] = s * B
    for k in range(J):
        Bk[k + 1] = rho * Bk[k] + 2.0 * s * C_A * delta
    theta = mu * Bk + C_A * delta
    return ThresholdSchedule(mu, s, Bk, theta, delta, C_A)


def encoder_error_bound(mu: float, s: int, B: float, delta: float, J: int) -> float:
    """``sB rho^J + delta * 2s sum_{i<=J} rho^i`` with ``rho = 2 mu s - mu``."""
    rho = 2.0 * mu * s - mu
    if rho >= 1.0:
        raise AdmissibilityError(f"rho = {rho:.6g} >= 1; the iteration is not contractive")
    return s * B * rho**J + delta * 2.0 * s * float(np.sum(rho ** np.arange(J + 1)))


@dataclass(frozen=True)
class SparseCode:
    w: np.ndarray
    s: int
    schedule: ThresholdSchedule | None = field(default=None, repr=False)
    iterates: np.ndarray | None = field(default=None, repr=False)
    certified: bool = True

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.w)


def encode(
    design: DesignMatrix,
    y,
    s: int,
    B: float,
    delta: float,
    J: int,
    coeff_bound: float | None = None,
    force: bool = False,
    trace: bool = False,
) -> SparseCode:
    """Run ``J`` steps on the normalized system and map back to dictionary coordinates.

    ``B`` is the sup bound of the target function.  The schedule needs a bound
    on the normalized coefficients; by default that is ``6 B m``, and
    ``coeff_bound`` overrides it when the true coefficients are known.
    ``delta`` is raised to a rounding floor proportional to ``m ||y||_1`` so
    that floating-point residue cannot leak past near-zero thresholds.
    """
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (design.m,):
        raise InputError(f"expected {design.m} samples, got shape {y.shape}")
    if not np.all(np.isfinite(y)):
        raise InputError("samples contain non-finite values")
    delta = max(delta, FP_DELTA * design.m * float(np.abs(y).sum()))
    sched = make_schedule(design.mu, s, 6.0 * B * design.m if coeff_bound is None else coeff_bound,
                          delta, design.C_A, J)
    if not sched.contractive and not force:
        raise AdmissibilityError(
            f"s={s} is not below sbar={design.sbar:.4g} (rho={sched.rho:.4g}); pass force=True to run anyway"
        )
    x, its = kernels.thresholded_iteration(design.normalized, y, sched.theta[:J], trace)
    w = design.normalizer * x
    # the guarantee caps the support only when the schedule is valid
    return SparseCode(w, s, sched, its, sched.contractive)


@dataclass(frozen=True)
class Reconstruction:
    dictionary: Dictionary
    code: SparseCode

    def __call__(self, x):
        pts = np.atleast_2d(np.asarray(x, dtype=np.float64)).reshape(-1, self.dictionary.domain.d)
        supp = self.code.support
        if supp.size == 0:
            return np.zeros(pts.shape[0])
        return self.dictionary.evaluate(pts)[:, supp] @ self.code.w[supp]

    def l2_error(self, coeffs) -> float:
        """Exact ``||f - f_s||`` for an in-span ``f`` via orthogonality."""
        diff = np.asarray(coeffs, dtype=np.float64) - self.code.w
        return math.sqrt(self.dictionary.gamma) * float(np.linalg.norm(diff))


def reconstruct(dictionary: Dictionary, code: SparseCode) -> Reconstruction:
    if code.w.shape != (dictionary.n,):
        raise InputError(f"code has length {code.w.size}, dictionary has {dictionary.n}")
    return Reconstruction(dictionary, code)


def trace_rows(code: SparseCode, x_star=None) -> list[dict]:
    """Per-iteration rows in normalized coordinates."""
    if code.iterates is None:
        raise InputError("encode was run without trace=True")
    rows = []
    for k, xk in enumerate(code.iterates):
        theta = code.schedule.theta[k] if k < len(code.schedule.theta) else float("nan")
        rows.append({
            "k": k,
            "theta": float(theta),
            "bound": float(code.schedule.B[k]),
            "l1_error": float(np.abs(xk - x_star).sum()) if x_star is not None else float("nan"),
            "support_size": int(np.count_nonzero(xk)),
        })
    return rows


def write_trace_csv(rows, path) -> None:
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
