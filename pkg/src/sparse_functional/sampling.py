"""Random sample sets, sample-size formulas and Monte Carlo discretization checks."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .dictionary import Dictionary, Domain
from .errors import DomainError, SizeError, SparsityError

# universal discretization constants that hold at the explicit sample size
C1_LEMMA8 = 0.25
C2_LEMMA8 = 2.25
# unspecified absolute constant in the existence-type sample bounds
C_SAMPLE_BOUND = 1.0


@dataclass(frozen=True)
class SampleSet:
    points: np.ndarray
    seed: int | None = None

    @property
    def m(self) -> int:
        return int(self.points.shape[0])


def draw_samples(domain: Domain, m: int, seed: int) -> SampleSet:
    """``m`` i.i.d. points from the uniform measure on ``domain``."""
    if m < 1:
        raise ValueError("m must be >= 1")
    rng = np.random.default_rng(seed)
    pts = rng.uniform(0.0, domain.side, size=(m, domain.d))
    return SampleSet(pts, seed)


def grid_samples(domain: Domain, per_axis: int) -> SampleSet:
    """Full uniform periodic tensor grid; gives exact discrete orthogonality."""
    pts, _ = domain.uniform_grid(per_axis)
    return SampleSet(pts, None)


def _log_term(N: int, eps: float) -> float:
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie in (0, 1)")
    if N < 2:
        raise ValueError("N must be >= 2")
    return math.log(2.0 * N * N / eps)


def min_samples_lemma8(gamma: float, N: int, eps: float) -> int:
    """Smallest integer ``m > 64/(3 gamma) * ln(2 N^2 / eps)``."""
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    return math.floor(64.0 / (3.0 * gamma) * _log_term(N, eps)) + 1


def sample_bound_lemma7(R: float, s: int, N: int) -> float:
    """``C R s ln N (ln 4Rs)^2 (ln 4Rs + ln ln N)`` with ``C = 1``."""
    if N < 3:
        raise DomainError("N must be >= 3 so that ln ln N is defined and positive")
    if s < 1 or s > N / 2:
        raise SparsityError(f"need 1 <= s <= N/2, got s={s}, N={N}")
    if not R > 0:
        raise ValueError("R must be positive")
    l4 = math.log(4.0 * R * s)
    return C_SAMPLE_BOUND * R * s * math.log(N) * l4**2 * (l4 + math.log(math.log(N)))


def sample_bound_lemma6(s: int, N: int) -> float:
    """``C s ln N ln^2(4s) (ln 4s + ln ln N)`` with ``C = 1``."""
    return sample_bound_lemma7(1.0, s, N)


def mixture_norm(values: np.ndarray, p: float, exact_norm: float) -> float:
    """Norm under the half-true, half-empirical mixture measure.

    ``values`` are ``f`` at the samples and ``exact_norm`` is ``||f||_p^p``
    under the true measure.
    """
    v = np.abs(np.asarray(values, dtype=np.float64))
    if np.isinf(p):
        return float(max(exact_norm, v.max(initial=0.0)))
    emp = float(np.mean(v**p)) if v.size else 0.0
    return (0.5 * exact_norm + 0.5 * emp) ** (1.0 / p)


@dataclass(frozen=True)
class DiscretizationReport:
    s: int
    p: float
    trials: int
    worst_lower: float
    worst_upper: float
    C1: float = C1_LEMMA8
    C2: float = C2_LEMMA8

    @property
    def passed(self) -> bool:
        return self.C1 <= self.worst_lower and self.worst_upper <= self.C2


def discretization_ratios(U: np.ndarray, gamma: float, W: np.ndarray) -> np.ndarray:
    """Ratios ``(1/m)||U w||^2 / (gamma ||w||^2)`` for each row ``w`` of ``W``."""
    m = U.shape[0]
    emp = np.sum((W @ U.T) ** 2, axis=1) / m
    return emp / (gamma * np.sum(W * W, axis=1))


def random_sparse_vectors(rng: np.random.Generator, n: int, k: int, count: int) -> np.ndarray:
    """``count`` vectors with uniform random ``k``-supports and standard normal entries."""
    W = np.zeros((count, n))
    for t in range(count):
        supp = rng.choice(n, size=k, replace=False)
        W[t, supp] = rng.standard_normal(k)
    return W


def check_universal_discretization(
    dictionary: Dictionary,
    samples: SampleSet,
    s: int,
    p: float = 2,
    trials: int = 100,
    seed: int = 0,
    U: np.ndarray | None = None,
) -> DiscretizationReport:
    """Probe the two-sided discretization inequality with random ``2s``-sparse functions.

    The true norm of an in-span function is ``gamma ||w||^2``, so only the
    empirical side needs sampling.  ``U`` may carry precomputed samples.
    """
    if p != 2:
        raise NotImplementedError("only p = 2 is supported")
    if s < 1 or 2 * s > dictionary.n:
        raise SparsityError(f"need 1 <= s <= N/2, got s={s}, N={dictionary.n}")
    if U is None:
        U = dictionary.evaluate(samples.points)
    rng = np.random.default_rng(seed)
    W = random_sparse_vectors(rng, dictionary.n, 2 * s, trials)
    r = discretization_ratios(U, dictionary.gamma, W)
    return DiscretizationReport(s, p, trials, float(r.min()), float(r.max()))


def exhaustive_discretization_extremes(
    U: np.ndarray, gamma: float, s: int, limit: int = 100_000
) -> tuple[float, float]:
    """Exact worst-case ratios over every ``2s``-sparse function.

    For each ``2s``-subset the extremes are the eigenvalues of the scaled
    Gram submatrix ``G_S / (gamma m)``.  Only feasible for tiny ``N``.
    """
    m, n = U.shape
    k = min(2 * s, n)
    if math.comb(n, k) > limit:
        raise SizeError(f"C({n},{k}) subsets exceeds the guard {limit}")
    G = U.T @ U / (gamma * m)
    lo, hi = math.inf, -math.inf
    for supp in itertools.combinations(range(n), k):
        ev = np.linalg.eigvalsh(G[np.ix_(supp, supp)])
        lo, hi = min(lo, ev[0]), max(hi, ev[-1])
    return float(lo), float(hi)


def column_energies(entries: np.ndarray) -> np.ndarray:
    return np.sum(np.asarray(entries) ** 2, axis=0)


def column_energy_check(design) -> tuple[np.ndarray, bool]:
    """Column energies and whether all lie in ``[gamma m / 2, 3 gamma m / 2]``."""
    e = column_energies(design.entries)
    gm = design.gamma * design.entries.shape[0]
    return e, bool(np.all((e >= 0.5 * gm) & (e <= 1.5 * gm)))


def discretization_row(seed, m, N, report: DiscretizationReport) -> dict:
    return {
        "seed": seed,
        "m": m,
        "N": N,
        "s": report.s,
        "worst_lower": report.worst_lower,
        "worst_upper": report.worst_upper,
        "pass": int(report.passed),
    }
