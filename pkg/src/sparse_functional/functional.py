"""Hoelder functionals, the encode/reconstruct/evaluate pipeline, and the theoretical constants."""
from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from .coherence import DesignMatrix, design_from_matrix
from .dictionary import Dictionary, SyntheticFunction, build_trig_dictionary, sample_a1_alpha, sample_mixed_smoothness
from .errors import AdmissibilityError, ConfigError, ContractError, SizeError
from .oracle import best_s_term_exhaustive, estimator_bound_constant, sigma_s_mixture, sigma_s_tail_bound
from .sampling import C1_LEMMA8, C2_LEMMA8, SampleSet, discretization_ratios, draw_samples
from .sparse_coding import encode, encoder_error_bound, make_schedule
from . import kernels
from .taylor import bump, rescale_holder, taylor_error_bound

L2_NORM = "L2Norm"
INNER_PRODUCT = "InnerProduct"
SCALAR_COMPOSE = "ScalarCompose"
EXACT = "ExactComposition"
TAYLOR = "LocalizedTaylor"


@dataclass(frozen=True)
class HolderMap:
    """A scalar map with a certified Hoelder exponent and constant."""

    fn: Callable[[float], float]
    beta: float
    constant: float = 1.0

    def __call__(self, t):
        return self.fn(t)


def quadrature_resolution(dictionary: Dictionary) -> int:
    """Per-axis grid size that integrates products of two dictionary elements exactly.

    Trig products carry frequencies up to ``2K``, so ``2(2K+1)`` points per
    axis suffice; in one dimension this is ``2N``.
    """
    return 2 * round(dictionary.n ** (1.0 / dictionary.domain.d))


@dataclass(frozen=True)
class Functional:
    """``P`` on functions and its exact coefficient-space form ``P o D_N``."""

    kind: str
    beta: float
    dictionary: Dictionary = field(repr=False)
    params: dict = field(default_factory=dict, repr=False)

    def coefficient_evaluator(self, w) -> float:
        w = np.asarray(w, dtype=np.float64)
        gamma = self.dictionary.gamma
        if self.kind == L2_NORM:
            return math.sqrt(gamma) * float(np.linalg.norm(w))
        inner = gamma * float(w @ self.params["g"])
        if self.kind == INNER_PRODUCT:
            return inner
        return float(self.params["h"](inner))

    def evaluator(self, f: Callable, resolution: int | None = None) -> float:
        """Evaluate on a function given pointwise, by tensor-grid quadrature."""
        res = resolution or quadrature_resolution(self.dictionary)
        pts, weight = self.dictionary.domain.uniform_grid(res)
        vals = np.asarray(f(pts), dtype=np.float64)
        if self.kind == L2_NORM:
            return math.sqrt(weight * float(vals @ vals))
        g_vals = self.dictionary.evaluate(pts) @ self.params["g"]
        inner = weight * float(vals @ g_vals)
        if self.kind == INNER_PRODUCT:
            return inner
        return float(self.params["h"](inner))

    def at_zero(self) -> float:
        return self.coefficient_evaluator(np.zeros(self.dictionary.n))


def make_functional(kind: str, dictionary: Dictionary, g=None, h: HolderMap | None = None) -> Functional:
    if kind == L2_NORM:
        return Functional(kind, 1.0, dictionary)
    if kind not in (INNER_PRODUCT, SCALAR_COMPOSE):
        raise ConfigError(f"unknown functional kind {kind!r}")
    if g is None:
        raise ContractError(f"{kind} needs the coefficient vector g")
    g = np.asarray(g, dtype=np.float64)
    if g.shape != (dictionary.n,):
        raise ContractError(f"g must have length {dictionary.n}")
    # the Lipschitz constant of f -> <f, g> is ||g||
    if math.sqrt(dictionary.gamma) * np.linalg.norm(g) > 1.0 + 1e-12:
        raise ContractError("||g|| must be at most 1 for a Hoelder constant <= 1")
    if kind == INNER_PRODUCT:
        return Functional(kind, 1.0, dictionary, {"g": g})
    if not isinstance(h, HolderMap):
        raise ContractError("ScalarCompose needs a HolderMap with a certified exponent")
    if not 0.0 < h.beta <= 1.0 or h.constant > 1.0:
        raise ContractError("the scalar map must be beta-Hoelder with constant <= 1")
    return Functional(kind, h.beta, dictionary, {"g": g, "h": h})


# ---------------------------------------------------------------- constants


def _diag_norms(design: DesignMatrix) -> tuple[float, float]:
    """``||L||_2`` (equal to ``||L||_inf`` for a diagonal) and ``||L^{-1}||_2``."""
    L = design.normalizer
    return float(L.max()), float((1.0 / L).max())


def modulus_constants_raw(m, mu, s, p, C1, C2, L_norm, L_inv_norm) -> tuple[float, float]:
    ip = 0.0 if np.isinf(p) else 1.0 / p
    spread = (2 * s - 1) * mu
    if spread >= 1.0:
        raise AdmissibilityError(f"(2s-1) mu = {spread:.4g} >= 1; the lower modulus constant is undefined")
    c1 = C1 ** (-ip) * m ** (-ip) * L_inv_norm * max(1.0, m ** (ip - 0.5)) * math.sqrt(1.0 + spread)
    c2 = math.sqrt(1.0 - spread) / (m**ip * C2**ip * L_norm * max(1.0, m ** (0.5 - ip)))
    return c1, c2


def modulus_constants(design: DesignMatrix, s: int, p: float = 2, C1: float = C1_LEMMA8,
                      C2: float = C2_LEMMA8) -> tuple[float, float]:
    """Constants relating the coefficient-space and function-space moduli."""
    L_norm, L_inv = _diag_norms(design)
    return modulus_constants_raw(design.m, design.mu, s, p, C1, C2, L_norm, L_inv)


@dataclass(frozen=True)
class TheoreticalConstants:
    c0: float
    C: float
    C_mp: float
    C3: float
    C4: float
    C5: float
    C6: float
    C7: float
    C8: float
    B_bar: float
    c1_tilde: float | None = None
    c2_tilde: float | None = None
    C_P: float | None = None
    C9: float | None = None

    def composite_bound(self, J: int, sigma: float) -> float:
        """``C7 exp(-C5 J) + C8 sigma``."""
        return self.C7 * self.decay(J) + self.C8 * sigma

    def decay(self, J: int, beta: float = 1.0) -> float:
        """``exp(-C5 beta J)``, read as 1 at ``J = 0`` even when ``C5`` is infinite."""
        return 1.0 if J == 0 else math.exp(-self.C5 * beta * J)

    def as_dict(self) -> dict:
        return asdict(self)


def theoretical_constants(
    p: float,
    m: int,
    B: float,
    s: int,
    N: int,
    design: DesignMatrix,
    J: int,
    C1: float = C1_LEMMA8,
    functional: Functional | None = None,
    C2: float = C2_LEMMA8,
) -> TheoreticalConstants:
    """All explicit constants of the encoder bound and, given a functional, of the full bound.

    ``C_P`` uses ``|P(0)| + (N B_bar)^beta``, the computable upper bound on
    the supremum of ``|P o D_N|`` over the box.
    """
    mu = design.mu
    rho = 2.0 * mu * s - mu
    if rho >= 1.0:
        raise AdmissibilityError(f"rho = {rho:.4g} >= 1")
    ip = 0.0 if np.isinf(p) else 1.0 / p
    c0 = float(design.normalizer.max())
    C = 2.0 * s * float(np.sum(rho ** np.arange(J + 1)))
    C_mp = max(1.0, m ** (ip - 0.5))
    C3 = estimator_bound_constant(p, C1)
    C4 = 6.0 * c0 * B * m * s * N ** (1.0 - ip)
    C5 = -math.log(rho) if rho > 0 else math.inf
    C6 = c0 * C * 2.0**ip * m * N ** (1.0 - ip)
    C7 = 12.0 * C1 ** (-ip) * C_mp * m ** (1.0 - ip) * B * s
    C8 = 2.0 ** (1.0 + ip) * C * C1 ** (-ip) * C_mp * m ** (1.0 - ip) + C3
    L_norm, L_inv = _diag_norms(design)
    B_bar = C4 + C6 * B + 6.0 * B * m * L_norm
    try:
        c1t, c2t = modulus_constants_raw(m, mu, s, p, C1, C2, L_norm, L_inv)
    except AdmissibilityError:
        c1t = c2t = None
    C_P = C9 = None
    if functional is not None and c1t is not None:
        beta = functional.beta
        C_P = abs(functional.at_zero()) + (N * B_bar) ** beta
        C9 = (c1t**beta + C_P) * (1.0 + 2.0**beta * B_bar**beta)
    return TheoreticalConstants(c0, C, C_mp, C3, C4, C5, C6, C7, C8, B_bar, c1t, c2t, C_P, C9)


# ---------------------------------------------------------------- decoders


MAX_CELL_COMBOS = 1 << 20


def lazy_taylor_point(g: Callable[[np.ndarray], float], z: np.ndarray, n_cells: int) -> float:
    """Zeroth-order localized approximant of ``g`` at one point of ``[-1/2,1/2]^n``.

    Only the cells whose bump is positive at ``z`` are visited, so the
    dimension may be large as long as few coordinates straddle two cells.
    """
    lo = np.clip(np.floor((z + 0.5) * n_cells).astype(np.int64), 0, n_cells)
    options = []
    for a in range(z.size):
        cand = [(m, float(bump(z[a], m, n_cells))) for m in (lo[a], lo[a] + 1) if m <= n_cells]
        options.append([(m, h) for m, h in cand if h > 0])
    combos = math.prod(len(o) for o in options)
    if combos > MAX_CELL_COMBOS:
        raise SizeError(f"{combos} touching cells; use an even cell count")
    total = 0.0
    for pick in itertools.product(*options):
        weight = math.prod(h for _, h in pick)
        center = -0.5 + np.array([m for m, _ in pick], dtype=np.float64) / n_cells
        total += weight * g(center)
    return total


# ---------------------------------------------------------------- pipeline


@dataclass
class PipelineReport:
    support: list
    l2_error: float
    P_f: float
    P_f_function_space: float
    P_fs: float
    P_hat: float
    abs_error: float
    holder_bound: float
    sigma_tail: float
    delta: float
    rho: float
    valid: bool
    encoder_bound: float | None = None
    composite_bound: float | None = None
    functional_bound: float | None = None
    decoder: str = EXACT
    rescale_factor: float | None = None
    box: float | None = None
    taylor_bound: float | None = None
    constants: dict | None = None
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def evaluate_pipeline(
    P: Functional,
    f: SyntheticFunction,
    dictionary: Dictionary,
    samples: SampleSet,
    s: int,
    J: int,
    decoder: str = EXACT,
    n_cells: int | None = None,
    box: float | None = None,
    delta: float | None = None,
    coeff_bound: float | None = None,
    probes: int = 200,
    seed: int = 0,
) -> PipelineReport:
    """Sample, encode, reconstruct, then evaluate ``P`` on the reconstruction.

    ``delta`` defaults to ``sqrt(2) m`` times the coefficient tail beyond
    the top ``s``; that dominates the l1 residual of the best sampled
    ``s``-term fit.  ``box`` overrides the coefficient box used to rescale
    for the localized decoder.
    """
    U = dictionary.evaluate(samples.points)
    design = design_from_matrix(U, dictionary.gamma)
    m, n = design.m, design.n
    rho = 2.0 * design.mu * s - design.mu
    if rho >= 1.0:
        raise AdmissibilityError(f"s={s} is not below sbar={design.sbar:.4g}")
    y = U @ f.coeffs
    sigma = sigma_s_tail_bound(f, s)
    if delta is None:
        delta = math.sqrt(2.0) * m * sigma
    B = f.B
    code = encode(design, y, s, B, delta, J, coeff_bound=coeff_bound)
    w = code.w
    gamma = dictionary.gamma
    l2_error = math.sqrt(gamma) * float(np.linalg.norm(f.coeffs - w))
    P_f = P.coefficient_evaluator(f.coeffs)
    P_f_fs = P.evaluator(lambda x: dictionary.evaluate(x) @ f.coeffs)
    P_fs = P.coefficient_evaluator(w)
    notes = []

    # hypotheses: one-sided discretization on random 2s-sparse probes and on the
    # actual difference between the best sampled fit and the encoder output
    rng = np.random.default_rng(seed)
    W = np.zeros((probes, n))
    for t in range(probes):
        supp = rng.choice(n, size=min(2 * s, n), replace=False)
        W[t, supp] = rng.standard_normal(supp.size)
    ratios = discretization_ratios(U, gamma, W)
    best = best_s_term_exhaustive(U, y, s) if math.comb(n, s) <= 200_000 else None
    valid = bool(ratios.min() >= C1_LEMMA8)
    if best is not None:
        diff = best.code.w - w
        if np.any(diff):
            valid &= bool(discretization_ratios(U, gamma, diff[None, :])[0] >= C1_LEMMA8)
        resid_l1 = float(np.abs(y - U @ best.code.w).sum())
        if resid_l1 > delta * (1 + 1e-12):
            valid = False
            notes.append("best s-term residual exceeds delta")
    else:
        notes.append("best s-term fit skipped; validity from random probes only")

    consts = theoretical_constants(2, m, B, s, n, design, J, functional=P)
    composite = consts.composite_bound(J, sigma)
    beta = P.beta
    functional_bound = consts.C7**beta * consts.decay(J, beta) + consts.C8**beta * sigma**beta
    enc = encoder_error_bound(design.mu, s, coeff_bound if coeff_bound is not None else 6.0 * B * m, delta, J)
    report = PipelineReport(
        support=[int(i) for i in code.support],
        l2_error=l2_error,
        P_f=P_f,
        P_f_function_space=P_f_fs,
        P_fs=P_fs,
        P_hat=P_fs,
        abs_error=abs(P_f - P_fs),
        holder_bound=l2_error**beta,
        sigma_tail=sigma,
        delta=delta,
        rho=rho,
        valid=valid,
        encoder_bound=enc,
        composite_bound=composite,
        functional_bound=functional_bound,
        decoder=decoder,
        constants=consts.as_dict(),
        notes=notes,
    )
    if decoder == TAYLOR:
        if n_cells is None:
            raise ConfigError("LocalizedTaylor needs n_cells")
        half = consts.B_bar if box is None else box
        if box is not None:
            notes.append("coefficient box overridden; decoder bound is a report, not a certificate")
        g, factor = rescale_holder(P.coefficient_evaluator, half, beta)
        p_hat = lazy_taylor_point(g, np.clip(w / (2.0 * half), -0.5, 0.5), n_cells)
        report.P_hat = p_hat
        report.abs_error = abs(P_f - p_hat)
        report.rescale_factor = factor
        report.box = half
        if consts.C9 is not None:
            report.taylor_bound = consts.C9 * taylor_error_bound(n, 0, beta, n_cells)
            report.functional_bound += report.taylor_bound
    return report


# ---------------------------------------------------------------- rates


def fit_slope(x, y) -> float:
    """Least-squares slope of ``y`` against ``x``."""
    return float(np.polyfit(np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64), 1)[0])


def sigma_sweep(class_spec: dict, s_values, trials: int, seed: int, m: int | None = None) -> list[dict]:
    """Mean sampled-mixture ``sigma_{2s}`` per ``s`` for random members of a class."""
    kind = class_spec["kind"]
    rows = []
    ss = np.random.SeedSequence(seed)
    children = ss.spawn(trials)
    draws = []
    for t, child in enumerate(children):
        fseed, sseed = (int(v) for v in child.generate_state(2))
        if kind == "A1Alpha":
            dictionary = build_trig_dictionary(class_spec.get("d", 1), class_spec.get("max_freq", 256))
            fn = sample_a1_alpha(dictionary, class_spec["alpha"], fseed)
        elif kind == "MixedSmooth":
            fn, dictionary = sample_mixed_smoothness(
                class_spec.get("d", 2), class_spec["a"], class_spec.get("b", 0.0), class_spec["max_level"], fseed
            )
        else:
            raise ConfigError(f"unknown class kind {kind!r}")
        samples = draw_samples(dictionary.domain, m or 2 * dictionary.n, sseed)
        draws.append((fn, dictionary, dictionary.evaluate(samples.points)))
    for s in s_values:
        errs = np.array([sigma_s_mixture(fn.coeffs, 2 * s, d.gamma, U) for fn, d, U in draws])
        bound = s ** (-class_spec["alpha"] - 0.5) if kind == "A1Alpha" else float("nan")
        rows.append({"param": s, "mean_error": float(errs.mean()), "std_error": float(errs.std()), "bound": bound})
    return rows


def random_normalized_design(rng: np.random.Generator, m: int, n: int) -> DesignMatrix:
    A = rng.standard_normal((m, n))
    return design_from_matrix(A / np.linalg.norm(A, axis=0))


def encoder_sweep(m: int, n: int, J: int, trials: int, seed: int, B: float = 1.0,
                  delta: float = 0.0) -> tuple[list[dict], float]:
    """Mean l1 tracking error against iteration count for one-sparse targets at magnitude ``B``.

    Returns the per-``k`` rows and the mean ``ln rho`` over trials.
    """
    rng = np.random.default_rng(seed)
    errs = np.zeros((trials, J + 1))
    log_rho = np.zeros(trials)
    for t in range(trials):
        design = random_normalized_design(rng, m, n)
        x_star = np.zeros(n)
        x_star[rng.integers(n)] = B * rng.choice([-1.0, 1.0])
        A = design.normalized
        noise = np.zeros(m)
        if delta > 0:
            noise = rng.standard_normal(m)
            noise *= delta / np.abs(noise).sum()
        sched = make_schedule(design.mu, 1, B, delta, design.C_A, J)
        _, its = kernels.thresholded_iteration(A, A @ x_star + noise, sched.theta[:J], True)
        errs[t] = np.abs(its - x_star).sum(axis=1)
        log_rho[t] = math.log(sched.rho)
    mean = errs.mean(axis=0)
    # geometric mean across trials so that the fitted slope averages ln rho
    with np.errstate(divide="ignore"):
        geo = np.exp(np.log(errs).mean(axis=0))
    rows = [{"param": k, "mean_error": float(mean[k]), "std_error": float(errs[:, k].std()),
             "geo_error": float(geo[k]), "bound": float("nan")} for k in range(J + 1)]
    return rows, float(log_rho.mean())


def pre_plateau_slope(errors, floor: float = 1e-12) -> tuple[float, int]:
    """Slope of ``log(error)`` vs iteration over the prefix that stays above ``floor``."""
    e = np.asarray(errors, dtype=np.float64)
    k = int(np.argmax(e <= floor)) if np.any(e <= floor) else e.size
    k = max(k, 2)
    return fit_slope(np.arange(k), np.log(e[:k])), k


def rate_experiment(class_spec: dict, sweep: dict, trials: int, seed: int) -> dict:
    """Sweeps over ``s`` (best-term tail) and ``J`` (encoder decay) with fitted slopes."""
    out = {}
    if "s" in sweep:
        rows = sigma_sweep(class_spec, sweep["s"], trials, seed, sweep.get("m"))
        slope = fit_slope(np.log([r["param"] for r in rows]), np.log([r["mean_error"] for r in rows]))
        for r in rows:
            r["slope_window"] = f"{rows[0]['param']}-{rows[-1]['param']}"
        out["s"] = {"rows": rows, "slope": slope}
    if "J" in sweep:
        rows, log_rho = encoder_sweep(sweep.get("m", 32), sweep.get("n", 64), int(sweep["J"]), trials, seed)
        slope, k = pre_plateau_slope([r["geo_error"] for r in rows])
        for r in rows:
            r["slope_window"] = f"0-{k - 1}"
        out["J"] = {"rows": rows, "slope": slope, "log_rho": log_rho}
    return out
