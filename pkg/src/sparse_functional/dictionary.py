"""Dictionaries on the cube/torus and synthetic functions in the input classes.

The shipped dictionary is the real tensor trigonometric system, rescaled so
every element has sup-norm at most 1 and the Gram matrix under the uniform
probability measure is ``gamma * I`` with ``gamma = 2**-d``.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DimensionError, InvalidDictionaryError, RangeError

CUBE = "cube"
TORUS = "torus"

# per-axis factor kinds
_CONST, _COS, _SIN = 0, 1, 2
_KIND_NAMES = {_CONST: "c", _COS: "cos", _SIN: "sin"}


@dataclass(frozen=True)
class Domain:
    """``[0,1]^d`` (cube) or ``[0,2pi]^d`` (torus) with the uniform probability measure."""

    d: int
    kind: str = CUBE

    def __post_init__(self):
        if self.d < 1:
            raise DimensionError(f"dimension must be >= 1, got {self.d}")
        if self.kind not in (CUBE, TORUS):
            raise ValueError(f"unknown domain kind {self.kind!r}")

    @property
    def side(self) -> float:
        return 1.0 if self.kind == CUBE else 2.0 * math.pi

    def contains(self, points) -> np.ndarray:
        pts = np.atleast_2d(points)
        return np.all((pts >= 0.0) & (pts <= self.side), axis=1)

    def uniform_grid(self, resolution: int) -> tuple[np.ndarray, float]:
        """Tensor periodic grid with ``resolution`` points per axis and its equal weight."""
        axis = self.side * np.arange(resolution) / resolution
        mesh = np.meshgrid(*([axis] * self.d), indexing="ij")
        pts = np.stack([g.ravel() for g in mesh], axis=1)
        return pts, 1.0 / resolution**self.d


@dataclass(frozen=True)
class Dictionary:
    """A finite family of bounded functions with orthogonality constant ``gamma``.

    ``evaluator`` maps an ``(m, d)`` array of points to the ``(m, N)`` matrix
    of element values.
    """

    domain: Domain
    n: int
    gamma: float
    evaluator: Callable[[np.ndarray], np.ndarray] = field(repr=False, compare=False)
    spec: dict = field(default_factory=dict, compare=False)
    labels: tuple = field(default=(), repr=False, compare=False)

    def __post_init__(self):
        if self.n < 2:
            raise InvalidDictionaryError(f"dictionary needs N >= 2 elements, got {self.n}")
        if not self.gamma > 0:
            raise InvalidDictionaryError("orthogonality constant must be positive")

    @property
    def riesz_R(self) -> float:
        return 1.0 / self.gamma

    def evaluate(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        if pts.shape[1] != self.domain.d:
            raise DimensionError(f"points have dimension {pts.shape[1]}, domain has {self.domain.d}")
        return self.evaluator(pts)

    def to_json(self) -> str:
        return json.dumps(self.spec, sort_keys=True)


def trig_frequencies(d: int, max_freq: int) -> list[tuple[tuple[int, ...], tuple[int, ...]]]:
    """Ordered (frequency vector, factor kinds) pairs of the tensor trig system.

    Order: total frequency, then frequency vector, then kinds (cos before sin).
    """
    one_d = [(0, _CONST)] + [(k, kind) for k in range(1, max_freq + 1) for kind in (_COS, _SIN)]
    elems = []
    for combo in itertools.product(one_d, repeat=d):
        freqs = tuple(c[0] for c in combo)
        kinds = tuple(c[1] for c in combo)
        elems.append((freqs, kinds))
    elems.sort(key=lambda e: (sum(e[0]), e[0], e[1]))
    return elems


def build_trig_dictionary(d: int, max_freq: int, kind: str = CUBE) -> Dictionary:
    """Real tensor trigonometric dictionary with ``(2*max_freq+1)**d`` elements."""
    if max_freq < 0:
        raise InvalidDictionaryError("max_freq must be nonnegative")
    domain = Domain(d, kind)
    n = (2 * max_freq + 1) ** d
    if n < 2:
        raise InvalidDictionaryError(f"(d={d}, max_freq={max_freq}) gives N={n} < 2")
    elems = trig_frequencies(d, max_freq)
    # column of the per-axis factor table for each (k, kind)
    col_of = {(0, _CONST): 0}
    for k in range(1, max_freq + 1):
        col_of[(k, _COS)] = 2 * k - 1
        col_of[(k, _SIN)] = 2 * k
    factor_idx = np.array([[col_of[(f, kd)] for f, kd in zip(fr, kn)] for fr, kn in elems], dtype=np.int64)
    omega = 2.0 * math.pi / domain.side
    ks = np.arange(1, max_freq + 1)

    def evaluator(points: np.ndarray) -> np.ndarray:
        out = np.ones((points.shape[0], n))
        for a in range(d):
            phase = omega * np.outer(points[:, a], ks)
            table = np.empty((points.shape[0], 2 * max_freq + 1))
            table[:, 0] = 1.0 / math.sqrt(2.0)
            table[:, 1::2] = np.cos(phase)
            table[:, 2::2] = np.sin(phase)
            out *= table[:, factor_idx[:, a]]
        return out

    labels = tuple(
        "*".join(
            "c" if kd == _CONST else f"{_KIND_NAMES[kd]}{f}" for f, kd in zip(fr, kn)
        )
        for fr, kn in elems
    )
    spec = {"kind": kind, "d": d, "max_freq": max_freq}
    return Dictionary(domain, n, 2.0**-d, evaluator, spec, labels)


def dictionary_from_json(text: str) -> Dictionary:
    spec = json.loads(text) if isinstance(text, str) else dict(text)
    return build_trig_dictionary(int(spec["d"]), int(spec["max_freq"]), spec.get("kind", CUBE))


def synthesize(dictionary: Dictionary, coeffs, x):
    """``sum_i coeffs_i u_i(x)``; scalar for a single point, vector otherwise."""
    c = np.asarray(coeffs, dtype=np.float64)
    if c.shape != (dictionary.n,):
        raise DimensionError(f"expected {dictionary.n} coefficients, got shape {c.shape}")
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 0 or (x.ndim == 1 and dictionary.domain.d > 1) or (x.ndim == 1 and x.size == 1)
    pts = x.reshape(-1, dictionary.domain.d)
    vals = dictionary.evaluate(pts) @ c
    return float(vals[0]) if single else vals


def gram_check(dictionary: Dictionary, grid_resolution: int) -> float:
    """Largest deviation ``|<u_i,u_j> - gamma delta_ij|`` under tensor grid quadrature."""
    if grid_resolution < 2 * dictionary.n:
        raise ValueError(f"grid_resolution must be >= 2N = {2 * dictionary.n}")
    pts, w = dictionary.domain.uniform_grid(grid_resolution)
    U = dictionary.evaluate(pts)
    G = w * (U.T @ U)
    return float(np.max(np.abs(G - dictionary.gamma * np.eye(dictionary.n))))


# ---------------------------------------------------------------- functions


@dataclass(frozen=True)
class SyntheticFunction:
    """A coefficient-defined function ``sum_i c_i u_i`` with its class tag."""

    coeffs: np.ndarray
    class_tag: str = "Custom"
    params: dict = field(default_factory=dict)

    @property
    def B(self) -> float:
        """Sup-norm bound ``sum |c_i|``; valid because every ``|u_i| <= 1``."""
        return float(np.sum(np.abs(self.coeffs)))

    def __call__(self, dictionary: Dictionary, x):
        return synthesize(dictionary, self.coeffs, x)

    def to_json(self) -> str:
        return json.dumps(
            {"class_tag": self.class_tag, "params": self.params, "coeffs": [repr(float(c)) for c in self.coeffs]}
        )

    @classmethod
    def from_json(cls, text: str) -> "SyntheticFunction":
        raw = json.loads(text)
        return cls(np.array([float(c) for c in raw["coeffs"]]), raw["class_tag"], raw.get("params", {}))


def normalize_a1(coeffs, alpha: float) -> np.ndarray:
    """Rescale so that ``sum |c_i| i**alpha == 1`` (indices start at 1)."""
    c = np.asarray(coeffs, dtype=np.float64)
    weight = np.sum(np.abs(c) * np.arange(1, c.size + 1) ** alpha)
    if weight == 0:
        raise ValueError("cannot normalize the zero vector")
    return c / weight


def sample_a1_alpha(dictionary: Dictionary, alpha: float, seed: int) -> SyntheticFunction:
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    rng = np.random.default_rng(seed)
    n = dictionary.n
    i = np.arange(1, n + 1)
    signs = rng.choice([-1.0, 1.0], size=n)
    mags = rng.uniform(0.5, 1.5, size=n) * i ** (-alpha - 1.0)
    c = normalize_a1(signs * mags, alpha)
    return SyntheticFunction(c, "A1Alpha", {"alpha": alpha, "seed": seed})


def a1_weight(coeffs, alpha: float) -> float:
    c = np.asarray(coeffs)
    return float(np.sum(np.abs(c) * np.arange(1, c.size + 1) ** alpha))


def dyadic_level(k: int) -> int:
    """The ``n`` with ``floor(2**(n-1)) <= |k| < 2**n``."""
    k = abs(k)
    return 0 if k == 0 else k.bit_length()


def mixed_level_vectors(d: int, j: int) -> list[tuple[int, ...]]:
    """All ``n`` in ``N_0^d`` with ``|n|_1 == j``."""
    return [n for n in itertools.product(range(j + 1), repeat=d) if sum(n) == j]


def mixed_block_bound(a: float, b: float, d: int, j: int) -> float:
    jbar = max(j, 1)
    return 2.0 ** (-a * j) * jbar ** ((d - 1) * b)


def mixed_levels(dictionary: Dictionary) -> np.ndarray:
    """Mixed dyadic level ``|n|_1`` of every element of a trig dictionary."""
    d, K = dictionary.spec["d"], dictionary.spec["max_freq"]
    return np.array([sum(dyadic_level(k) for k in fr) for fr, _ in trig_frequencies(d, K)])


def block_masses(fn: SyntheticFunction, dictionary: Dictionary, unscaled: bool = True) -> dict[int, float]:
    """Per-level absolute coefficient sums, optionally undoing the global rescale."""
    levels = mixed_levels(dictionary)
    scale = fn.params.get("rescale", 1.0) if unscaled else 1.0
    c = np.abs(fn.coeffs) / scale
    return {int(j): float(c[levels == j].sum()) for j in range(int(fn.params.get("max_level", levels.max())) + 1)}


def sample_mixed_smoothness(
    d: int, a: float, b: float, max_level: int, seed: int, max_freq: int | None = None
) -> tuple[SyntheticFunction, Dictionary]:
    """Random member of the mixed-smoothness class on the torus.

    Each level ``j <= max_level`` gets absolute coefficient mass exactly
    ``2**(-a j) * max(j,1)**((d-1) b)``; the whole vector is then scaled by
    ``rescale = 1/sum(masses)`` when that sum exceeds 1, so ``B <= 1``.
    Returns the function and the torus dictionary it lives in.
    """
    if not a > 0:
        raise ValueError("a must be positive")
    if max_level < 0:
        raise ValueError("max_level must be >= 0")
    needed = 2**max_level - 1
    if max_freq is None:
        max_freq = max(needed, 1)
    elif max_freq < needed:
        raise RangeError(f"max_level={max_level} needs max_freq >= {needed}, dictionary has {max_freq}")
    dictionary = build_trig_dictionary(d, max_freq, TORUS)
    levels = mixed_levels(dictionary)
    rng = np.random.default_rng(seed)
    c = np.zeros(dictionary.n)
    for j in range(max_level + 1):
        members = np.flatnonzero(levels == j)
        w = rng.exponential(size=members.size)
        w *= mixed_block_bound(a, b, d, j) / w.sum()
        c[members] = rng.choice([-1.0, 1.0], size=members.size) * w
    total = float(np.abs(c).sum())
    rescale = 1.0 / total if total > 1.0 else 1.0
    params = {"a": a, "b": b, "d": d, "max_level": max_level, "seed": seed, "rescale": rescale}
    return SyntheticFunction(c * rescale, "MixedSmooth", params), dictionary
