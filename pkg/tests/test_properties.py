import math

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from sparse_functional import coherence as C
from sparse_functional import dictionary as D
from sparse_functional import functional as F
from sparse_functional import kernels
from sparse_functional import oracle as O
from sparse_functional import sparse_coding as E
from sparse_functional import taylor as T

seeds = st.integers(0, 2**32 - 1)
finite = st.floats(-1e3, 1e3, allow_nan=False)


@given(st.lists(finite, min_size=1, max_size=20), st.floats(0, 100))
def test_soft_threshold_shrinks(v, a):
    v = np.array(v)
    out = kernels.soft_threshold(v, a)
    assert np.all(np.abs(out) <= np.abs(v))
    assert np.all(out * v >= 0)
    assert np.allclose(np.abs(v) - np.abs(out), np.minimum(np.abs(v), a), atol=1e-9)


@given(st.floats(0, 0.49), st.integers(1, 5), st.floats(0.01, 10), st.floats(0, 1), st.integers(0, 40))
def test_schedule_matches_closed_form(mu, s, B, delta, J):
    sch = E.make_schedule(mu, s, B, delta, 1.0, J)
    rho = sch.rho
    closed = s * B * rho**J + 2 * s * delta * sum(rho**i for i in range(J))
    assert math.isclose(sch.B[J], closed, rel_tol=1e-9, abs_tol=1e-12)
    if sch.contractive:
        assert sch.B[J] <= E.encoder_error_bound(mu, s, B, delta, J) * (1 + 1e-12)
    assert np.all(sch.theta >= 0)
    assert np.allclose(sch.theta, mu * sch.B + delta)


@settings(max_examples=40, deadline=None)
@given(seeds, st.integers(0, 63), st.sampled_from([-1.0, 1.0]), st.floats(0.1, 10))
def test_encoder_keeps_support(seed, idx, sign, B):
    rng = np.random.default_rng(seed)
    design = F.random_normalized_design(rng, 32, 64)
    x = np.zeros(64)
    x[idx] = sign * B
    code = E.encode(design, design.normalized @ x, 1, B, 0.0, 30,
                    coeff_bound=B, trace=True)
    for k, xk in enumerate(code.iterates):
        assert set(np.flatnonzero(xk)) <= {idx}
        assert np.abs(xk - x).sum() <= code.schedule.B[k] * (1 + 1e-9) + 1e-12


@settings(max_examples=30, deadline=None)
@given(seeds, st.floats(0.1, 100))
def test_encoder_scale_equivariant(seed, scale):
    rng = np.random.default_rng(seed)
    design = F.random_normalized_design(rng, 24, 40)
    x = np.zeros(40)
    x[rng.integers(40)] = 1.0
    y = design.normalized @ x
    a = E.encode(design, y, 1, 1.0, 0.0, 20, coeff_bound=1.0).w
    b = E.encode(design, scale * y, 1, scale, 0.0, 20, coeff_bound=scale).w
    assert np.allclose(scale * a, b, rtol=1e-9, atol=1e-12)


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 3), st.integers(1, 12))
def test_partition_of_unity(d, n):
    assert T.partition_check(n, d, 97) <= 1e-12


@settings(max_examples=25, deadline=None)
@given(seeds, st.integers(1, 3))
def test_exhaustive_beats_greedy(seed, s):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((12, 9))
    y = rng.standard_normal(12)
    assert O.best_s_term_exhaustive(A, y, s).empirical_residual <= O.omp(A, y, s).empirical_residual + 1e-12


@settings(max_examples=25, deadline=None)
@given(seeds, st.integers(0, 20))
def test_tail_bound_dominates_l2(seed, s):
    dic = D.build_trig_dictionary(1, 10)
    c = np.random.default_rng(seed).standard_normal(dic.n)
    assert O.sigma_s_l2(c, s, dic.gamma) <= O.sigma_s_tail_bound(c, s) + 1e-12


@settings(max_examples=25, deadline=None)
@given(seeds)
def test_coherence_symmetric_and_bounded(seed):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((10, 6))
    mu = C.mutual_coherence(A)
    An = A / np.linalg.norm(A, axis=0)
    G = np.abs(An.T @ An)
    np.fill_diagonal(G, 0)
    assert 0 <= mu <= 1 + 1e-12
    assert math.isclose(mu, G.max(), rel_tol=1e-12)
    assert math.isclose(C.mutual_coherence(A[:, ::-1]), mu, rel_tol=1e-12)
