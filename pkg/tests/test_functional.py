import math

import mpmath
import numpy as np
import pytest

from sparse_functional import coherence as C
from sparse_functional import dictionary as D
from sparse_functional import functional as F
from sparse_functional import oracle as O
from sparse_functional import sampling as S
from sparse_functional import taylor as T
from sparse_functional.errors import AdmissibilityError, ConfigError, ContractError


@pytest.fixture(scope="module")
def dic():
    return D.build_trig_dictionary(1, 16)


def jittered_samples(m, seed):
    rng = np.random.default_rng(seed)
    return S.SampleSet(((np.arange(m) + 0.3 * rng.uniform(size=m)) / m)[:, None], seed)


def unit_g(dic, rng):
    g = rng.standard_normal(dic.n)
    return g / (math.sqrt(dic.gamma) * np.linalg.norm(g)) * rng.uniform(0.2, 1.0)


def shipped_functionals(dic, rng):
    h = F.HolderMap(lambda t: math.sqrt(abs(t)), 0.5)
    return [
        F.make_functional(F.L2_NORM, dic),
        F.make_functional(F.INNER_PRODUCT, dic, g=unit_g(dic, rng)),
        F.make_functional(F.SCALAR_COMPOSE, dic, g=unit_g(dic, rng), h=h),
    ]


def test_l2norm_on_single_element(dic):
    P = F.make_functional(F.L2_NORM, dic)
    e = np.zeros(dic.n)
    e[1] = 1.0
    assert P.coefficient_evaluator(e) == pytest.approx(1 / math.sqrt(2), abs=1e-12)
    assert P.evaluator(lambda x: dic.evaluate(x) @ e) == pytest.approx(1 / math.sqrt(2), abs=1e-12)
    assert P.at_zero() == 0.0


def test_inner_product_linear(dic, rng):
    P = F.make_functional(F.INNER_PRODUCT, dic, g=unit_g(dic, rng))
    u, v = rng.standard_normal((2, dic.n))
    a, b = 0.7, -1.3
    lhs = P.coefficient_evaluator(a * u + b * v)
    assert lhs == pytest.approx(a * P.coefficient_evaluator(u) + b * P.coefficient_evaluator(v), abs=1e-12)


def test_make_functional_contracts(dic):
    big = np.ones(dic.n)
    with pytest.raises(ContractError):
        F.make_functional(F.INNER_PRODUCT, dic, g=big)
    with pytest.raises(ContractError):
        F.make_functional(F.INNER_PRODUCT, dic)
    with pytest.raises(ContractError):
        F.make_functional(F.SCALAR_COMPOSE, dic, g=np.zeros(dic.n), h=math.sqrt)
    with pytest.raises(ContractError):
        F.make_functional(F.SCALAR_COMPOSE, dic, g=np.zeros(dic.n), h=F.HolderMap(abs, 1.0, 2.0))
    with pytest.raises(ConfigError):
        F.make_functional("Max", dic)


def test_function_space_matches_coefficient_space(dic, rng):
    for P in shipped_functionals(dic, rng):
        for _ in range(20):
            c = rng.standard_normal(dic.n)
            fs = P.evaluator(lambda x: dic.evaluate(x) @ c)
            assert fs == pytest.approx(P.coefficient_evaluator(c), abs=1e-10)


def test_holder_certificate(dic, rng):
    for P in shipped_functionals(dic, rng):
        for _ in range(200):
            f, g = rng.standard_normal((2, dic.n)) * rng.uniform(0.01, 2.0)
            dist = math.sqrt(dic.gamma) * np.linalg.norm(f - g)
            gap = abs(P.coefficient_evaluator(f) - P.coefficient_evaluator(g))
            assert gap <= dist**P.beta + 1e-10


def test_modulus_constants_identity():
    design = C.design_from_matrix(np.eye(3))
    c1, c2 = F.modulus_constants(design, 1, 2, C1=1.0, C2=1.0)
    assert c1 == pytest.approx(1 / math.sqrt(3), abs=1e-12)
    assert c2 == pytest.approx(1 / math.sqrt(3), abs=1e-12)


def test_modulus_constants_single_sample():
    design = C.design_from_matrix(np.array([[2.0]]))
    c1, c2 = F.modulus_constants(design, 1, 2, C1=1.0, C2=1.0)
    assert c1 == pytest.approx(2.0)
    assert c2 == pytest.approx(2.0)


def test_modulus_constants_vanish_at_edge():
    s = 2
    vals = [F.modulus_constants_raw(10, mu, s, 2, 0.25, 2.25, 1.0, 1.0)[1] for mu in (0.3, 0.33, 0.3333333)]
    assert vals[0] > vals[1] > vals[2] > 0
    assert vals[2] < 1e-3
    with pytest.raises(AdmissibilityError):
        F.modulus_constants_raw(10, 1 / 3, s, 2, 0.25, 2.25, 1.0, 1.0)


def test_modulus_transfer(dic, rng):
    design = C.build_design_matrix(dic, jittered_samples(64, 3))
    s = 2
    c1, _ = F.modulus_constants(design, s, 2)
    for P in shipped_functionals(dic, rng):
        for _ in range(100):
            w1, w2 = np.zeros((2, dic.n))
            w1[rng.choice(dic.n, s, replace=False)] = rng.standard_normal(s)
            w2[rng.choice(dic.n, s, replace=False)] = rng.standard_normal(s)
            gap = abs(P.coefficient_evaluator(w1) - P.coefficient_evaluator(w2))
            assert gap <= c1**P.beta * np.linalg.norm(w1 - w2) ** P.beta + 1e-9


def _independent_constants(p, m, B, s, N, design, J, C1, C2):
    """Direct substitution at 50 digits, sharing nothing with the library."""
    mpmath.mp.dps = 50
    p, m, B, s, N, J = mpmath.mpf(p), mpmath.mpf(m), mpmath.mpf(B), mpmath.mpf(s), mpmath.mpf(N), int(J)
    C1, C2 = mpmath.mpf(C1), mpmath.mpf(C2)
    E = design.entries
    energies = [mpmath.fsum(mpmath.mpf(float(v)) ** 2 for v in E[:, i]) for i in range(E.shape[1])]
    L = [1 / mpmath.sqrt(e) for e in energies]
    mu = mpmath.mpf(design.mu)
    rho = 2 * mu * s - mu
    c0 = max(L)
    Csum = 2 * s * mpmath.fsum(rho**i for i in range(J + 1))
    Cmp = max(mpmath.mpf(1), m ** (1 / p - mpmath.mpf(1) / 2))
    root = (1 + 1 / C1) ** (1 / p)
    C3 = 2 ** (1 / p) * (1 + 2 * root) + 2 ** (1 / p) * C1 ** (-1 / p) * (2 + 2 * root)
    out = {
        "c0": c0,
        "C": Csum,
        "C_mp": Cmp,
        "C3": C3,
        "C4": 6 * c0 * B * m * s * N ** (1 - 1 / p),
        "C5": -mpmath.log(rho),
        "C6": c0 * Csum * 2 ** (1 / p) * m * N ** (1 - 1 / p),
        "C7": 12 * C1 ** (-1 / p) * Cmp * m ** (1 - 1 / p) * B * s,
        "C8": 2 ** (1 + 1 / p) * Csum * C1 ** (-1 / p) * Cmp * m ** (1 - 1 / p) + C3,
    }
    out["B_bar"] = out["C4"] + out["C6"] * B + 6 * B * m * max(L)
    Linv = max(1 / v for v in L)
    spread = (2 * s - 1) * mu
    out["c1_tilde"] = C1 ** (-1 / p) * m ** (-1 / p) * Linv * max(1, m ** (1 / p - mpmath.mpf(1) / 2)) * mpmath.sqrt(1 + spread)
    out["c2_tilde"] = mpmath.sqrt(1 - spread) / (m ** (1 / p) * C2 ** (1 / p) * max(L) * max(1, m ** (mpmath.mpf(1) / 2 - 1 / p)))
    return out


def test_theoretical_constants_cross_check():
    dic = D.build_trig_dictionary(1, 16)
    design = C.build_design_matrix(dic, jittered_samples(64, 3))
    assert 3 * design.mu < 1
    got = F.theoretical_constants(2, 64, 1.0, 2, 33, design, 20).as_dict()
    ref = _independent_constants(2, 64, 1.0, 2, 33, design, 20, 0.25, 2.25)
    for key, value in ref.items():
        assert got[key] == pytest.approx(float(value), rel=1e-12), key
    assert got["C_mp"] == 1.0


def test_theoretical_constants_c9(dic):
    design = C.build_design_matrix(dic, jittered_samples(64, 3))
    P = F.make_functional(F.L2_NORM, dic)
    k = F.theoretical_constants(2, 64, 1.0, 2, 33, design, 20, functional=P)
    assert k.C_P == pytest.approx(33 * k.B_bar)
    assert k.C9 == pytest.approx((k.c1_tilde + k.C_P) * (1 + 2 * k.B_bar))


def test_theoretical_constants_geometric_limit():
    design = C.design_from_matrix(np.eye(4))
    k = F.theoretical_constants(2, 4, 1.0, 1, 4, design, 500)
    assert k.C == pytest.approx(2.0)
    assert k.decay(0) == 1.0 and k.decay(3) == 0.0


def test_theoretical_constants_inadmissible(dic):
    design = C.build_design_matrix(dic, S.draw_samples(dic.domain, 20, 1))
    s = math.ceil(design.sbar) + 1
    with pytest.raises(AdmissibilityError):
        F.theoretical_constants(2, 20, 1.0, s, dic.n, design, 5)


def test_pipeline_zero_function(dic):
    P = F.make_functional(F.L2_NORM, dic)
    f = D.SyntheticFunction(np.zeros(dic.n))
    rep = F.evaluate_pipeline(P, f, dic, jittered_samples(64, 3), 2, 10)
    assert rep.support == [] and rep.P_hat == 0.0 and rep.abs_error == 0.0 and rep.l2_error == 0.0


def test_pipeline_exact_composition(dic):
    P = F.make_functional(F.L2_NORM, dic)
    for seed in range(10):
        f = D.sample_a1_alpha(dic, 2.0, seed)
        rep = F.evaluate_pipeline(P, f, dic, jittered_samples(64, 3), 2, 20, seed=seed)
        assert rep.abs_error <= rep.holder_bound + 1e-10
        assert rep.P_f == pytest.approx(rep.P_f_function_space, abs=1e-10)
        if rep.valid:
            assert rep.abs_error <= rep.composite_bound
            assert rep.abs_error <= rep.functional_bound


def test_pipeline_orthonormal_one_step():
    dic = D.build_trig_dictionary(1, 4)
    samples = S.grid_samples(dic.domain, dic.n)
    P = F.make_functional(F.L2_NORM, dic)
    c = np.zeros(dic.n)
    c[[1, 4]] = [0.8, -0.5]
    rep = F.evaluate_pipeline(P, D.SyntheticFunction(c), dic, samples, 2, 1, coeff_bound=1.3)
    assert rep.support == [1, 4]
    assert rep.abs_error < 1e-12
    c[6] = 1e-3
    rep = F.evaluate_pipeline(P, D.SyntheticFunction(c), dic, samples, 2, 1, coeff_bound=1.3)
    assert rep.abs_error <= 10 * rep.sigma_tail


def test_pipeline_taylor_decoder(dic):
    P = F.make_functional(F.L2_NORM, dic)
    f = D.sample_a1_alpha(dic, 2.0, 4)
    rep = F.evaluate_pipeline(P, f, dic, jittered_samples(64, 3), 2, 20, decoder=F.TAYLOR, n_cells=64, box=2.0)
    assert rep.decoder == F.TAYLOR and rep.box == 2.0
    assert rep.rescale_factor == pytest.approx(5.0)
    assert rep.abs_error < 0.2
    assert rep.taylor_bound > 0
    with pytest.raises(ConfigError):
        F.evaluate_pipeline(P, f, dic, jittered_samples(64, 3), 2, 20, decoder=F.TAYLOR)


def test_lazy_taylor_matches_table():
    g = T.random_lipschitz_function(2, 5)
    approx = T.localized_taylor(g, 0, 1.0, 8, 2, 2)
    rng = np.random.default_rng(0)
    for z in rng.uniform(-0.5, 0.5, size=(30, 2)):
        assert F.lazy_taylor_point(lambda c: float(g(c)[0]), z, 8) == pytest.approx(float(approx(z)[0]), abs=1e-12)


def test_rate_experiment_single_trial():
    out = F.rate_experiment({"kind": "A1Alpha", "alpha": 2.0, "max_freq": 32}, {"s": [1, 2, 4], "J": 5}, 1, 0)
    assert len(out["s"]["rows"]) == 3
    assert len(out["J"]["rows"]) == 6
    assert set(out["s"]["rows"][0]) >= {"param", "mean_error", "std_error", "bound", "slope_window"}


def test_encoder_sweep_slope_matches_log_rho():
    rows, log_rho = F.encoder_sweep(32, 64, 30, 20, 1)
    slope, _ = F.pre_plateau_slope([r["geo_error"] for r in rows])
    assert slope == pytest.approx(log_rho, rel=0.05)


def test_unknown_class():
    with pytest.raises(ConfigError):
        F.sigma_sweep({"kind": "Sobolev"}, [1], 1, 0)


def test_oracle_tail_helpers_consistent(dic):
    f = D.sample_a1_alpha(dic, 2.0, 0)
    assert O.sigma_s_l2(f.coeffs, 3, dic.gamma) <= O.sigma_s_tail_bound(f, 3)
