import numpy as np
import pytest

from gapcount.floquet import torus_grid
from gapcount.pdo_lab import (
    PdoError,
    SymbolTriple,
    commutator_decay,
    cwikel_ratio,
    dp_vs_formula,
    fourier_modsq_coeffs,
    homogeneous_symbol,
    pdo_singular_values,
    tabulated_symbol,
    torus_exp,
    torus_half_indicator,
    torus_one,
    torus_trig,
)


def direct_section_svalues(f, g, W, M):
    K = torus_grid(W.dim, M)
    P = np.exp(1j * (K @ W.points.T)) / M ** (W.dim / 2.0)
    T = (np.asarray(f(K))[:, None] * P * W.values[None, :]) @ (
        P.conj().T * np.asarray(g(K))[None, :]
    )
    return np.sort(np.linalg.svd(T, compute_uv=False))[::-1]


def test_modsq_coeffs_constant():
    c = fourier_modsq_coeffs(torus_one(), 32, 4)
    np.testing.assert_allclose(c[4], 1.0, atol=1e-12)
    mask = np.ones(9, dtype=bool)
    mask[4] = False
    np.testing.assert_allclose(c[mask], 0.0, atol=1e-12)


def test_modsq_coeffs_unimodular_phase():
    c = fourier_modsq_coeffs(torus_exp(1), 32, 4)
    np.testing.assert_allclose(c[4], 1.0, atol=1e-12)


def test_modsq_coeffs_two_term():
    c = fourier_modsq_coeffs(torus_trig({0: 1.0, 1: 1.0}), 64, 4)
    np.testing.assert_allclose(c[4], 2.0, atol=1e-12)
    np.testing.assert_allclose(c[5], 1.0, atol=1e-12)
    np.testing.assert_allclose(c[3], 1.0, atol=1e-12)
    np.testing.assert_allclose(c[6], 0.0, atol=1e-12)


def test_modsq_aliasing_guard():
    with pytest.raises(PdoError):
        fourier_modsq_coeffs(torus_one(), 16, 8)


def test_multiplication_identity():
    W = homogeneous_symbol(1.0, 1.0, 1, 16)
    rep = pdo_singular_values(SymbolTriple(torus_one(), torus_one(), W, 1.0, 256))
    expect = np.sort(np.abs(W.values))[::-1]
    np.testing.assert_allclose(rep.svalues.values, expect, atol=1e-10)


def test_single_point_symbol_rank_one():
    W = tabulated_symbol(np.array([[3]]), np.array([2.0 - 1.0j]), 8)
    f = torus_trig({0: 1.0, 1: 0.5})
    g = torus_trig({0: 2.0})
    rep = pdo_singular_values(SymbolTriple(f, g, W, 1.0, 128))
    cf0 = fourier_modsq_coeffs(f, 128, 0)[0].real
    cg0 = fourier_modsq_coeffs(g, 128, 0)[0].real
    assert len(rep.svalues) == 1
    assert rep.svalues.values[0] == pytest.approx(abs(2.0 - 1.0j) * np.sqrt(cf0 * cg0), rel=1e-10)


def test_adjoint_symmetry():
    rng = np.random.default_rng(1)
    pts = np.array([[-2], [0], [3]])
    vals = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    W = tabulated_symbol(pts, vals, 4)
    Wadj = tabulated_symbol(pts, np.conj(vals), 4)
    f = torus_trig({1: 1.0, -1: 0.3j})
    g = torus_trig({0: 1.0, 2: 0.5})
    a = pdo_singular_values(SymbolTriple(f, g, W, 1.0, 64)).svalues.values
    b = pdo_singular_values(SymbolTriple(g, f, Wadj, 1.0, 64)).svalues.values
    np.testing.assert_allclose(a, b, atol=1e-10)


def test_gram_matches_direct_construction():
    rng = np.random.default_rng(2)
    for _ in range(10):
        L, M = 8, 64
        npts = int(rng.integers(1, 8))
        pts = rng.choice(np.arange(-L, L + 1), size=npts, replace=False)[:, None]
        vals = rng.standard_normal(npts) + 1j * rng.standard_normal(npts)
        W = tabulated_symbol(pts, vals, L)
        f = torus_trig({-1: rng.standard_normal(), 0: rng.standard_normal()})
        g = torus_trig({0: rng.standard_normal(), 2: rng.standard_normal()})
        gram = pdo_singular_values(SymbolTriple(f, g, W, 1.0, M)).svalues.values
        direct = direct_section_svalues(f, g, W, M)[: gram.size]
        np.testing.assert_allclose(gram, direct, atol=1e-8 * max(1.0, direct.max()))


def test_cwikel_regime_validation():
    W = homogeneous_symbol(1.0, 1.0, 1, 16)
    with pytest.raises(PdoError):
        cwikel_ratio(torus_one(), W, 1.0, 3.0, 16, 128)
    with pytest.raises(PdoError):
        cwikel_ratio(torus_one(), W, 3.0, 2.0, 16, 128)


def test_cwikel_scale_invariance():
    L, M = 32, 256
    W = homogeneous_symbol(1.0, 1.0, 1, L)
    W5 = homogeneous_symbol(5.0, 1.0, 1, L)
    r1 = cwikel_ratio(torus_one(), W, 1.0, 2.0, L, M)
    r5 = cwikel_ratio(torus_one(), W5, 1.0, 2.0, L, M)
    assert r5 == pytest.approx(r1, rel=1e-9)


def test_cwikel_finite_support_finite():
    W = tabulated_symbol(np.array([[1], [2]]), np.array([1.0, 0.5]), 8)
    r = cwikel_ratio(torus_one(), W, 1.0, 2.0, 8, 64)
    assert np.isfinite(r) and r > 0.0


def test_dp_formula_multiplication_case():
    est, formula = dp_vs_formula(torus_one(), 1.0, torus_one(), 1.0, 64, 512)
    assert formula == pytest.approx(2.0, abs=1e-10)
    assert 1.8 <= est.inf_est <= est.sup_est <= 2.2


def test_dp_formula_zero_profile():
    est, formula = dp_vs_formula(torus_one(), 0.0, torus_one(), 1.0, 16, 128)
    assert formula == 0.0
    assert est.sup_est == 0.0


def test_dp_formula_half_torus():
    _, formula = dp_vs_formula(torus_half_indicator(), 1.0, torus_one(), 1.0, 32, 256)
    assert formula == pytest.approx(1.0, rel=1e-2)


def test_commutator_constant_symbol_is_zero():
    W = homogeneous_symbol(1.0, 1.0, 1, 32)
    rep = commutator_decay({0: 2.0}, W, 1.0, 32)
    assert len(rep.svalues) == 0


def test_commutator_finite_support_finite_rank():
    W = tabulated_symbol(np.array([[0], [1]]), np.array([1.0, 2.0]), 16)
    rep = commutator_decay({1: 1.0}, W, 1.0, 16)
    assert 0 < len(rep.svalues) <= 4


def test_commutator_decay_trend():
    L = 128
    W = homogeneous_symbol(1.0, 1.0, 1, L)
    rep = commutator_decay({1: 1.0}, W, 1.0, L)
    prods = rep.products
    assert prods.size >= 60
    assert prods[9] > 2.0 * prods[49]


def test_homogeneous_symbol_values():
    W = homogeneous_symbol(1.0, 2.0, 1, 4)
    idx = {int(n): v for n, v in zip(W.points[:, 0], W.values)}
    assert 0 not in idx
    assert idx[2] == pytest.approx(2.0 ** (-0.5))
    assert idx[-3] == pytest.approx(3.0 ** (-0.5))
