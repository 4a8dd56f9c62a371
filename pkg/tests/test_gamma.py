import math

import numpy as np
import pytest
from scipy.integrate import quad

from gapcount.floquet import band_structure, find_gaps, gap_edge
from gapcount.gamma import (
    GammaError,
    default_kappa,
    edge_integral,
    gamma_at_edge,
    gamma_coefficient,
    sphere_integral,
    weak_edge_membership,
)
from gapcount.periodic_graph import ThetaProfile, square_lattice, theta_const


def test_sphere_integral_constants():
    one = theta_const(1.0)
    assert sphere_integral(one, 1.0, 1) == pytest.approx(2.0)
    assert sphere_integral(one, 2.5, 2) == pytest.approx(2.0 * math.pi, rel=1e-10)
    assert sphere_integral(one, 1.0, 3) == pytest.approx(4.0 * math.pi, rel=1e-10)


def test_gamma_matches_scalar_quadrature_oracle():
    # independent oracle: int dk / (lam - (2 - 2 cos k))_- with lam = -1
    oracle, err = quad(lambda k: 1.0 / (3.0 - 2.0 * math.cos(k)), -math.pi, math.pi, epsabs=1e-12, epsrel=1e-12)
    assert err < 1e-9
    assert oracle == pytest.approx(2.0 * math.pi / math.sqrt(5.0), abs=1e-10)
    bands = band_structure(square_lattice(1), 64)
    res = gamma_coefficient(bands, -1.0, 1.0, "-", theta_const(1.0))
    expected = oracle * 2.0 / (2.0 * math.pi)
    assert res.value == pytest.approx(expected, abs=1e-10)


def test_gamma_plus_vanishes_below_spectrum():
    bands = band_structure(square_lattice(1), 32)
    res = gamma_coefficient(bands, -1.0, 1.0, "+", theta_const(1.0))
    assert res.value == 0.0


def test_gamma_zero_profile():
    bands = band_structure(square_lattice(1), 32)
    assert gamma_coefficient(bands, -1.0, 1.0, "-", theta_const(0.0)).value == 0.0


def test_gamma_rejects_lambda_inside_band():
    bands = band_structure(square_lattice(1), 32)
    with pytest.raises(GammaError):
        gamma_coefficient(bands, 2.0, 1.0, "-", theta_const(1.0))


def test_gamma_monotone_in_lambda_below_spectrum():
    bands = band_structure(square_lattice(1), 32)
    vals = [
        gamma_coefficient(bands, lam, 1.0, "-", theta_const(1.0)).value
        for lam in (-1.0, -2.0, -3.0)
    ]
    assert vals[0] > vals[1] > vals[2] > 0.0


def test_gamma_homogeneity_in_theta():
    bands = band_structure(square_lattice(2), 16)
    p = 1.5
    base = gamma_coefficient(bands, -1.0, p, "-", theta_const(1.0)).value
    scaled = gamma_coefficient(bands, -1.0, p, "-", theta_const(3.0)).value
    assert scaled == pytest.approx(3.0**p * base, rel=1e-12)


def test_edge_integral_kappa_zero_exact():
    bands = band_structure(square_lattice(2), 16)
    edge = gap_edge(find_gaps(bands)[0], "upper", 1)
    rep = edge_integral(bands, edge, 0.0)
    assert rep.verdict == "convergent"
    np.testing.assert_allclose(rep.estimates, (2.0 * math.pi) ** 2)


def test_chain_edge_divergent():
    bands = band_structure(square_lattice(1), 64)
    edge = gap_edge(find_gaps(bands)[0], "upper", 1)
    rep = edge_integral(bands, edge, 1.0)
    assert rep.verdict == "divergent"
    # growth proportional to grid size
    assert rep.estimates[-1] / rep.estimates[-2] == pytest.approx(2.0, rel=0.2)


def test_cubic_lattice_edge_convergent():
    bands = band_structure(square_lattice(3), 16)
    edge = gap_edge(find_gaps(bands)[0], "upper", 1)
    rep = edge_integral(bands, edge, 1.0)
    assert rep.verdict == "convergent"


def test_weak_membership_chain_small_p():
    bands = band_structure(square_lattice(1), 64)
    edge = gap_edge(find_gaps(bands)[0], "upper", 1)
    rep = weak_edge_membership(bands, edge, 0.5, grid=2048)
    assert rep.weak_member is True
    assert rep.weak_sup is not None and rep.weak_sup > 0.0


def test_weak_membership_cubic_large_p_fails():
    bands = band_structure(square_lattice(3), 16)
    edge = gap_edge(find_gaps(bands)[0], "upper", 1)
    rep = weak_edge_membership(bands, edge, 3.0, grid=64)
    assert rep.weak_member is False


def test_default_kappa():
    assert default_kappa(2.0) == 2.0
    assert default_kappa(0.5) == 1.0
    with pytest.raises(ValueError):
        default_kappa(1.0)


def test_gamma_at_edge_gated_on_divergence():
    bands = band_structure(square_lattice(1), 32)
    edge = gap_edge(find_gaps(bands)[0], "upper", 1)
    res = gamma_at_edge(bands, edge, 0.5, theta_const(1.0))
    assert res.report.verdict == "divergent"
    assert res.gamma is None
