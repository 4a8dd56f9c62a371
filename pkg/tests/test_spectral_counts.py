import math

import numpy as np
import pytest
import scipy.sparse as sp

from gapcount.floquet import Gap, band_structure, find_gaps
from gapcount.periodic_graph import (
    FiniteHamiltonian,
    assemble_truncated,
    sample_potential,
    square_lattice,
    theta_const,
)
from gapcount.spectral_counts import (
    CountingError,
    asymptotic_table,
    bs_matrix,
    counting_bs,
    counting_direct,
    default_lambda_ladder,
    edge_counting,
    eigencount_below,
)


def wrap(A: np.ndarray) -> FiniteHamiltonian:
    n = A.shape[0]
    return FiniteHamiltonian(
        graph=None,
        L=0,
        matrix=sp.csr_matrix(A),
        cells=np.zeros((n, 1), dtype=int),
        vertex_ids=np.ones(n, dtype=int),
        positions=np.zeros((n, 1)),
    )


def svals_count(A: np.ndarray, s: float) -> int:
    return int(np.count_nonzero(np.linalg.svd(A, compute_uv=False) > s))


# ---------------------------------------------------------------------------
# scalar model H=[2], V=[1]


def test_scalar_bs_matrix():
    X = bs_matrix(wrap(np.array([[2.0]])), np.array([1.0]), -1.0)
    np.testing.assert_allclose(X.matrix, [[-1.0 / 3.0]])


def test_scalar_counting_both_routes():
    H = wrap(np.array([[2.0]]))
    v = np.array([1.0])
    X = bs_matrix(H, v, -1.0)
    for tau in (1.0, 2.9, 3.1, 10.0):
        expected = 1 if tau > 3.0 else 0
        assert counting_bs(X, tau, "-").value == expected
        assert counting_direct(H, v, -1.0, tau, "-").value == expected
        assert counting_bs(X, tau, "+").value == 0
        assert counting_direct(H, v, -1.0, tau, "+").value == 0


def test_empty_potential():
    H = wrap(np.diag([1.0, 3.0]))
    X = bs_matrix(H, np.zeros(2), 2.0)
    assert X.matrix.shape == (0, 0)
    assert counting_bs(X, 5.0, "-").value == 0
    assert counting_direct(H, np.zeros(2), 2.0, 5.0, "+").value == 0


def test_lambda_near_spectrum_rejected():
    H = wrap(np.diag([1.0, 3.0]))
    with pytest.raises(CountingError, match="eigenvalue"):
        bs_matrix(H, np.ones(2), 1.0 + 1e-12)


def test_eigencount_below_tridiagonal_matches_dense():
    rng = np.random.default_rng(0)
    for _ in range(20):
        n = int(rng.integers(2, 40))
        d = rng.standard_normal(n)
        e = rng.standard_normal(n - 1)
        A = sp.diags([e, d, e], [-1, 0, 1]).tocsr()
        x = float(rng.standard_normal())
        dense = int(np.count_nonzero(np.linalg.eigvalsh(A.toarray()) < x))
        assert eigencount_below(A, x) == dense


def test_bs_identity_random_models():
    rng = np.random.default_rng(42)
    for _ in range(20):
        n = int(rng.integers(4, 30))
        nlow = int(rng.integers(1, n))
        evs = np.concatenate([rng.uniform(0, 1, nlow), rng.uniform(2, 3, n - nlow)])
        Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
        A = Q @ np.diag(evs) @ Q.T
        A = 0.5 * (A + A.T)
        v = rng.uniform(0, 2, n)
        v[rng.random(n) < 0.3] = 0.0
        lam = float(rng.uniform(1.2, 1.8))
        H = wrap(A)
        X = bs_matrix(H, v, lam)
        for sign in ("+", "-"):
            tau = float(rng.uniform(0.5, 8.0))
            t = tau if sign == "+" else -tau
            if np.min(np.abs(np.linalg.eigvalsh(A + t * np.diag(v)) - lam)) < 1e-6:
                continue
            assert counting_bs(X, tau, sign).value == counting_direct(H, v, lam, tau, sign).value


def test_counts_monotone_in_tau_and_rank_bounded():
    rng = np.random.default_rng(5)
    A = np.diag(np.linspace(0.0, 1.0, 10))
    v = np.zeros(10)
    v[:4] = rng.uniform(0.5, 1.5, 4)
    H = wrap(A)
    X = bs_matrix(H, v, 2.0)
    last = 0
    for tau in (0.5, 1.0, 2.0, 5.0, 20.0):
        c = counting_bs(X, tau, "+").value
        assert c >= last
        assert c <= 4  # rank bound: support size
        last = c


def test_singular_value_square_identity():
    rng = np.random.default_rng(9)
    for _ in range(10):
        A = rng.standard_normal((int(rng.integers(2, 10)), int(rng.integers(2, 10))))
        s = float(rng.uniform(0.1, 3.0))
        n_sq = int(np.count_nonzero(np.linalg.eigvalsh(A.T @ A) > s))
        assert n_sq == svals_count(A, math.sqrt(s))


def test_fan_inequality():
    rng = np.random.default_rng(13)
    for _ in range(10):
        n = 8
        A = rng.standard_normal((n, n))
        B = rng.standard_normal((n, n))
        A, B = 0.5 * (A + A.T), 0.5 * (B + B.T)
        for s in (0.2, 0.7, 1.5):
            for t in (0.3, 1.0):
                assert svals_count(A + B, s + t) <= svals_count(A, s) + svals_count(B, t)


def test_default_lambda_ladder_monotone():
    gap = Gap(1.0, 2.0, "interior", 2, 0.1)
    up = default_lambda_ladder(gap, "+")
    down = default_lambda_ladder(gap, "-")
    assert np.all(np.diff(up) < 0) and up[0] < 2.0 and up[-1] > 1.0
    assert np.all(np.diff(down) > 0) and down[-1] < 2.0


def test_edge_counting_scalar_model():
    H = wrap(np.array([[2.0]]))
    v = np.array([1.0])
    gap = Gap(-math.inf, 2.0, "left-semi-infinite", None, 0.1)
    res = edge_counting(H, v, gap, tau=4.0, sign="-")
    assert res.estimate == 1
    assert res.stabilized
    assert np.all(np.diff(res.counts) >= 0)


def test_edge_counting_ladder_nondecreasing_chain():
    graph = square_lattice(1)
    H = assemble_truncated(graph, 200)
    V = sample_potential(graph, theta_const(1.0), 1.0, 200)
    gap = find_gaps(band_structure(graph, 32))[0]
    res = edge_counting(H, V, gap, tau=10.0, sign="-")
    assert np.all(np.diff(res.counts) >= 0)


def test_asymptotic_table_schema_and_identity():
    table = asymptotic_table(
        square_lattice(1),
        theta_const(1.0),
        p=1.0,
        lam=-1.0,
        sign="-",
        tau_list=(5.0, 10.0),
        L_list=(50, 100, 200),
        grid=32,
    )
    assert all(r.N_bs == r.N_direct for r in table.rows)
    assert all(r.ratio >= 0.0 for r in table.rows)
    csv = table.to_csv()
    lines = csv.strip().split("\n")
    assert lines[0] == "lambda,tau,L,N_bs,N_direct,gamma,ratio,flags"
    assert len(lines) == 3


def test_asymptotic_table_rejects_small_box():
    with pytest.raises(CountingError, match="support heuristic"):
        asymptotic_table(
            square_lattice(1),
            theta_const(1.0),
            p=1.0,
            lam=-1.0,
            sign="-",
            tau_list=(50.0,),
            L_list=(10, 20),
            grid=32,
        )


def test_asymptotic_table_rejects_lambda_in_band():
    with pytest.raises(CountingError, match="gap"):
        asymptotic_table(
            square_lattice(1),
            theta_const(1.0),
            p=1.0,
            lam=2.0,
            sign="-",
            tau_list=(1.0,),
            L_list=(10, 20),
            grid=32,
        )
