"""Counting functions N_{+/-}(lambda, tau) on truncated lattices.

Two independent routes:

* Birman-Schwinger: eigenvalue counting for the fixed compact matrix
  X(lambda) = V^{1/2} (lambda I - H_L)^{-1} V^{1/2}, so that
  N_+ = #{eig X > 1/tau} and N_- = #{eig X < -1/tau}.
* Direct spectral inertia: difference of eigenvalue counts below lambda
  between H_L and H_L +/- tau V (Sturm counting for tridiagonal
  matrices, dense eigensolve otherwise).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .floquet import BandStructure, Gap, band_structure, find_gaps, format_real
from .gamma import GammaResult, gamma_coefficient
from .periodic_graph import (
    DecayingPotential,
    FiniteHamiltonian,
    PeriodicGraph,
    ThetaProfile,
    assemble_truncated,
    sample_potential,
)

_BOUNDARY_TOL = 1e-10
_RESOLVENT_TOL = 1e-8


class CountingError(ValueError):
    """Precondition violation in a counting operation."""


class Count(NamedTuple):
    value: int
    boundary: bool  # threshold within 1e-10 of an eigenvalue


@dataclass
class BSMatrix:
    """V^{1/2} (lambda I - H_L)^{-1} V^{1/2} restricted to the V-support."""

    lam: float
    matrix: np.ndarray
    support: np.ndarray  # site indices with V > 0
    _eigenvalues: np.ndarray | None = field(default=None, repr=False)

    @property
    def eigenvalues(self) -> np.ndarray:
        if self._eigenvalues is None:
            if self.matrix.size:
                self._eigenvalues = np.linalg.eigvalsh(self.matrix)
            else:
                self._eigenvalues = np.zeros(0)
        return self._eigenvalues


@dataclass(frozen=True)
class CountRow:
    lam: float
    tau: float
    L: int
    N_bs: int
    N_direct: int
    gamma: float
    ratio: float
    flags: tuple[str, ...] = ()


@dataclass(frozen=True)
class CountingTable:
    rows: tuple[CountRow, ...]
    graph: PeriodicGraph
    p: float
    theta_name: str
    sign: str
    gamma: GammaResult

    def to_csv(self) -> str:
        lines = ["lambda,tau,L,N_bs,N_direct,gamma,ratio,flags"]
        for r in self.rows:
            lines.append(
                ",".join(
                    [
                        format_real(r.lam),
                        format_real(r.tau),
                        str(r.L),
                        str(r.N_bs),
                        str(r.N_direct),
                        format_real(r.gamma),
                        format_real(r.ratio),
                        ";".join(r.flags),
                    ]
                )
            )
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class EdgeCountResult:
    estimate: int
    lambdas: np.ndarray
    counts: np.ndarray
    stabilized: bool


# ---------------------------------------------------------------------------
# eigenvalue counting below a shift


def _tridiagonal_bands(A: sp.spmatrix) -> tuple[np.ndarray, np.ndarray] | None:
    """Return (diag, offdiag) if A is symmetric tridiagonal, else None."""
    coo = A.tocoo()
    if np.any(np.abs(coo.row - coo.col) > 1):
        return None
    n = A.shape[0]
    diag = np.zeros(n)
    off = np.zeros(n - 1)
    for r, c, v in zip(coo.row, coo.col, coo.data):
        if r == c:
            diag[r] += v
        elif c == r + 1:
            off[r] += v
    return diag, off


def _sturm_count(diag: np.ndarray, off: np.ndarray, x: float) -> int:
    """#eigenvalues < x of a symmetric tridiagonal matrix (LDL^T signature)."""
    count = 0
    d = diag[0] - x
    if d < 0.0:
        count += 1
    tiny = np.finfo(float).tiny
    for i in range(1, diag.size):
        denom = d if d != 0.0 else -tiny
        d = diag[i] - x - off[i - 1] ** 2 / denom
        if d < 0.0:
            count += 1
    return count


def eigencount_below(A: sp.spmatrix | np.ndarray, x: float) -> int:
    """#eigenvalues of the symmetric matrix A strictly below x."""
    if sp.issparse(A):
        bands = _tridiagonal_bands(A)
        if bands is not None:
            return _sturm_count(bands[0], bands[1], x)
        A = A.toarray()
    w = np.linalg.eigvalsh(np.asarray(A))
    return int(np.count_nonzero(w < x))


def _check_resolvent_point(H: FiniteHamiltonian, lam: float) -> None:
    """Reject lambda within 1e-8 of the spectrum of H_L."""
    A = H.matrix
    bands = _tridiagonal_bands(A)
    if bands is not None:
        lo = _sturm_count(bands[0], bands[1], lam - _RESOLVENT_TOL)
        hi = _sturm_count(bands[0], bands[1], lam + _RESOLVENT_TOL)
        if hi > lo:
            raise CountingError(
                f"lambda={lam} is within {_RESOLVENT_TOL} of an eigenvalue of H_L"
            )
        return
    w = np.linalg.eigvalsh(A.toarray())
    gapd = float(np.min(np.abs(w - lam)))
    if gapd <= _RESOLVENT_TOL:
        nearest = float(w[np.argmin(np.abs(w - lam))])
        raise CountingError(
            f"lambda={lam} too close to sigma(H_L): nearest eigenvalue {nearest}"
        )


# ---------------------------------------------------------------------------
# Birman-Schwinger route


def bs_matrix(H: FiniteHamiltonian, V: DecayingPotential | np.ndarray, lam: float) -> BSMatrix:
    """X = V^{1/2} (lambda I - H_L)^{-1} V^{1/2} on the support of V."""
    v = V.values if isinstance(V, DecayingPotential) else np.asarray(V, dtype=float)
    if v.shape != (H.nsites,):
        raise CountingError("potential not sampled on the same box as H_L")
    if v.min() < 0.0:
        raise CountingError("potential must be nonnegative")
    _check_resolvent_point(H, lam)
    support = np.flatnonzero(v > 0.0)
    if support.size == 0:
        return BSMatrix(lam, np.zeros((0, 0)), support)
    sqrtv = np.sqrt(v[support])
    rhs = np.zeros((H.nsites, support.size))
    rhs[support, np.arange(support.size)] = sqrtv
    A = sp.identity(H.nsites, format="csr") * lam - H.matrix
    bands = _tridiagonal_bands(A)
    if bands is not None:
        ab = np.zeros((3, H.nsites))
        ab[0, 1:] = bands[1]
        ab[1] = bands[0]
        ab[2, :-1] = bands[1]
        Y = sla.solve_banded((1, 1), ab, rhs)
    else:
        Y = sla.solve(A.toarray(), rhs, assume_a="sym")
    X = sqrtv[:, None] * Y[support]
    X = 0.5 * (X + X.T)
    return BSMatrix(lam, X, support)


def counting_bs(X: BSMatrix, tau: float, sign: str) -> Count:
    """n_{+/-}(1/tau, X): eigenvalues of X beyond the threshold 1/tau."""
    if tau <= 0:
        raise CountingError("tau must be positive")
    w = X.eigenvalues
    thr = 1.0 / tau
    if sign == "+":
        value = int(np.count_nonzero(w > thr))
        boundary = bool(w.size and np.min(np.abs(w - thr)) <= _BOUNDARY_TOL)
    elif sign == "-":
        value = int(np.count_nonzero(w < -thr))
        boundary = bool(w.size and np.min(np.abs(w + thr)) <= _BOUNDARY_TOL)
    else:
        raise CountingError("sign must be '+' or '-'")
    return Count(value, boundary)


# ---------------------------------------------------------------------------
# direct inertia route


def _shifted(H: FiniteHamiltonian, v: np.ndarray, t: float) -> sp.csr_matrix:
    return (H.matrix + sp.diags(t * v)).tocsr()


def counting_direct(
    H: FiniteHamiltonian,
    V: DecayingPotential | np.ndarray,
    lam: float,
    tau: float,
    sign: str,
) -> Count:
    """Inertia difference between H_L and H_L +/- tau V below lambda."""
    if tau <= 0:
        raise CountingError("tau must be positive")
    v = V.values if isinstance(V, DecayingPotential) else np.asarray(V, dtype=float)
    if v.shape != (H.nsites,):
        raise CountingError("potential not sampled on the same box as H_L")
    _check_resolvent_point(H, lam)
    base = eigencount_below(H.matrix, lam)
    if sign == "+":
        shifted = _shifted(H, v, tau)
        value = base - eigencount_below(shifted, lam)
    elif sign == "-":
        shifted = _shifted(H, v, -tau)
        value = eigencount_below(shifted, lam) - base
    else:
        raise CountingError("sign must be '+' or '-'")
    return Count(max(value, 0), False)


# ---------------------------------------------------------------------------
# edge limits and the asymptotic table


def default_lambda_ladder(gap: Gap, sign: str, depth: int = 12) -> np.ndarray:
    """Geometric approach lambda_k = Lambda -/+ width 2^{-k} toward the edge.

    sign '+' approaches the lower edge Lambda_+ from above; sign '-'
    approaches the upper edge Lambda_- from below.  Semi-infinite gaps
    use a unit width scale.
    """
    width = gap.width if math.isfinite(gap.width) else 1.0
    ks = np.arange(1, depth + 1)
    if sign == "+":
        if not math.isfinite(gap.lower):
            raise CountingError("gap has no finite lower edge")
        return gap.lower + width * 2.0 ** (-ks)
    if sign == "-":
        if not math.isfinite(gap.upper):
            raise CountingError("gap has no finite upper edge")
        return gap.upper - width * 2.0 ** (-ks)
    raise CountingError("sign must be '+' or '-'")


def edge_counting(
    H: FiniteHamiltonian,
    V: DecayingPotential | np.ndarray,
    gap: Gap,
    tau: float,
    sign: str,
    lambda_ladder: Sequence[float] | None = None,
) -> EdgeCountResult:
    """Monotone lambda-limit of the counting function at a gap edge."""
    lams = (
        np.asarray(lambda_ladder, dtype=float)
        if lambda_ladder is not None
        else default_lambda_ladder(gap, sign)
    )
    counts = np.array([counting_direct(H, V, lam, tau, sign).value for lam in lams])
    stabilized = counts.size >= 2 and counts[-1] == counts[-2]
    return EdgeCountResult(int(counts[-1]), lams, counts, bool(stabilized))


def asymptotic_table(
    graph: PeriodicGraph,
    theta: ThetaProfile,
    p: float,
    lam: float,
    sign: str,
    tau_list: Sequence[float],
    L_list: Sequence[int],
    *,
    grid: int = 64,
    support_c: float = 10.0,
) -> CountingTable:
    """Stabilization-in-L counting table compared against tau^p Gamma."""
    tau_list = list(tau_list)
    L_list = sorted(L_list)
    if not L_list or any(b <= a for a, b in zip(L_list, L_list[1:])):
        raise CountingError("L_list must be strictly increasing")
    Lmax = L_list[-1]
    for tau in tau_list:
        need = support_c * tau ** (p / graph.dim)
        if Lmax < need:
            raise CountingError(
                f"largest L={Lmax} below the support heuristic {need:.1f} for tau={tau}"
            )
    bands = band_structure(graph, grid)
    gaps = find_gaps(bands)
    if not any(g.lower - 1e-12 <= lam <= g.upper + 1e-12 for g in gaps):
        raise CountingError(f"lambda={lam} is not inside a detected gap")
    gamma = gamma_coefficient(bands, lam, p, sign, theta)

    per_L: dict[int, tuple[list[int], list[int], list[bool]]] = {}
    for L in L_list:
        H = assemble_truncated(graph, L)
        V = sample_potential(graph, theta, p, L)
        X = bs_matrix(H, V, lam)
        nbs, ndir, bnd = [], [], []
        for tau in tau_list:
            cb = counting_bs(X, tau, sign)
            cd = counting_direct(H, V, lam, tau, sign)
            nbs.append(cb.value)
            ndir.append(cd.value)
            bnd.append(cb.boundary)
        per_L[L] = (nbs, ndir, bnd)

    rows = []
    for it, tau in enumerate(tau_list):
        chosen_L = L_list[-1]
        stabilized = False
        for a, b in zip(L_list, L_list[1:]):
            if per_L[a][0][it] == per_L[b][0][it]:
                chosen_L = b
                stabilized = True
        nbs, ndir, bnd = (per_L[chosen_L][i][it] for i in range(3))
        flags = []
        if not stabilized:
            flags.append("unstabilized")
        if bnd:
            flags.append("boundary")
        denom = tau**p * gamma.value
        ratio = nbs / denom if denom > 0 else math.inf
        rows.append(CountRow(lam, tau, chosen_L, nbs, ndir, gamma.value, ratio, tuple(flags)))
    return CountingTable(tuple(rows), graph, p, getattr(theta, "name", "theta"), sign, gamma)
