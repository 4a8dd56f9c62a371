"""Weak-lp functionals on finite nonnegative sequences.

Distribution functions, the weak quasinorm sup_s s * mu(s)^(1/p), and
empirical window estimates of the small-s coefficient s^p * n(s).  The
counting convention is strict: mu(s) = #{values > s}.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class WeightedSequence:
    """A finite list of nonnegative magnitudes, sorted descending."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1:
            raise ValueError("expected a one-dimensional sequence")
        if v.size and v.min() < 0.0:
            raise ValueError("sequence values must be nonnegative")
        object.__setattr__(self, "values", np.sort(v)[::-1].copy())

    def __len__(self) -> int:
        return int(self.values.size)

    def scaled(self, c: float) -> "WeightedSequence":
        if c < 0:
            raise ValueError("scale factor must be nonnegative")
        return WeightedSequence(self.values * c)


@dataclass(frozen=True)
class DpWindowEstimate:
    p: float
    window: tuple[float, float]
    sup_est: float
    inf_est: float
    sample_count: int

    @property
    def zero_samples(self) -> bool:
        return self.sample_count == 0


@dataclass(frozen=True)
class MembershipVerdict:
    weak: bool
    small_o: bool
    checkpoints: np.ndarray = field(repr=False)
    products: np.ndarray = field(repr=False)


def distribution(seq: WeightedSequence, s: float) -> int:
    """#{values > s} (strict inequality)."""
    if s <= 0:
        raise ValueError("s must be positive")
    # values sorted descending: count of entries strictly above s
    return int(np.searchsorted(-seq.values, -s, side="left"))


def weak_quasinorm(seq: WeightedSequence, p: float) -> float:
    """sup_{s>0} s * mu(s)^{1/p}; exact for finite sequences.

    Equals max_m a_(m) * m^{1/p} over the descending rearrangement.
    """
    if p <= 0:
        raise ValueError("p must be positive")
    n = len(seq)
    if n == 0:
        return 0.0
    m = np.arange(1, n + 1, dtype=float)
    return float(np.max(seq.values * m ** (1.0 / p)))


def dp_window(seq: WeightedSequence, p: float, window: tuple[float, float]) -> DpWindowEstimate:
    """Empirical sup/inf of s^p n(s) over a window of s values.

    Samples at the jump points of the distribution function inside the
    open window, evaluating the left limit s^p n(s-0) where the
    supremum over each constancy interval is attained.
    """
    if p <= 0:
        raise ValueError("p must be positive")
    s_lo, s_hi = window
    if not (0.0 < s_lo < s_hi):
        raise ValueError("window must satisfy 0 < s_lo < s_hi")
    vals = seq.values
    distinct = np.unique(vals[vals > 0.0])
    inside = distinct[(distinct > s_lo) & (distinct < s_hi)]
    if inside.size == 0:
        return DpWindowEstimate(p, window, 0.0, 0.0, 0)
    # left limit of the count at a jump: #{values >= a}
    counts = np.array([np.count_nonzero(vals >= a) for a in inside], dtype=float)
    samples = inside**p * counts
    return DpWindowEstimate(p, window, float(samples.max()), float(samples.min()), int(inside.size))


def membership_verdicts(seq: WeightedSequence, p: float, *, min_tail: int = 8) -> MembershipVerdict:
    """Heuristic weak-lp / small-o verdicts from the product profile.

    weak: the running profile a_(m) * m^{1/p} does not trend upward
    across geometric checkpoints.  small_o: the tail profile decays
    toward zero.
    """
    if p <= 0:
        raise ValueError("p must be positive")
    n = len(seq)
    if n < 2 * min_tail:
        raise ValueError("sequence too short for a trend verdict")
    m = np.arange(1, n + 1, dtype=float)
    products = seq.values * m ** (1.0 / p)
    # geometric checkpoints over [min_tail, n]
    ks = np.unique(np.geomspace(min_tail, n, num=24).astype(int)) - 1
    cp = products[ks]
    weak = bool(cp[-1] <= 1.5 * cp[0] + 1e-300)
    tail = cp[len(cp) // 2 :]
    decreasing = bool(np.all(np.diff(tail) <= 1e-12 * (1.0 + tail[:-1])))
    small = bool(decreasing and tail[-1] <= 0.75 * cp.max())
    return MembershipVerdict(weak=weak, small_o=weak and small, checkpoints=ks + 1, products=cp)
