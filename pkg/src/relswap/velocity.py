"""Recover Rob's velocity from the position of the Bell-violation peak.

The peak of S over ``dt_prime`` sits at ``tau_prime = beta * L_prime``.
Near the peak ``log S`` is a symmetric tent (slopes +-eta*gamma/2), so the
curve is not differentiable there and every refinement works on function
values only.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import sqrt
from typing import Callable, Sequence

import numpy as np

from .chsh import chsh_from_counts, cell_counts
from .decoherence import Curve, DecoherenceScenario, decohered_joint, sample_scenario
from .errors import DomainError, NoBracketError, UnidentifiableError, UsageError
from .relativity import FrameParams

GOLDEN = (sqrt(5) - 1) / 2
PEAK_TOL = 1e-8
FLAT_TOL = 1e-12
BOOTSTRAP_KEY = (0xB007, 0)


def golden_section_max(f: Callable[[float], float], a: float, b: float, tol: float = PEAK_TOL) -> float:
    """Maximiser of a unimodal ``f`` on [a, b], to within ``tol``."""
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    return (a + b) / 2


def scan_peak(x: Sequence[float], y: Sequence[float]) -> int:
    """Index of the grid maximum; raises if the curve is flat or peaks on the boundary."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim != 1 or x.shape != y.shape or len(x) < 3:
        raise UsageError("peak search needs matching 1-d grids with at least 3 points")
    if np.any(np.diff(x) <= 0):
        raise UsageError("dt_prime grid must be strictly increasing")
    top = float(y.max())
    if top - float(y.min()) <= FLAT_TOL * max(1.0, abs(top)):
        raise UnidentifiableError("curve is flat in dt_prime; the peak (and velocity) is not identifiable")
    k = int(np.argmax(y))
    if k == 0 or k == len(y) - 1:
        raise NoBracketError(f"maximum at the grid boundary dt_prime = {x[k]:.6g}; widen the grid")
    return k


def tent_peak(x: Sequence[float], y: Sequence[float], k: int | None = None, weights=None) -> float:
    """Apex of a symmetric tent fitted to ``log y`` on both sides of grid point ``k``.

    Points left of ``k`` follow ``alpha + s*x`` and points right of it
    ``delta - s*x``; the apex is ``(delta - alpha) / (2 s)``.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if k is None:
        k = scan_peak(x, y)
    if np.any(y <= 0):
        raise DomainError("tent fit needs a positive curve")
    ly = np.log(y)
    left = np.arange(len(x)) < k
    right = np.arange(len(x)) > k
    design = np.column_stack([left.astype(float), right.astype(float), np.where(left, x, -x)])
    keep = left | right
    w = np.ones(len(x)) if weights is None else np.asarray(weights, dtype=float)
    sw = np.sqrt(w[keep])[:, None]
    coef, *_ = np.linalg.lstsq(design[keep] * sw, ly[keep] * sw[:, 0], rcond=None)
    alpha, delta, slope = coef
    if slope <= 0:
        raise UnidentifiableError("fitted flanks do not form a peak")
    return float((delta - alpha) / (2 * slope))


@dataclass
class VelocityEstimate:
    beta_hat: float
    peak_dt_prime: float
    peaks: dict = field(default_factory=dict)
    interval: tuple[float, float] | None = None
    bootstrap_failures: int = 0


def _check_length(L_prime: float) -> float:
    if not L_prime > 0:
        raise DomainError(f"L_prime must be positive, got {L_prime}")
    return float(L_prime)


def estimate_velocity(curve: Curve, L_prime: float, model: Callable[[float, float], float] | None = None) -> VelocityEstimate:
    """Velocity from an exact curve.

    Each ``t_m_prime`` row group is scanned for its maximum.  With ``model``
    (``S(t_m_prime, dt_prime)``) the bracket around it is refined by golden
    section; without it, from tabulated data, the tent apex is fitted.  The
    group peaks are averaged.
    """
    L_prime = _check_length(L_prime)
    tm = np.asarray(curve.t_m_prime, dtype=float)
    dt = np.asarray(curve.dt_prime, dtype=float)
    s = np.asarray(curve.s_exact, dtype=float)
    if len(tm) == 0:
        raise UsageError("empty curve")
    peaks = {}
    for t in dict.fromkeys(tm.tolist()):
        sel = tm == t
        order = np.argsort(dt[sel], kind="stable")
        x, y = dt[sel][order], s[sel][order]
        k = scan_peak(x, y)
        if model is not None:
            peaks[t] = golden_section_max(lambda d: model(t, d), x[k - 1], x[k + 1])
        else:
            peaks[t] = tent_peak(x, y, k)
    dt_star = float(np.mean(list(peaks.values())))
    return VelocityEstimate(dt_star / L_prime, dt_star, peaks)


@dataclass
class ShotCurve:
    """Per-grid-point cell counts (n, m, i, j, l_A, l_B) at a single ``t_m_prime``."""

    t_m_prime: float
    dt_prime: np.ndarray
    counts: np.ndarray  # shape (len(dt_prime), 2, 2, 2, 2, 2, 2)

    def chsh_values(self, counts=None) -> tuple[np.ndarray, np.ndarray]:
        counts = self.counts if counts is None else counts
        results = [chsh_from_counts(c) for c in counts]
        return np.array([r.s_average for r in results]), np.array([r.s_average_stderr for r in results])


def simulate_shot_curve(params: FrameParams, t_M_prime: float, dt_grid: Sequence[float], shots: int, seed: int) -> ShotCurve:
    if shots <= 0:
        raise UsageError("shot data needs a positive shot count")
    counts = []
    for p, dt in enumerate(dt_grid):
        sc = DecoherenceScenario(params, t_M_prime, float(dt))
        counts.append(cell_counts(sample_scenario(sc, shots, seed, p, decohered_joint(sc))))
    return ShotCurve(float(t_M_prime), np.asarray(dt_grid, dtype=float), np.array(counts))


def _shot_peak(dt: np.ndarray, s: np.ndarray, se: np.ndarray) -> float:
    k = scan_peak(dt, s)
    # delta method: var(log S) ~ (se / S)^2
    weights = (np.clip(s, 1e-300, None) / np.clip(se, 1e-300, None)) ** 2
    return tent_peak(dt, s, k, weights)


def estimate_velocity_from_shots(
    shot_curve: ShotCurve, L_prime: float, n_boot: int = 200, seed: int = 0, confidence: float = 0.95
) -> VelocityEstimate:
    """Velocity from sampled data with a percentile bootstrap interval.

    A bootstrap replicate redraws each grid point's shots with replacement,
    which for cell counts is a multinomial draw at the empirical frequencies.
    """
    L_prime = _check_length(L_prime)
    s, se = shot_curve.chsh_values()
    dt_star = _shot_peak(shot_curve.dt_prime, s, se)
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=BOOTSTRAP_KEY))
    flat = shot_curve.counts.reshape(len(shot_curve.dt_prime), -1)
    totals = flat.sum(axis=1)
    draws, failures = [], 0
    for _ in range(n_boot):
        resampled = np.array([rng.multinomial(n, row / n) for n, row in zip(totals, flat)])
        try:
            bs, bse = shot_curve.chsh_values(resampled.reshape(shot_curve.counts.shape))
            draws.append(_shot_peak(shot_curve.dt_prime, bs, bse))
        except (DomainError, UsageError):
            failures += 1
    interval = None
    if draws:
        alpha = (1 - confidence) / 2
        lo, hi = np.quantile(draws, [alpha, 1 - alpha])
        interval = (float(lo) / L_prime, float(hi) / L_prime)
    return VelocityEstimate(dt_star / L_prime, dt_star, {shot_curve.t_m_prime: dt_star}, interval, failures)
