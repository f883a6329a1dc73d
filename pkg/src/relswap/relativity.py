"""Special-relativistic kinematics in natural units (c = 1).

``boost_event(e, beta, axis)`` returns the coordinates of ``e`` in a frame
moving with velocity ``beta`` along ``+axis``: ``t' = gamma (t - beta x)``.
Rob's coordinates map back to Larry's with the same formula and Rob's
velocity relative to Larry.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import isfinite, sqrt
from typing import NamedTuple

from .errors import DomainError, UsageError

SIMULTANEITY_TOL = 1e-12
LIGHTLIKE_TOL = 1e-12
AXES = ("x", "y", "z")


class SpacetimeEvent(NamedTuple):
    t: float
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0


def _check_beta(beta: float) -> float:
    beta = float(beta)
    if not isfinite(beta) or abs(beta) >= 1:
        raise DomainError(f"|beta| must be < 1, got {beta}")
    return beta


def gamma(beta: float) -> float:
    beta = _check_beta(beta)
    return 1 / sqrt(1 - beta * beta)


@dataclass(frozen=True)
class FrameParams:
    """Rob's velocity ``beta``, the A-B separation ``L_prime`` in his frame, and the rate ``eta``."""

    beta: float
    L_prime: float = 1.0
    eta: float = 0.0

    def __post_init__(self):
        _check_beta(self.beta)
        if not isfinite(self.L_prime):
            raise DomainError(f"L_prime must be finite, got {self.L_prime}")
        if not isfinite(self.eta) or self.eta < 0:
            raise DomainError(f"eta must be a finite non-negative rate, got {self.eta}")

    @property
    def gamma(self) -> float:
        return gamma(self.beta)

    @property
    def tau_prime(self) -> float:
        """Offset in Rob's frame that makes the two verifications simultaneous for Larry."""
        return self.beta * self.L_prime

    @property
    def decay_scale(self) -> float:
        """eta * gamma, the decay rate of the CHSH value in Rob's time."""
        return self.eta * self.gamma


def boost_event(e: SpacetimeEvent, beta: float, axis: str = "x") -> SpacetimeEvent:
    if axis not in AXES:
        raise UsageError(f"axis must be one of {AXES}, got {axis!r}")
    g = gamma(beta)
    coords = dict(zip(AXES, e[1:]))
    s = coords[axis]
    t = g * (e.t - beta * s)
    coords[axis] = g * (s - beta * e.t)
    return SpacetimeEvent(t, coords["x"], coords["y"], coords["z"])


def interval(e1: SpacetimeEvent, e2: SpacetimeEvent) -> float:
    """(dt)^2 - |dx|^2; positive for timelike separation."""
    dt, dx, dy, dz = (b - a for a, b in zip(e1, e2))
    return dt * dt - dx * dx - dy * dy - dz * dz


def interval_classify(e1: SpacetimeEvent, e2: SpacetimeEvent) -> str:
    s2 = interval(e1, e2)
    if abs(s2) <= LIGHTLIKE_TOL:
        return "lightlike"
    return "timelike" if s2 > 0 else "spacelike"


def order_in_frame(e1: SpacetimeEvent, e2: SpacetimeEvent, beta: float, axis: str = "x") -> str:
    """Which event happens first for an observer moving with ``beta`` along ``axis``."""
    t1 = boost_event(e1, beta, axis).t
    t2 = boost_event(e2, beta, axis).t
    if abs(t1 - t2) <= SIMULTANEITY_TOL:
        return "simultaneous"
    return "e1_first" if t1 < t2 else "e2_first"


def map_times(t_M_prime: float, dt_prime: float, params: FrameParams) -> tuple[float, float]:
    """Rob's (mid-time, A-to-B offset) -> Larry's (t_M, dt)."""
    g = params.gamma
    return g * t_M_prime, g * (dt_prime - params.tau_prime)


def rob_mid_time(t_A_prime: float, t_B_prime: float, x_A_prime: float, params: FrameParams) -> float:
    """Rob-frame mid-time whose dilation gives Larry's mean measurement time.

    B sits at ``x_A_prime + L_prime`` along the boost axis.
    """
    return (t_A_prime + t_B_prime) / 2 - params.beta * (2 * x_A_prime + params.L_prime) / 2
