"""Bell violations across space-time under a depolarizing AB memory.

The Bell measurement happens at Larry's t = 0.  The AB pair then
depolarizes until the first verification at ``t_M - |dt|/2``, is measured,
depolarizes for another ``|dt|`` and the second qubit is measured.  When
``dt < 0`` qubit B is measured first.  Times come from Rob's
``(t_M_prime, dt_prime)`` through ``relativity.map_times``.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import exp, sqrt
from typing import Sequence

import numpy as np

from . import quantum as q
from .chsh import cell_counts, chsh_from_branch_table, chsh_from_counts
from .errors import DomainError, UsageError
from .protocol import UNIFORMS_PER_SHOT, BranchTable, joint_from_tree, sample_joint, shot_stream
from .relativity import FrameParams, map_times

SCENARIO_TOL = 1e-12


@dataclass(frozen=True)
class DecoherenceScenario:
    params: FrameParams
    t_M_prime: float
    dt_prime: float

    def __post_init__(self):
        t_M, dt = self.larry_times
        if t_M - abs(dt) / 2 < -SCENARIO_TOL:
            raise DomainError(
                f"first verification at t = {t_M - abs(dt) / 2:.6g} precedes the Bell measurement "
                f"(t_M_prime={self.t_M_prime}, dt_prime={self.dt_prime})"
            )

    @property
    def larry_times(self) -> tuple[float, float]:
        return map_times(self.t_M_prime, self.dt_prime, self.params)

    @property
    def stages(self) -> tuple[str, str, str]:
        _, dt = self.larry_times
        return ("bell", "A", "B") if dt >= 0 else ("bell", "B", "A")


def chsh_closed_form(params: FrameParams, t_M_prime: float, dt_prime: float) -> float:
    rate = params.decay_scale
    return 2 * sqrt(2) * exp(-rate * t_M_prime) * exp(-rate * abs(dt_prime - params.tau_prime) / 2)


def decohered_joint(sc: DecoherenceScenario) -> np.ndarray:
    """Exact (n, m, i, j, l_A, l_B) probabilities from the density-matrix simulation."""
    t_M, dt = sc.larry_times
    first_wait = max(t_M - abs(dt) / 2, 0.0)
    waits = (first_wait, abs(dt))
    eta = sc.params.eta

    def between(k, state):
        if k < len(waits):
            return q.depolarize(state, eta, waits[k], ("A", "B"))
        return state

    return joint_from_tree(q.initial_state().density(), sc.stages, between)


def decohered_chsh_exact(sc: DecoherenceScenario) -> float:
    return chsh_from_branch_table(BranchTable(decohered_joint(sc))).s_average


@dataclass
class Curve:
    """Rows of (t_m_prime, dt_prime, s_exact[, s_mc, s_mc_stderr]) in t_m-major order."""

    t_m_prime: np.ndarray
    dt_prime: np.ndarray
    s_exact: np.ndarray
    s_mc: np.ndarray | None = None
    s_mc_stderr: np.ndarray | None = None

    def columns(self) -> dict[str, np.ndarray]:
        cols = {"t_m_prime": self.t_m_prime, "dt_prime": self.dt_prime, "s_exact": self.s_exact}
        if self.s_mc is not None:
            cols["s_mc"] = self.s_mc
            cols["s_mc_stderr"] = self.s_mc_stderr
        return cols

    def __len__(self) -> int:
        return len(self.t_m_prime)


def sample_scenario(sc: DecoherenceScenario, shots: int, seed: int, point: int = 0, joint=None):
    if joint is None:
        joint = decohered_joint(sc)
    u = shot_stream(seed, point).random((shots, UNIFORMS_PER_SHOT))
    return sample_joint(joint, sc.stages, u, None, "larry")


def sweep_decoherence(
    params: FrameParams,
    t_M_grid: Sequence[float],
    dt_grid: Sequence[float],
    shots: int = 0,
    seed: int = 0,
) -> Curve:
    """Exact CHSH value over the grid; with ``shots > 0`` also a sampled column.

    Grid point ``p`` (row index) samples from stream ``p`` of ``seed``.
    """
    t_M_grid = [float(t) for t in t_M_grid]
    dt_grid = [float(d) for d in dt_grid]
    if not t_M_grid or not dt_grid:
        raise UsageError("grids must be non-empty")
    if shots < 0:
        raise UsageError(f"shot count must be non-negative, got {shots}")
    rows, mc, mc_se = [], [], []
    for t_M in t_M_grid:
        for dt in dt_grid:
            sc = DecoherenceScenario(params, t_M, dt)
            joint = decohered_joint(sc)
            rows.append((t_M, dt, chsh_from_branch_table(BranchTable(joint)).s_average))
            if shots:
                batch = sample_scenario(sc, shots, seed, len(rows) - 1, joint)
                res = chsh_from_counts(cell_counts(batch))
                mc.append(res.s_average)
                mc_se.append(res.s_average_stderr)
    arr = np.array(rows, dtype=float)
    curve = Curve(arr[:, 0], arr[:, 1], arr[:, 2])
    if shots:
        curve.s_mc = np.array(mc, dtype=float)
        curve.s_mc_stderr = np.array(mc_se, dtype=float)
    return curve


def default_grids(params: FrameParams, tm_points=(0.5, 1.0, 1.5, 2.0, 2.5, 3.0), dt_points: int = 41):
    """Grids in units of 1/(eta*gamma), centred on dt_prime = tau_prime.

    ``dt_prime`` spans ``tau_prime +- 1/(eta*gamma)`` so every point keeps the
    first verification after the Bell measurement for ``t_M_prime >= 0.5``
    units.
    """
    scale = 1 / params.decay_scale if params.decay_scale > 0 else (abs(params.tau_prime) or 1.0)
    tm = [round(k * scale, 12) for k in tm_points]
    offsets = np.linspace(-1.0, 1.0, dt_points)
    # rounding keeps tau' - scale from printing as -1e-16
    dt = [round(params.tau_prime + o * scale, 12) for o in offsets]
    return tm, dt
