"""CHSH observables, the outcome-conditioned CHSH functional and its estimators.

For a Bell outcome (i, j) reported by the swapping station, party B's
setting index is relabelled to ``(m + i + j) mod 2`` and the whole term
picks up the sign ``(-1)**j``.  All sign exponents are evaluated as
integers mod 2.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product
from math import sqrt
from typing import Mapping, NamedTuple

import numpy as np

from .errors import UsageError
from .quantum import BELL_INDICES, SIGMA_X, SIGMA_Z, BellIndex, Observable, check_bit

TSIRELSON = 2 * sqrt(2)
SETTINGS = tuple(product((0, 1), repeat=2))


class SettingPair(NamedTuple):
    n: int
    m: int


def _sign(exponent: int) -> int:
    return -1 if exponent % 2 else 1


@lru_cache(maxsize=None)
def verification_observable(party: str, setting: int) -> Observable:
    """A_n = cos(n pi/2) Z + sin(n pi/2) X;  B_m = (X + (-1)^m Z) / sqrt(2)."""
    setting = check_bit(setting, "setting")
    if party == "A":
        # exact values of cos/sin(n pi/2) for n in {0, 1}
        mat = (SIGMA_Z, SIGMA_X)[setting]
    elif party == "B":
        mat = (SIGMA_X + _sign(setting) * SIGMA_Z) / sqrt(2)
    else:
        raise UsageError(f"party must be 'A' or 'B', got {party!r}")
    return Observable.from_matrix(mat)


def u_ij_conjugation(idx, m: int) -> tuple[int, int]:
    """Return (sign, new_m) such that U^dag B_m U = sign * B_new_m for U = X^i Z^j."""
    i, j = check_bit(idx[0], "i"), check_bit(idx[1], "j")
    m = check_bit(m, "m")
    return _sign(j), (m + i + j) % 2


def u_ij(idx) -> np.ndarray:
    i, j = check_bit(idx[0], "i"), check_bit(idx[1], "j")
    return np.linalg.matrix_power(SIGMA_X, i) @ np.linalg.matrix_power(SIGMA_Z, j)


def chsh_operator(idx) -> np.ndarray:
    """The 4x4 operator on (A, B) whose expectation is S_ij for outcome ``idx``."""
    i, j = check_bit(idx[0], "i"), check_bit(idx[1], "j")
    op = np.zeros((4, 4), dtype=complex)
    for n, m in SETTINGS:
        a = verification_observable("A", n).matrix
        b = verification_observable("B", (m + i + j) % 2).matrix
        op += _sign((1 - n) * m + j) * np.kron(a, b)
    return op


@dataclass
class ChshResult:
    s_per_outcome: dict
    s_average: float | None
    stderr: dict | None = None
    counts: dict | None = None
    incomplete: tuple = field(default_factory=tuple)

    @property
    def s_average_stderr(self) -> float | None:
        if self.stderr is None or not self.stderr:
            return None
        return sqrt(sum(se**2 for se in self.stderr.values())) / len(self.stderr)


def _table_value(table, n: int, m: int) -> float:
    try:
        value = table[n][m] if not isinstance(table, Mapping) else table[(n, m)]
    except (KeyError, IndexError, TypeError):
        raise UsageError(f"correlation table has no entry for setting ({n}, {m})") from None
    value = float(value)
    if not np.isfinite(value):
        raise UsageError(f"correlation table entry ({n}, {m}) is missing")
    return value


def s_from_table(idx, table) -> float:
    """S_ij = sum_{n,m} (-1)^((1-n)m + j) E(n, (m+i+j) mod 2).

    ``table`` is indexed by the physical settings that were used, either as a
    2x2 array or as a mapping keyed by (n, m).
    """
    i, j = check_bit(idx[0], "i"), check_bit(idx[1], "j")
    total = 0.0
    for n, m in SETTINGS:
        total += _sign((1 - n) * m + j) * _table_value(table, n, (m + i + j) % 2)
    return total


def chsh_from_correlations(tables: Mapping) -> ChshResult:
    """Combine per-outcome correlation tables into S_ij and their equal-weight mean."""
    s = {}
    for idx, table in tables.items():
        idx = BellIndex(check_bit(idx[0], "i"), check_bit(idx[1], "j"))
        s[idx] = s_from_table(idx, table)
    if not s:
        raise UsageError("no correlation tables supplied")
    missing = tuple(idx for idx in BELL_INDICES if idx not in s)
    return ChshResult(s, float(np.mean(list(s.values()))), incomplete=missing)


def conditioned_correlation(branch_table, idx, setting) -> float:
    """E(n, m | i, j) from the exact joint probabilities of a ``BranchTable``."""
    i, j = check_bit(idx[0], "i"), check_bit(idx[1], "j")
    n, m = check_bit(setting[0], "n"), check_bit(setting[1], "m")
    cell = np.asarray(branch_table.probs)[n, m, i, j]  # indexed by (l_A, l_B)
    weight = float(cell.sum())
    if weight <= 0:
        raise UsageError(f"outcome {(i, j)} has zero probability at setting {(n, m)}")
    signs = np.array([[1, -1], [-1, 1]])
    return float((signs * cell).sum() / weight)


def correlation_tables(branch_table) -> dict:
    return {
        idx: np.array([[conditioned_correlation(branch_table, idx, (n, m)) for m in (0, 1)] for n in (0, 1)])
        for idx in BELL_INDICES
    }


def chsh_from_branch_table(branch_table) -> ChshResult:
    return chsh_from_correlations(correlation_tables(branch_table))


def cell_counts(shots) -> np.ndarray:
    """Counts indexed by (n, m, i, j, l_A, l_B) from a ``ShotBatch`` or a sequence of ``ShotRecord``."""
    if hasattr(shots, "columns"):
        cols = shots.columns()
    else:
        shots = list(shots)
        cols = np.array(
            [(s.setting[0], s.setting[1], s.bell[0], s.bell[1], s.l_A, s.l_B) for s in shots], dtype=np.int64
        ).reshape(-1, 6).T
    flat = np.ravel_multi_index(tuple(cols), (2,) * 6)
    return np.bincount(flat, minlength=64).reshape((2,) * 6)


def chsh_from_counts(counts: np.ndarray) -> ChshResult:
    """Empirical S_ij with binomial standard errors from a (2,)*6 count array."""
    counts = np.asarray(counts)
    if counts.shape != (2,) * 6:
        raise UsageError(f"count array must have shape (2,)*6, got {counts.shape}")
    signs = np.array([[1, -1], [-1, 1]])
    s, se, per_cell, incomplete = {}, {}, {}, []
    for idx in BELL_INDICES:
        i, j = idx
        table = np.full((2, 2), np.nan)
        var = np.zeros((2, 2))
        for n, m in SETTINGS:
            cell = counts[n, m, i, j]
            total = int(cell.sum())
            per_cell[(i, j, n, m)] = total
            if total:
                e = float((signs * cell).sum()) / total
                table[n, m] = e
                var[n, m] = (1 - e * e) / total
        if np.isnan(table).any():
            incomplete.append(idx)
            continue
        s[idx] = s_from_table(idx, table)
        se[idx] = sqrt(var.sum())
    if not s:
        raise UsageError("no Bell outcome has data in all four setting cells")
    return ChshResult(s, float(np.mean(list(s.values()))), se, per_cell, tuple(incomplete))


def chsh_from_shots(shots) -> ChshResult:
    counts = cell_counts(shots)
    if counts.sum() == 0:
        raise UsageError("no shots supplied")
    return chsh_from_counts(counts)
