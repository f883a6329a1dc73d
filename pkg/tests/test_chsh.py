from itertools import product
from math import sqrt

import numpy as np
import pytest

from conftest import random_density
from relswap import chsh, quantum as q
from relswap.chsh import TSIRELSON
from relswap.errors import UsageError
from relswap.protocol import ShotBatch, ShotRecord, exact_joint_distribution, run_shots
from relswap.quantum import BELL_INDICES, BellIndex

X = np.array([[0, 1], [1, 0]])
Z = np.array([[1, 0], [0, -1]])


def test_verification_observables():
    np.testing.assert_allclose(chsh.verification_observable("A", 0).matrix, Z)
    np.testing.assert_allclose(chsh.verification_observable("A", 1).matrix, X)
    np.testing.assert_allclose(chsh.verification_observable("B", 0).matrix, (X + Z) / sqrt(2))
    for m in (0, 1):
        b = chsh.verification_observable("B", m).matrix
        np.testing.assert_allclose(b @ b, np.eye(2), atol=1e-15)
    with pytest.raises(UsageError):
        chsh.verification_observable("C", 0)


def conjugation_oracle(i, j, m):
    """Find (sign, k) with U^dag B_m U = sign * B_k by explicit 2x2 products."""
    u = np.linalg.matrix_power(X, i) @ np.linalg.matrix_power(Z, j)
    b = lambda k: (X + (-1) ** k * Z) / sqrt(2)
    lhs = u.conj().T @ b(m) @ u
    for sign, k in product((1, -1), (0, 1)):
        if np.allclose(lhs, sign * b(k), atol=1e-12):
            return sign, k
    raise AssertionError("no match")


@pytest.mark.parametrize("i, j, m", list(product((0, 1), repeat=3)))
def test_u_ij_conjugation_identity(i, j, m):
    sign, new_m = chsh.u_ij_conjugation((i, j), m)
    assert (sign, new_m) == conjugation_oracle(i, j, m)
    u = chsh.u_ij((i, j))
    lhs = u.conj().T @ chsh.verification_observable("B", m).matrix @ u
    np.testing.assert_allclose(lhs, sign * chsh.verification_observable("B", new_m).matrix, atol=1e-12)


@pytest.mark.parametrize("idx, expected", [((0, 0), (1, 0)), ((0, 0), (1, 0)), ((1, 1), (-1, 0)), ((0, 1), (-1, 1))])
def test_u_ij_conjugation_examples(idx, expected):
    assert chsh.u_ij_conjugation(idx, 0) == expected


def test_u00_is_identity():
    for m in (0, 1):
        assert chsh.u_ij_conjugation((0, 0), m) == (1, m)


def exact_tables(idx):
    state = q.bell_state(idx)
    return np.array(
        [
            [
                q.expectation(state, {"A": chsh.verification_observable("A", n), "B": chsh.verification_observable("B", m)})
                for m in (0, 1)
            ]
            for n in (0, 1)
        ]
    )


def test_bell_states_give_tsirelson_value():
    res = chsh.chsh_from_correlations({idx: exact_tables(idx) for idx in BELL_INDICES})
    for idx in BELL_INDICES:
        assert res.s_per_outcome[idx] == pytest.approx(TSIRELSON, abs=1e-12)
    assert res.s_average == pytest.approx(TSIRELSON, abs=1e-12)
    assert res.incomplete == ()


def test_product_state_gives_zero():
    zero = np.zeros((2, 2))
    res = chsh.chsh_from_correlations({idx: zero for idx in BELL_INDICES})
    assert res.s_average == 0


def test_relabeling_matches_operator_form():
    for idx in BELL_INDICES:
        direct = q.expectation(q.bell_state(idx), chsh.chsh_operator(idx))
        assert chsh.s_from_table(idx, exact_tables(idx)) == pytest.approx(direct, abs=1e-12)


def test_local_deterministic_strategies_bounded():
    best = 0
    for a0, a1, b0, b1 in product((1, -1), repeat=4):
        table = np.array([[a0 * b0, a0 * b1], [a1 * b0, a1 * b1]])
        for idx in BELL_INDICES:
            s = chsh.s_from_table(idx, table)
            assert abs(s) <= 2
            best = max(best, abs(s))
    assert best == 2


def test_tsirelson_bound_random_states(rng):
    ops = {idx: chsh.chsh_operator(idx) for idx in BELL_INDICES}
    for _ in range(200):
        rho = random_density(rng, rank=int(rng.integers(1, 5)))
        for idx, op in ops.items():
            assert abs(q.expectation(rho, op)) <= TSIRELSON + 1e-9


def test_missing_table_entry():
    with pytest.raises(UsageError):
        chsh.chsh_from_correlations({(0, 0): {(0, 0): 1.0, (0, 1): 1.0, (1, 0): 1.0}})
    with pytest.raises(UsageError):
        chsh.chsh_from_correlations({(0, 0): np.array([[1.0, np.nan], [1.0, 1.0]])})


def test_conditioned_correlation_closed_form():
    table = exact_joint_distribution("rob")
    for i, j, n, m in product((0, 1), repeat=4):
        expected = (-1) ** ((1 - n) * m) * (-1) ** (i * (1 - n) + n * j) / sqrt(2)
        assert chsh.conditioned_correlation(table, (i, j), (n, m)) == pytest.approx(expected, abs=1e-12)
        assert table.probs[n, m, i, j].sum() == pytest.approx(0.25, abs=1e-14)


@pytest.mark.parametrize("idx, setting, expected", [((0, 0), (0, 0), 1 / sqrt(2)), ((1, 0), (0, 0), -1 / sqrt(2))])
def test_conditioned_correlation_examples(idx, setting, expected):
    assert chsh.conditioned_correlation(exact_joint_distribution("rob"), idx, setting) == pytest.approx(expected, abs=1e-12)


def test_relabelled_conditioned_correlation():
    table = exact_joint_distribution("rob")
    for i, j, n, m in product((0, 1), repeat=4):
        value = chsh.conditioned_correlation(table, (i, j), (n, (m + i + j) % 2))
        assert value == pytest.approx((-1) ** ((1 - n) * m + j) / sqrt(2), abs=1e-12)


def test_uniform_shots_give_no_violation():
    rng = np.random.default_rng(11)
    cols = rng.integers(0, 2, size=(6, 200_000))
    res = chsh.chsh_from_shots(ShotBatch(*cols, order="rob"))
    for idx in BELL_INDICES:
        assert abs(res.s_per_outcome[idx]) <= 5 * res.stderr[idx]


def test_single_shot_per_cell():
    shots = [
        ShotRecord(chsh.SettingPair(n, m), BellIndex(i, j), (n + i) % 2, (m * j) % 2, "rob")
        for i, j, n, m in product((0, 1), repeat=4)
    ]
    res = chsh.chsh_from_shots(shots)
    assert set(res.s_per_outcome) == set(BELL_INDICES)
    for idx in BELL_INDICES:
        assert res.stderr[idx] == 0
        assert abs(res.s_per_outcome[idx]) in (0, 2, 4)
    assert all(v == 1 for v in res.counts.values())


def test_incomplete_cells_are_flagged():
    shots = [
        ShotRecord(chsh.SettingPair(n, m), BellIndex(0, 0), 0, 0, "rob") for n, m in product((0, 1), repeat=2)
    ]
    shots.append(ShotRecord(chsh.SettingPair(0, 0), BellIndex(1, 1), 0, 0, "rob"))
    res = chsh.chsh_from_shots(shots)
    assert list(res.s_per_outcome) == [(0, 0)]
    assert BellIndex(1, 1) in res.incomplete
    with pytest.raises(UsageError):
        chsh.chsh_from_shots([])


def test_standard_error_scales_with_shots():
    small = chsh.chsh_from_shots(run_shots("rob", 10_000, seed=5))
    large = chsh.chsh_from_shots(run_shots("rob", 1_000_000, seed=5))
    for idx in BELL_INDICES:
        ratio = small.stderr[idx] / large.stderr[idx]
        assert 8 < ratio < 12
