from itertools import product
from math import exp

import numpy as np
import pytest

from relswap import quantum as q
from relswap.chsh import TSIRELSON, verification_observable
from relswap.decoherence import (
    DecoherenceScenario,
    chsh_closed_form,
    decohered_chsh_exact,
    decohered_joint,
    default_grids,
    sweep_decoherence,
)
from relswap.errors import DomainError, UsageError
from relswap.relativity import FrameParams


def regime(beta, L=1.0):
    """eta chosen so that eta * gamma * tau' = 1 (eta = 1 when beta = 0)."""
    probe = FrameParams(beta, L)
    return FrameParams(beta, L, 1 / (probe.gamma * probe.tau_prime) if beta else 1.0)


def depolarize_ab(sigma, eta, t):
    s = sigma.reshape(4, 4, 4, 4)
    rest = np.einsum("aiaj->ij", s)
    return exp(-eta * t) * sigma + (1 - exp(-eta * t)) * np.kron(np.eye(4) / 4, rest)


def oracle_joint(sc):
    """Plain 16x16 bookkeeping: Bell on CD, wait, first qubit, wait, second qubit."""
    t_M, dt = sc.larry_times
    eta = sc.params.eta
    psi = q.initial_state().amplitudes
    rho0 = np.outer(psi, psi.conj())
    i2 = np.eye(2)
    out = np.zeros((2,) * 6)
    for n, m, i, j, la, lb in product((0, 1), repeat=6):
        bell = q.bell_state((i, j)).amplitudes
        p_bell = np.kron(np.eye(4), np.outer(bell, bell.conj()))
        a = verification_observable("A", n).eigenvectors[:, la]
        b = verification_observable("B", m).eigenvectors[:, lb]
        p_a = np.kron(np.kron(np.outer(a, a.conj()), i2), np.eye(4))
        p_b = np.kron(np.kron(i2, np.outer(b, b.conj())), np.eye(4))
        first, second = (p_a, p_b) if dt >= 0 else (p_b, p_a)
        sigma = depolarize_ab(p_bell @ rho0 @ p_bell, eta, t_M - abs(dt) / 2)
        sigma = depolarize_ab(first @ sigma @ first, eta, abs(dt))
        out[n, m, i, j, la, lb] = np.trace(second @ sigma @ second).real
    return out


@pytest.mark.parametrize("dt_prime", [0.2, 0.6, 1.4, -0.5])
def test_joint_matches_sequential_oracle(dt_prime):
    sc = DecoherenceScenario(FrameParams(0.6, 1.0, 0.7), 2.0, dt_prime)
    assert (sc.larry_times[1] < 0) == (dt_prime < 0.6)
    np.testing.assert_allclose(decohered_joint(sc), oracle_joint(sc), atol=1e-13)


def test_no_noise_gives_tsirelson():
    p = FrameParams(0.6, 1.0, 0.0)
    for tm, dt in [(1.0, 0.0), (3.0, 2.0), (5.0, -1.0)]:
        assert decohered_chsh_exact(DecoherenceScenario(p, tm, dt)) == pytest.approx(TSIRELSON, abs=1e-12)


def test_simultaneous_in_lab_frame():
    p = regime(0.6)
    for tm in (0.5, 1.0, 2.0):
        s = decohered_chsh_exact(DecoherenceScenario(p, tm, p.tau_prime))
        assert s == pytest.approx(TSIRELSON * exp(-p.decay_scale * tm), abs=1e-12)


def test_one_decay_time_value():
    p = regime(0.6)
    s = decohered_chsh_exact(DecoherenceScenario(p, 1 / p.decay_scale, p.tau_prime))
    assert s == pytest.approx(TSIRELSON / np.e, abs=1e-12)
    assert s == pytest.approx(1.04052019, abs=1e-8)


def test_verification_before_bell_rejected():
    p = regime(0.6)
    with pytest.raises(DomainError):
        DecoherenceScenario(p, 0.1, p.tau_prime + 5.0)
    # boundary: first verification coincides with the Bell measurement
    t_M = 0.5
    sc = DecoherenceScenario(FrameParams(0.0, 1.0, 1.0), t_M, 2 * t_M)
    assert sc.larry_times[0] - abs(sc.larry_times[1]) / 2 == pytest.approx(0, abs=1e-15)


@pytest.mark.parametrize("beta", [0.0, 0.3, 0.6, 0.9])
def test_closed_form_on_grid(beta):
    p = regime(beta)
    scale = 1 / p.decay_scale
    for tm in np.linspace(0.5, 3, 6) * scale:
        for dt in p.tau_prime + np.linspace(-1, 1, 7) * scale:
            exact = decohered_chsh_exact(DecoherenceScenario(p, tm, dt))
            assert exact == pytest.approx(chsh_closed_form(p, tm, dt), abs=1e-10)


def test_log_slopes():
    p = regime(0.6)
    h = 1e-4
    log_s = lambda tm, dt: np.log(decohered_chsh_exact(DecoherenceScenario(p, tm, dt)))
    tm, off = 2.0, 0.3
    assert (log_s(tm + h, p.tau_prime) - log_s(tm - h, p.tau_prime)) / (2 * h) == pytest.approx(-p.decay_scale, abs=1e-8)
    right = (log_s(tm, p.tau_prime + off + h) - log_s(tm, p.tau_prime + off - h)) / (2 * h)
    left = (log_s(tm, p.tau_prime - off + h) - log_s(tm, p.tau_prime - off - h)) / (2 * h)
    assert right == pytest.approx(-p.decay_scale / 2, abs=1e-8)
    assert left == pytest.approx(p.decay_scale / 2, abs=1e-8)


def test_sweep_peaks_at_tau_prime():
    p = regime(0.6)
    tm, dt = default_grids(p, tm_points=(0.5, 1.0, 2.0), dt_points=21)
    assert p.tau_prime in dt
    curve = sweep_decoherence(p, tm, dt)
    assert len(curve) == len(tm) * len(dt)
    s = curve.s_exact.reshape(len(tm), len(dt))
    for row in s:
        assert dt[int(np.argmax(row))] == pytest.approx(p.tau_prime, abs=1e-12)
    # longer memory time means lower S
    assert np.all(np.diff(s, axis=0) < 0)


def test_sweep_monte_carlo_column():
    p = regime(0.6)
    curve = sweep_decoherence(p, [1.0], [0.4, 0.6, 0.8], shots=100_000, seed=3)
    assert set(curve.columns()) == {"t_m_prime", "dt_prime", "s_exact", "s_mc", "s_mc_stderr"}
    assert np.all(np.abs(curve.s_mc - curve.s_exact) <= 5 * curve.s_mc_stderr)
    again = sweep_decoherence(p, [1.0], [0.4, 0.6, 0.8], shots=100_000, seed=3)
    np.testing.assert_array_equal(curve.s_mc, again.s_mc)


def test_sweep_validation():
    with pytest.raises(UsageError):
        sweep_decoherence(regime(0.6), [], [0.0])
    with pytest.raises(UsageError):
        sweep_decoherence(regime(0.6), [1.0], [0.6], shots=-1)


def test_default_grids_without_noise():
    tm, dt = default_grids(FrameParams(0.6, 1.0, 0.0), dt_points=3)
    assert dt == [0.0, 0.6, 1.2]
    assert tm[0] == pytest.approx(0.3)
