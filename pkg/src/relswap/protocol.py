"""The swapping experiment in both measurement orders.

``larry`` order performs the Bell measurement on (C, D) first and the
verification measurements on A and B afterwards; ``rob`` order reverses
this.  Exact tables come from enumerating every branch with the
``quantum`` engine.  Sampling walks the same branch tree one stage at a
time.

Random streams: sweep point ``p`` owns the stream
``SeedSequence(seed, spawn_key=(p,))`` and every shot consumes exactly
``UNIFORMS_PER_SHOT`` doubles from it, so shot ``k`` always sees the same
numbers however many shots are drawn.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, NamedTuple, Sequence

import numpy as np

from . import quantum as q
from .chsh import SETTINGS, SettingPair, verification_observable
from .errors import UsageError
from .quantum import BellIndex, PureState, check_bit
from .relativity import SpacetimeEvent, boost_event

ORDERS = ("larry", "rob")
STAGES = {"larry": ("bell", "A", "B"), "rob": ("A", "B", "bell")}
BELL_PAIR = ("C", "D")
UNIFORMS_PER_SHOT = 5
NEGATIVE_TOL = 1e-14


def _check_order(order: str) -> str:
    if order not in ORDERS:
        raise UsageError(f"order must be one of {ORDERS}, got {order!r}")
    return order


class ShotRecord(NamedTuple):
    setting: SettingPair
    bell: BellIndex
    l_A: int
    l_B: int
    order: str
    t_events: dict | None = None
    intermediate: PureState | None = None


@dataclass(frozen=True)
class BranchTable:
    """Exact probabilities indexed by (n, m, i, j, l_A, l_B); each (n, m) slice sums to 1."""

    probs: np.ndarray
    order: str | None = None

    def __post_init__(self):
        probs = np.array(self.probs, dtype=float)
        if probs.shape != (2,) * 6:
            raise UsageError(f"branch table must have shape (2,)*6, got {probs.shape}")
        if probs.min() < -NEGATIVE_TOL:
            raise UsageError("branch table has negative entries")
        sums = probs.sum(axis=(2, 3, 4, 5))
        if np.max(np.abs(sums - 1)) > 1e-12:
            raise UsageError(f"branch table slices do not sum to 1: {sums.tolist()}")
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)

    def prob(self, n, m, i, j, l_A, l_B) -> float:
        return float(self.probs[n, m, i, j, l_A, l_B])

    def total_variation(self, other: BranchTable) -> np.ndarray:
        """Total-variation distance for each setting pair, shape (2, 2)."""
        return 0.5 * np.abs(self.probs - other.probs).sum(axis=(2, 3, 4, 5))

    def rows(self) -> Iterator[tuple]:
        for idx in np.ndindex(*self.probs.shape):
            yield idx + (float(self.probs[idx]),)


def _stage_branches(state, stage: str, setting) -> list[q.Branch]:
    if stage == "bell":
        return q.bell_branches(state, BELL_PAIR)
    party_setting = setting[0] if stage == "A" else setting[1]
    return q.observable_branches(state, stage, verification_observable(stage, party_setting))


def _outcome_key(outcomes: dict) -> tuple[int, int, int, int]:
    i, j = outcomes["bell"]
    return i, j, outcomes["A"], outcomes["B"]


def enumerate_branches(state, stages: Sequence[str], setting, between=None):
    """Yield (outcomes, probability, final_state) for every leaf of the measurement tree.

    ``between(k, state)`` may transform the state after stage ``k`` (noise).
    """

    def walk(state, k, outcomes, prob):
        if k == len(stages):
            yield dict(outcomes), prob, state
            return
        for branch in _stage_branches(state, stages[k], setting):
            if branch.state is None:
                continue
            nxt = branch.state if between is None else between(k, branch.state)
            outcomes[stages[k]] = branch.outcome
            yield from walk(nxt, k + 1, outcomes, prob * branch.probability)
            del outcomes[stages[k]]

    yield from walk(state, 0, {}, 1.0)


def joint_from_tree(initial, stages: Sequence[str], between=None) -> np.ndarray:
    probs = np.zeros((2,) * 6)
    for n, m in SETTINGS:
        for outcomes, p, _ in enumerate_branches(initial, stages, (n, m), between):
            probs[(n, m) + _outcome_key(outcomes)] += p
    return probs


@lru_cache(maxsize=None)
def exact_joint_distribution(order: str) -> BranchTable:
    order = _check_order(order)
    return BranchTable(joint_from_tree(q.initial_state(), STAGES[order]), order)


def branch_probability(n, m, i, j, l_A, l_B) -> float:
    """Closed form of the exact branch table, with the sign exponent found by enumeration."""
    exponent = l_A - l_B + i * (1 - n) + j * n + m * (1 - n)
    return (1 + (-1) ** (exponent % 2) / np.sqrt(2)) / 16


def intermediate_branches(order: str, setting) -> list[tuple[dict, float, PureState]]:
    """All states between the first measurement step and the second.

    For ``larry`` that is after the Bell measurement; for ``rob`` after both
    verification measurements.
    """
    order = _check_order(order)
    stages = STAGES[order][:1] if order == "larry" else STAGES[order][:2]
    return list(enumerate_branches(q.initial_state(), stages, setting))


def entanglement_witness(state, pair: Sequence[str] = ("A", "B")) -> float:
    """Entropy (bits) of the first qubit of ``pair`` within the pair's reduced state."""
    if not isinstance(state, PureState):
        raise UsageError("the entanglement witness is defined for pure global states only")
    pair = tuple(pair)
    if len(pair) != 2:
        raise UsageError(f"pair must name two qubits, got {pair}")
    reduced = q.partial_trace(state, pair)
    return q.von_neumann_entropy(q.partial_trace(reduced, pair[:1]))


def shot_stream(seed: int, point: int = 0) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(point,)))


def _choose(probs: Sequence[float], u: float) -> int:
    c = np.cumsum(probs)
    return int(np.searchsorted(c / c[-1], u, side="right"))


def run_shot(order: str, setting, rng: np.random.Generator, audit: bool = False, t_events=None) -> ShotRecord:
    """One shot, walking the branch tree live in the given order.

    Draws ``UNIFORMS_PER_SHOT`` numbers; the first two pick the settings when
    ``setting`` is None.
    """
    order = _check_order(order)
    u = rng.random(UNIFORMS_PER_SHOT)
    if setting is None:
        setting = (int(u[0] * 2), int(u[1] * 2))
    setting = SettingPair(check_bit(setting[0], "n"), check_bit(setting[1], "m"))
    stages = STAGES[order]
    keep_after = 0 if order == "larry" else 1
    state = q.initial_state()
    outcomes, intermediate = {}, None
    for k, stage in enumerate(stages):
        branches = [b for b in _stage_branches(state, stage, setting) if b.state is not None]
        pick = branches[_choose([b.probability for b in branches], u[2 + k])]
        outcomes[stage] = pick.outcome
        state = pick.state
        if audit and k == keep_after:
            intermediate = state
    i, j, l_A, l_B = _outcome_key(outcomes)
    return ShotRecord(setting, BellIndex(i, j), l_A, l_B, order, t_events, intermediate)


@dataclass(frozen=True)
class ShotBatch:
    """Column-oriented shots; row ``k`` is shot ``k`` of its stream."""

    n: np.ndarray
    m: np.ndarray
    i: np.ndarray
    j: np.ndarray
    l_A: np.ndarray
    l_B: np.ndarray
    order: str

    def __len__(self) -> int:
        return len(self.n)

    def columns(self) -> np.ndarray:
        return np.stack([self.n, self.m, self.i, self.j, self.l_A, self.l_B])

    def __getitem__(self, k: int) -> ShotRecord:
        return ShotRecord(
            SettingPair(int(self.n[k]), int(self.m[k])),
            BellIndex(int(self.i[k]), int(self.j[k])),
            int(self.l_A[k]),
            int(self.l_B[k]),
            self.order,
        )

    def records(self) -> Iterator[ShotRecord]:
        for k in range(len(self)):
            yield self[k]


def _inverse_cdf(p: np.ndarray, u: np.ndarray) -> np.ndarray:
    c = np.cumsum(p, axis=1)
    c = c / c[:, -1:]
    return (u[:, None] >= c[:, :-1]).sum(axis=1)


_STAGE_AXIS = {"bell": 2, "A": 3, "B": 4}


def sample_joint(joint: np.ndarray, stages: Sequence[str], u: np.ndarray, setting=None, order: str = "") -> ShotBatch:
    """Sample shots stage by stage from the exact joint table.

    ``u`` has shape (N, UNIFORMS_PER_SHOT).  Each stage is drawn from its
    conditional distribution given the earlier outcomes of the same shot.
    """
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[1] != UNIFORMS_PER_SHOT:
        raise UsageError(f"need an (N, {UNIFORMS_PER_SHOT}) array of uniforms")
    staged = np.asarray(joint).reshape(2, 2, 4, 2, 2)
    staged = staged.transpose([0, 1] + [_STAGE_AXIS[s] for s in stages])
    if setting is None:
        n = (u[:, 0] * 2).astype(np.int64)
        m = (u[:, 1] * 2).astype(np.int64)
    else:
        n = np.full(len(u), check_bit(setting[0], "n"), dtype=np.int64)
        m = np.full(len(u), check_bit(setting[1], "m"), dtype=np.int64)
    s1 = _inverse_cdf(staged.sum(axis=(3, 4))[n, m], u[:, 2])
    s2 = _inverse_cdf(staged.sum(axis=4)[n, m, s1], u[:, 3])
    s3 = _inverse_cdf(staged[n, m, s1, s2], u[:, 4])
    picked = dict(zip(stages, (s1, s2, s3)))
    bell = picked["bell"]
    return ShotBatch(n, m, bell // 2, bell % 2, picked["A"], picked["B"], order)


def run_shots(order: str, shots: int, seed: int, point: int = 0, setting=None) -> ShotBatch:
    order = _check_order(order)
    if shots < 0:
        raise UsageError(f"shot count must be non-negative, got {shots}")
    u = shot_stream(seed, point).random((shots, UNIFORMS_PER_SHOT))
    return sample_joint(exact_joint_distribution(order).probs, STAGES[order], u, setting, order)


@lru_cache(maxsize=None)
def _witness_lookup(order: str) -> np.ndarray:
    """Witness value of the intermediate state, indexed by (n, m, i, j, l_A, l_B)."""
    table = np.full((2,) * 6, np.nan)
    for n, m in SETTINGS:
        for outcomes, _, state in intermediate_branches(order, (n, m)):
            w = entanglement_witness(state, ("A", "B"))
            if order == "larry":
                i, j = outcomes["bell"]
                table[n, m, i, j] = w
            else:
                table[n, m, :, :, outcomes["A"], outcomes["B"]] = w
    return table


def audit_witnesses(batch: ShotBatch) -> np.ndarray:
    """AB witness of the intermediate state each sampled shot passed through."""
    return _witness_lookup(_check_order(batch.order))[tuple(batch.columns())]


def lab_events(separation: float = 1.0, delay: float = 0.1) -> dict[str, SpacetimeEvent]:
    """Lab-frame events: Bell measurement at x = separation, verifications at x = 0 after ``delay``."""
    return {
        "bell": SpacetimeEvent(0.0, separation, 0.0, 0.0),
        "verify_A": SpacetimeEvent(delay, 0.0, 0.0, 0.0),
        "verify_B": SpacetimeEvent(delay, 0.0, 0.0, 0.0),
    }


def frame_order(beta: float, events: dict[str, SpacetimeEvent] | None = None, axis: str = "x") -> str:
    """Measurement order seen by an observer moving with velocity ``beta`` along ``axis``."""
    events = lab_events() if events is None else events
    t_bell = boost_event(events["bell"], beta, axis).t
    t_verify = min(boost_event(events[k], beta, axis).t for k in ("verify_A", "verify_B"))
    if abs(t_bell - t_verify) <= 1e-12:
        return "simultaneous"
    return "larry" if t_bell < t_verify else "rob"
