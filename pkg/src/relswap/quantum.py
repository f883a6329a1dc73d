"""Exact state engine for the four-qubit register A, B, C, D.

States carry an explicit tuple of qubit labels.  The first label is the
most significant bit of the basis index, so ``PureState(v, ("A", "B"))``
stores ``v[2*a + b]`` as the amplitude of ``|a>_A |b>_B``.  Every
label-addressed operation converts through that convention.

Measurements are exposed in two forms: single-outcome projections
(``project_bell``, ``measure_observable``) and complete branch sets
(``bell_branches``, ``observable_branches``).  Branches whose probability
falls below ``NULL_PROBABILITY`` carry ``None`` instead of a post-state.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import product
from math import sqrt
from typing import Mapping, NamedTuple, Sequence, Union

import numpy as np

from .errors import DomainError, UsageError

LABELS = ("A", "B", "C", "D")
NORM_TOL = 1e-12
HERMITIAN_TOL = 1e-12
EIGEN_TOL = 1e-10
IMAG_TOL = 1e-10
NULL_PROBABILITY = 1e-14


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


I2 = _frozen(np.eye(2))
SIGMA_X = _frozen([[0, 1], [1, 0]])
SIGMA_Z = _frozen([[1, 0], [0, -1]])


def check_bit(value, name: str = "bit") -> int:
    if value not in (0, 1):
        raise UsageError(f"{name} must be 0 or 1, got {value!r}")
    return int(value)


class BellIndex(NamedTuple):
    """Bell-state label (i, j); i flips the second qubit, j sets the phase."""

    i: int
    j: int


BELL_INDICES = tuple(BellIndex(i, j) for i, j in product((0, 1), repeat=2))


def _check_labels(labels: Sequence[str]) -> tuple[str, ...]:
    labels = tuple(labels)
    if not 1 <= len(labels) <= len(LABELS):
        raise UsageError(f"between 1 and 4 qubits are supported, got {len(labels)}")
    if len(set(labels)) != len(labels):
        raise UsageError(f"duplicate qubit labels in {labels}")
    unknown = [q for q in labels if q not in LABELS]
    if unknown:
        raise UsageError(f"unknown qubit labels {unknown}; expected a subset of {LABELS}")
    return labels


def _positions(labels: tuple[str, ...], targets: Sequence[str]) -> list[int]:
    targets = tuple(targets)
    if len(set(targets)) != len(targets):
        raise UsageError(f"target labels must be distinct, got {targets}")
    missing = [q for q in targets if q not in labels]
    if missing:
        raise UsageError(f"labels {missing} not present in state {labels}")
    return [labels.index(q) for q in targets]


def _permute_vector(vec: np.ndarray, src: tuple[str, ...], dst: tuple[str, ...]) -> np.ndarray:
    n = len(src)
    axes = [src.index(q) for q in dst]
    return vec.reshape([2] * n).transpose(axes).reshape(-1)


def _permute_matrix(mat: np.ndarray, src: tuple[str, ...], dst: tuple[str, ...]) -> np.ndarray:
    n = len(src)
    axes = [src.index(q) for q in dst]
    axes = axes + [a + n for a in axes]
    return mat.reshape([2] * (2 * n)).transpose(axes).reshape(2**n, 2**n)


def embed(op, targets: Sequence[str], labels: Sequence[str]) -> np.ndarray:
    """Lift ``op`` acting on ``targets`` (in that order) to the full register ``labels``."""
    labels = tuple(labels)
    targets = tuple(targets)
    _positions(labels, targets)
    op = np.ascontiguousarray(op, dtype=complex)
    if op.shape != (2 ** len(targets),) * 2:
        raise UsageError(f"operator shape {op.shape} does not match {len(targets)} target qubits")
    return _embed_cached(op.tobytes(), targets, labels)


@lru_cache(maxsize=1024)
def _embed_cached(op_bytes: bytes, targets: tuple[str, ...], labels: tuple[str, ...]) -> np.ndarray:
    dim = 2 ** len(targets)
    op = np.frombuffer(op_bytes, dtype=complex).reshape(dim, dim)
    rest = tuple(q for q in labels if q not in targets)
    full = np.kron(op, np.eye(2 ** len(rest)))
    full = _permute_matrix(full, targets + rest, labels)
    full.setflags(write=False)
    return full


@dataclass(frozen=True)
class PureState:
    amplitudes: np.ndarray
    labels: tuple[str, ...]

    def __post_init__(self):
        labels = _check_labels(self.labels)
        amps = _frozen(np.ravel(self.amplitudes))
        if amps.shape != (2 ** len(labels),):
            raise UsageError(f"{len(labels)} qubits need {2 ** len(labels)} amplitudes, got {amps.size}")
        if not np.all(np.isfinite(amps)):
            raise DomainError("amplitudes must be finite")
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > NORM_TOL:
            raise DomainError(f"state is not normalized (norm^2 = {norm!r})")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def num_qubits(self) -> int:
        return len(self.labels)

    def density(self) -> DensityMatrix:
        return DensityMatrix(np.outer(self.amplitudes, self.amplitudes.conj()), self.labels)

    def tensor(self, other: PureState) -> PureState:
        return PureState(np.kron(self.amplitudes, other.amplitudes), self.labels + other.labels)

    def reorder(self, labels: Sequence[str]) -> PureState:
        labels = tuple(labels)
        if sorted(labels) != sorted(self.labels):
            raise UsageError(f"cannot reorder {self.labels} as {labels}")
        return PureState(_permute_vector(self.amplitudes, self.labels, labels), labels)

    def inner(self, other: PureState) -> complex:
        """<self|other>, after bringing ``other`` into this state's label order."""
        other = other.reorder(self.labels)
        return complex(np.vdot(self.amplitudes, other.amplitudes))


@dataclass(frozen=True)
class DensityMatrix:
    matrix: np.ndarray
    labels: tuple[str, ...]

    def __post_init__(self):
        labels = _check_labels(self.labels)
        dim = 2 ** len(labels)
        mat = _frozen(self.matrix)
        if mat.shape != (dim, dim):
            raise UsageError(f"{len(labels)} qubits need a {dim}x{dim} matrix, got {mat.shape}")
        if not np.all(np.isfinite(mat)):
            raise DomainError("density matrix entries must be finite")
        if np.max(np.abs(mat - mat.conj().T)) > HERMITIAN_TOL:
            raise DomainError("density matrix is not Hermitian")
        tr = np.trace(mat)
        if abs(tr - 1.0) > NORM_TOL:
            raise DomainError(f"density matrix trace is {tr!r}, expected 1")
        if np.linalg.eigvalsh(mat).min() < -EIGEN_TOL:
            raise DomainError("density matrix has a negative eigenvalue")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "matrix", mat)

    @property
    def num_qubits(self) -> int:
        return len(self.labels)

    def tensor(self, other: DensityMatrix) -> DensityMatrix:
        return DensityMatrix(np.kron(self.matrix, other.matrix), self.labels + other.labels)

    def reorder(self, labels: Sequence[str]) -> DensityMatrix:
        labels = tuple(labels)
        if sorted(labels) != sorted(self.labels):
            raise UsageError(f"cannot reorder {self.labels} as {labels}")
        return DensityMatrix(_permute_matrix(self.matrix, self.labels, labels), labels)


State = Union[PureState, DensityMatrix]


@dataclass(frozen=True)
class Observable:
    """Single-qubit involution with eigenvalue (-1)**l on ``eigenvectors[:, l]``."""

    matrix: np.ndarray
    eigenvectors: np.ndarray

    def __post_init__(self):
        mat = _frozen(self.matrix)
        vecs = _frozen(self.eigenvectors)
        if mat.shape != (2, 2) or vecs.shape != (2, 2):
            raise UsageError("observables are 2x2")
        if np.max(np.abs(mat - mat.conj().T)) > HERMITIAN_TOL:
            raise DomainError("observable is not Hermitian")
        if np.max(np.abs(mat @ mat - np.eye(2))) > NORM_TOL:
            raise DomainError("observable does not square to the identity")
        rebuilt = vecs @ np.diag([1.0, -1.0]) @ vecs.conj().T
        if np.max(np.abs(rebuilt - mat)) > NORM_TOL:
            raise DomainError("eigenbasis does not reconstruct the observable")
        object.__setattr__(self, "matrix", mat)
        object.__setattr__(self, "eigenvectors", vecs)

    @classmethod
    def from_matrix(cls, matrix) -> Observable:
        matrix = np.asarray(matrix, dtype=complex)
        w, v = np.linalg.eigh(matrix)
        # eigh sorts ascending, so column 1 holds the +1 eigenvector
        return cls(matrix, v[:, ::-1])

    def projector(self, outcome: int) -> np.ndarray:
        v = self.eigenvectors[:, check_bit(outcome, "outcome")]
        return np.outer(v, v.conj())

    def eigenstate(self, outcome: int, label: str = "A") -> PureState:
        return PureState(self.eigenvectors[:, check_bit(outcome, "outcome")], (label,))


class Branch(NamedTuple):
    outcome: object
    probability: float
    state: State | None


def bell_state(idx=BellIndex(0, 0), labels: Sequence[str] = ("A", "B")) -> PureState:
    i, j = check_bit(idx[0], "i"), check_bit(idx[1], "j")
    amps = np.zeros(4, dtype=complex)
    amps[i] = 1 / sqrt(2)  # |0>|i>
    amps[2 + (1 - i)] = (-1) ** j / sqrt(2)  # (-1)^j |1>|1-i>
    return PureState(amps, tuple(labels))


def initial_state() -> PureState:
    """Pairs AC and BD each in the (0, 0) Bell state, expressed in A,B,C,D order."""
    ac = bell_state((0, 0), ("A", "C"))
    bd = bell_state((0, 0), ("B", "D"))
    return ac.tensor(bd).reorder(LABELS)


def bell_projector(idx) -> np.ndarray:
    v = bell_state(idx).amplitudes
    return np.outer(v, v.conj())


def _project(state: State, proj: np.ndarray) -> tuple[float, State | None]:
    if isinstance(state, PureState):
        v = proj @ state.amplitudes
        p = float(np.vdot(v, v).real)
        if p < NULL_PROBABILITY:
            return p, None
        return p, PureState(v / sqrt(p), state.labels)
    if isinstance(state, DensityMatrix):
        m = proj @ state.matrix @ proj
        p = float(np.trace(m).real)
        if p < NULL_PROBABILITY:
            return p, None
        m = m / p
        return p, DensityMatrix(0.5 * (m + m.conj().T), state.labels)
    raise UsageError(f"expected PureState or DensityMatrix, got {type(state).__name__}")


def project_bell(state: State, pair: Sequence[str], outcome) -> tuple[float, State | None]:
    """Project ``pair`` onto the Bell state ``outcome``; returns (probability, post-state)."""
    pair = tuple(pair)
    if len(pair) != 2:
        raise UsageError(f"a Bell measurement needs two qubits, got {pair}")
    outcome = BellIndex(check_bit(outcome[0], "i"), check_bit(outcome[1], "j"))
    return _project(state, embed(bell_projector(outcome), pair, state.labels))


def bell_branches(state: State, pair: Sequence[str]) -> list[Branch]:
    branches = []
    for idx in BELL_INDICES:
        p, post = project_bell(state, pair, idx)
        branches.append(Branch(idx, p, post))
    return branches


def measure_observable(state: State, label: str, obs: Observable, outcome: int) -> tuple[float, State | None]:
    """Project qubit ``label`` onto the eigenstate of ``obs`` with eigenvalue (-1)**outcome."""
    return _project(state, embed(obs.projector(outcome), (label,), state.labels))


def observable_branches(state: State, label: str, obs: Observable) -> list[Branch]:
    return [Branch(l, *measure_observable(state, label, obs, l)) for l in (0, 1)]


def as_density(state: State) -> DensityMatrix:
    if isinstance(state, PureState):
        return state.density()
    if isinstance(state, DensityMatrix):
        return state
    raise UsageError(f"expected PureState or DensityMatrix, got {type(state).__name__}")


def partial_trace(state: State, keep: Sequence[str]) -> DensityMatrix:
    """Reduced density matrix on ``keep``, in the order given."""
    keep = tuple(keep)
    rho = as_density(state)
    _positions(rho.labels, keep)
    n = rho.num_qubits
    rest = tuple(q for q in rho.labels if q not in keep)
    mat = _permute_matrix(rho.matrix, rho.labels, keep + rest)
    dk, dr = 2 ** len(keep), 2 ** (n - len(keep))
    reduced = np.einsum("arbr->ab", mat.reshape(dk, dr, dk, dr))
    return DensityMatrix(0.5 * (reduced + reduced.conj().T), keep)


def von_neumann_entropy(rho: DensityMatrix, base: float = 2.0) -> float:
    w = np.linalg.eigvalsh(rho.matrix)
    w = w[w > 1e-15]
    return float(-np.sum(w * np.log(w)) / np.log(base))


def depolarize(rho: State, eta: float, duration: float, pair: Sequence[str] = ("A", "B")) -> DensityMatrix:
    """Depolarize ``pair`` for ``duration`` at rate ``eta``; other qubits are untouched.

    On the pair this is ``exp(-eta*t) * rho + (1 - exp(-eta*t)) * I/4``.  For a
    larger register the maximally mixed part is tensored with the reduced
    state of the remaining qubits.
    """
    if eta < 0 or duration < 0:
        raise DomainError(f"eta and duration must be non-negative, got eta={eta}, duration={duration}")
    rho = as_density(rho)
    pair = tuple(pair)
    _positions(rho.labels, pair)
    if eta * duration == 0:
        return rho
    keep = float(np.exp(-eta * duration))
    rest = tuple(q for q in rho.labels if q not in pair)
    mixed = np.eye(4) / 4
    if rest:
        mixed = np.kron(mixed, partial_trace(rho, rest).matrix)
    mixed = _permute_matrix(mixed, pair + rest, rho.labels)
    return DensityMatrix(keep * rho.matrix + (1 - keep) * mixed, rho.labels)


def expectation(state: State, operator) -> float:
    """<O> for ``operator`` given as {label: Observable or 2x2 array} or as a full matrix.

    Labels absent from the mapping carry the identity.
    """
    labels = state.labels
    if isinstance(operator, Mapping):
        full = np.eye(2 ** len(labels), dtype=complex)
        for label, op in operator.items():
            mat = op.matrix if isinstance(op, Observable) else op
            full = full @ embed(mat, (label,), labels)
    else:
        full = np.asarray(operator, dtype=complex)
        if full.shape != (2 ** len(labels),) * 2:
            raise UsageError(f"operator shape {full.shape} does not match a {len(labels)}-qubit state")
    if isinstance(state, PureState):
        value = np.vdot(state.amplitudes, full @ state.amplitudes)
    else:
        value = np.trace(as_density(state).matrix @ full)
    if abs(value.imag) > IMAG_TOL:
        raise DomainError(f"expectation has imaginary part {value.imag!r}; operator is not Hermitian")
    return float(value.real)
