"""Dense statevector simulation.

Qubit ordering is little-endian: qubit ``q`` is bit ``q`` of the basis
index.  System qubits occupy ``0..L-1`` and ancillas are appended above
them (``L..L+A-1``), so an amplitude index decomposes as
``z + 2**L * ancilla_bits``.

Every operation returns a new :class:`PureState`; inputs are never mutated.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Optional

import numpy as np

if TYPE_CHECKING:
    from qfcs.model import NumberOperator

NORM_TOL = 1e-10
UNITARY_TOL = 1e-12
PROJECTION_TOL = 1e-14


class ProjectionError(RuntimeError):
    """Raised when a requested measurement outcome has (numerically) zero probability."""

    def __init__(self, qubit, outcome, probability):
        super().__init__(
            f"projection failed: qubit {qubit} outcome {outcome} has probability {probability:.3e}"
        )
        self.qubit = qubit
        self.outcome = outcome
        self.probability = probability


class PureState:
    """A normalized register of ``num_qubits`` qubits."""

    __slots__ = ("num_qubits", "amplitudes")

    def __init__(self, num_qubits: int, amplitudes, check: bool = True):
        amplitudes = np.asarray(amplitudes, dtype=np.complex128)
        if amplitudes.shape != (1 << num_qubits,):
            raise ValueError(
                f"expected {1 << num_qubits} amplitudes for {num_qubits} qubits, got shape {amplitudes.shape}"
            )
        if check:
            norm = float(np.vdot(amplitudes, amplitudes).real)
            if abs(norm - 1.0) > NORM_TOL:
                raise ValueError(f"state is not normalized (|psi|^2 = {norm!r})")
        self.num_qubits = num_qubits
        self.amplitudes = amplitudes

    @classmethod
    def from_amplitudes(cls, amplitudes, normalize: bool = False) -> "PureState":
        amplitudes = np.asarray(amplitudes, dtype=np.complex128)
        num_qubits = int(amplitudes.size).bit_length() - 1
        if amplitudes.size != 1 << num_qubits:
            raise ValueError("amplitude count must be a power of two")
        if normalize:
            amplitudes = amplitudes / np.linalg.norm(amplitudes)
        return cls(num_qubits, amplitudes)

    @property
    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def norm_squared(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def copy(self) -> "PureState":
        return PureState(self.num_qubits, self.amplitudes.copy(), check=False)

    def __repr__(self):
        return f"PureState(num_qubits={self.num_qubits})"


def init_basis_state(num_qubits: int, basis_index: int) -> PureState:
    """Computational basis state ``|basis_index>`` on ``num_qubits`` qubits."""
    if num_qubits < 0:
        raise ValueError("num_qubits must be non-negative")
    if not 0 <= basis_index < (1 << num_qubits):
        raise ValueError(f"basis index {basis_index} out of range for {num_qubits} qubits")
    amps = np.zeros(1 << num_qubits, dtype=np.complex128)
    amps[basis_index] = 1.0
    return PureState(num_qubits, amps, check=False)


def random_state(num_qubits: int, rng=None) -> PureState:
    """Haar-like random state (normalized complex Gaussian vector)."""
    rng = np.random.default_rng(rng)
    dim = 1 << num_qubits
    amps = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return PureState(num_qubits, amps / np.linalg.norm(amps))


def _check_qubit(state: PureState, qubit: int):
    if not 0 <= qubit < state.num_qubits:
        raise ValueError(f"qubit {qubit} out of range for a {state.num_qubits}-qubit state")


# -- gates ----------------------------------------------------------------


class Gate:
    """A validated 2x2 unitary."""

    __slots__ = ("name", "matrix")

    def __init__(self, matrix, name: str = "U"):
        matrix = np.asarray(matrix, dtype=np.complex128)
        if matrix.shape != (2, 2):
            raise ValueError(f"single-qubit gate must be 2x2, got {matrix.shape}")
        err = np.max(np.abs(matrix.conj().T @ matrix - np.eye(2)))
        if err > UNITARY_TOL:
            raise ValueError(f"gate {name} is not unitary (deviation {err:.2e})")
        self.matrix = matrix
        self.name = name

    def __repr__(self):
        return f"Gate({self.name})"


H = Gate(np.array([[1, 1], [1, -1]]) / np.sqrt(2), "H")
X = Gate([[0, 1], [1, 0]], "X")


def rx(phi: float) -> Gate:
    """R_x(phi) = exp(-i phi X / 2)."""
    c, s = np.cos(phi / 2), np.sin(phi / 2)
    return Gate([[c, -1j * s], [-1j * s, c]], f"Rx({phi:g})")


def rz(phi: float) -> Gate:
    """R_z(phi) = diag(exp(-i phi/2), exp(i phi/2))."""
    return Gate(np.diag([np.exp(-0.5j * phi), np.exp(0.5j * phi)]), f"Rz({phi:g})")


def apply_one_qubit_gate(state: PureState, qubit: int, gate) -> PureState:
    """Apply a single-qubit gate to ``qubit``.

    ``gate`` may be a :class:`Gate` or a raw 2x2 array (validated on the spot).
    """
    _check_qubit(state, qubit)
    if not isinstance(gate, Gate):
        gate = Gate(gate)
    psi = state.amplitudes.reshape(-1, 2, 1 << qubit)
    out = np.einsum("ab,ibj->iaj", gate.matrix, psi)
    return PureState(state.num_qubits, out.reshape(-1), check=False)


def _spin_signs(num_qubits: int, qubit: int) -> np.ndarray:
    bits = (np.arange(1 << num_qubits) >> qubit) & 1
    return 1 - 2 * bits


def apply_zz_rotation(state: PureState, qubit_a: int, qubit_b: int, angle: float) -> PureState:
    """Multiply each amplitude by ``exp(i*angle*s_a*s_b)`` with ``s = 1 - 2*bit``."""
    _check_qubit(state, qubit_a)
    _check_qubit(state, qubit_b)
    if qubit_a == qubit_b:
        raise ValueError("zz rotation needs two distinct qubits")
    ss = _spin_signs(state.num_qubits, qubit_a) * _spin_signs(state.num_qubits, qubit_b)
    return PureState(state.num_qubits, state.amplitudes * np.exp(1j * angle * ss), check=False)


# -- diagonal number-operator evolution -----------------------------------


@dataclass(frozen=True)
class DiagonalPhaseSpec:
    """``exp(i * angle * n(z))`` on the system register, optionally controlled.

    ``op`` supplies n(z) for every system basis state; ``control`` is an
    ancilla index (>= op.L) or None for an unconditional phase.
    """

    angle: float
    op: "NumberOperator"
    control: Optional[int] = None


def apply_diagonal_phase(state: PureState, spec: DiagonalPhaseSpec) -> PureState:
    L = spec.op.L
    if state.num_qubits < L:
        raise ValueError(f"state has {state.num_qubits} qubits, operator needs {L}")
    phases = np.exp(1j * spec.angle * spec.op.values)
    psi = state.amplitudes.reshape(-1, 1 << L)
    if spec.control is None:
        out = psi * phases
    else:
        if not L <= spec.control < state.num_qubits:
            raise ValueError(f"control qubit {spec.control} must be an ancilla in [{L}, {state.num_qubits})")
        out = psi.copy()
        rows = ((np.arange(psi.shape[0]) >> (spec.control - L)) & 1).astype(bool)
        out[rows] *= phases
    return PureState(state.num_qubits, out.reshape(-1), check=False)


# -- register management --------------------------------------------------


def append_qubits(state: PureState, count: int = 1, basis_index: int = 0) -> PureState:
    """Tensor ``count`` fresh qubits in ``|basis_index>`` above the existing ones."""
    fresh = init_basis_state(count, basis_index)
    amps = np.kron(fresh.amplitudes, state.amplitudes)
    return PureState(state.num_qubits + count, amps, check=False)


def drop_qubit(state: PureState, qubit: int, outcome: int = 0) -> PureState:
    """Remove a qubit known to be in ``|outcome>`` (e.g. right after projection)."""
    _check_qubit(state, qubit)
    psi = state.amplitudes.reshape(-1, 2, 1 << qubit)
    other = psi[:, 1 - outcome, :]
    if np.vdot(other, other).real > NORM_TOL:
        raise ValueError(f"qubit {qubit} is entangled or not in |{outcome}>; cannot drop it")
    return PureState(state.num_qubits - 1, psi[:, outcome, :].reshape(-1))


# -- measurement ----------------------------------------------------------


def qubit_marginal(state: PureState, qubit: int) -> tuple[float, float]:
    """(P(bit=0), P(bit=1)) for a single qubit."""
    _check_qubit(state, qubit)
    probs = state.probabilities.reshape(-1, 2, 1 << qubit).sum(axis=(0, 2))
    return float(probs[0]), float(probs[1])


def project_qubit(state: PureState, qubit: int, outcome: int) -> tuple[float, PureState]:
    """Project ``qubit`` onto ``|outcome>``.

    Returns the outcome probability and the renormalized post-measurement
    state (same qubit count).  Raises :class:`ProjectionError` when the
    probability is below 1e-14.
    """
    _check_qubit(state, qubit)
    if outcome not in (0, 1):
        raise ValueError("outcome must be 0 or 1")
    psi = state.amplitudes.reshape(-1, 2, 1 << qubit).copy()
    psi[:, 1 - outcome, :] = 0.0
    prob = float(np.vdot(psi, psi).real)
    if prob < PROJECTION_TOL:
        raise ProjectionError(qubit, outcome, prob)
    return prob, PureState(state.num_qubits, psi.reshape(-1) / np.sqrt(prob))


def expectation_diagonal(state: PureState, op: "NumberOperator", power: int = 1) -> float:
    """``<psi| n^power |psi>`` for a diagonal number operator on the system qubits."""
    if power < 1:
        raise ValueError("power must be >= 1")
    probs = state.probabilities.reshape(-1, 1 << op.L).sum(axis=0)
    return float(np.dot(probs, op.values.astype(float) ** power))


def marginal_probabilities(state: PureState, qubits) -> np.ndarray:
    """Joint outcome probabilities of ``qubits``; entry j has bit i of j = bit of qubits[i]."""
    qubits = list(qubits)
    for q in qubits:
        _check_qubit(state, q)
    idx = np.arange(1 << state.num_qubits)
    key = np.zeros_like(idx)
    for i, q in enumerate(qubits):
        key |= ((idx >> q) & 1) << i
    return np.bincount(key, weights=state.probabilities, minlength=1 << len(qubits))


def sample_counts(state: PureState, qubits, shots: int, seed) -> dict[str, int]:
    """Sample ``shots`` measurements of ``qubits``.

    Keys are bitstrings whose i-th character is the outcome of ``qubits[i]``.
    ``seed`` is anything :func:`numpy.random.default_rng` accepts, including a
    Generator (which is then advanced).
    """
    qubits = list(qubits)
    if not qubits:
        raise ValueError("no qubits to measure")
    if shots < 1:
        raise ValueError("shots must be >= 1")
    probs = marginal_probabilities(state, qubits)
    probs = np.clip(probs, 0.0, None)
    probs /= probs.sum()
    draws = np.random.default_rng(seed).multinomial(shots, probs)
    width = len(qubits)
    return {
        "".join(str((j >> i) & 1) for i in range(width)): int(c)
        for j, c in enumerate(draws)
        if c
    }
