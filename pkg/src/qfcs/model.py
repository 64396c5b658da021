"""Mixed-field Ising chain, domain-wall counting and exact reference results.

Spin convention: bit 0 is the sigma^z = +1 eigenstate, i.e. ``s = 1 - 2*bit``.
The Hamiltonian is

    H = -J * sum_i [ Z_i Z_{i+1} + h_x X_i + h_z Z_i ]

on a periodic chain of even length L.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from qfcs.statevector import (
    PureState,
    apply_one_qubit_gate,
    apply_zz_rotation,
    init_basis_state,
    rx,
    rz,
)

MAX_DENSE_L = 14


@dataclass(frozen=True)
class MfimParams:
    L: int = 12
    J: float = 1.0
    h_x: float = 1.0
    h_z: float = 1.0
    t: float = 1.0
    periodic: bool = True

    def __post_init__(self):
        if int(self.L) != self.L or self.L < 2 or self.L % 2:
            raise ValueError(f"L must be an even integer >= 2, got {self.L!r}")
        if not self.periodic:
            raise ValueError("only periodic boundary conditions are supported")
        for name in ("J", "h_x", "h_z", "t"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")


class NumberOperator:
    """Diagonal, integer-valued observable over the 2**L system basis states.

    ``values[z]`` is n(z); ``support`` is the sorted tuple of values that occur.
    """

    def __init__(self, L: int, values, name: str = "N"):
        values = np.asarray(values)
        if values.shape != (1 << L,):
            raise ValueError(f"need {1 << L} values for L={L}")
        if not np.issubdtype(values.dtype, np.integer):
            if not np.all(values == np.round(values)):
                raise ValueError("number operator values must be integers")
            values = np.round(values).astype(np.int64)
        if values.min() < 0 or values.max() > L:
            raise ValueError("number operator values must lie in [0, L]")
        self.L = L
        self.values = values.astype(np.int64)
        self.values.setflags(write=False)
        self.support = tuple(int(v) for v in np.unique(self.values))
        self.name = name

    @classmethod
    def from_function(cls, L: int, fn, name: str = "N") -> "NumberOperator":
        return cls(L, [fn(z) for z in range(1 << L)], name=name)

    def value_fn(self, z: int) -> int:
        return int(self.values[z])

    @property
    def even_support(self) -> bool:
        return all(v % 2 == 0 for v in self.support)

    @property
    def max_value(self) -> int:
        return self.support[-1]

    def sector(self, n: int) -> np.ndarray:
        """Basis indices with n(z) == n."""
        return np.flatnonzero(self.values == n)

    def __repr__(self):
        return f"NumberOperator({self.name}, L={self.L}, support={self.support})"


def domain_wall_count(z: int, L: int) -> int:
    """Number of bonds (i, i+1 mod L) whose bits differ."""
    if not 0 <= z < (1 << L):
        raise ValueError(f"basis index {z} out of range for L={L}")
    rotated = ((z >> 1) | ((z & 1) << (L - 1))) & ((1 << L) - 1)
    return bin(z ^ rotated).count("1")


def _popcount(arr: np.ndarray) -> np.ndarray:
    out = np.zeros_like(arr)
    while np.any(arr):
        out += arr & 1
        arr = arr >> 1
    return out


def domain_wall_operator(L: int) -> NumberOperator:
    """N = 1/2 sum_i (1 - Z_i Z_{i+1}) on a periodic chain."""
    z = np.arange(1 << L, dtype=np.int64)
    rotated = ((z >> 1) | ((z & 1) << (L - 1))) & ((1 << L) - 1)
    return NumberOperator(L, _popcount(z ^ rotated), name="domain_walls")


def particle_number_operator(L: int) -> NumberOperator:
    """N = sum_i n_i with n_i = (1 - Z_i)/2, i.e. the number of set bits."""
    return NumberOperator(L, _popcount(np.arange(1 << L, dtype=np.int64)), name="particles")


# -- Hamiltonian and exact evolution --------------------------------------


def _zz_and_z_sums(L: int) -> tuple[np.ndarray, np.ndarray]:
    z = np.arange(1 << L, dtype=np.int64)
    spins = [1 - 2 * ((z >> i) & 1) for i in range(L)]
    zz = sum(spins[i] * spins[(i + 1) % L] for i in range(L))
    zsum = sum(spins)
    return zz.astype(float), zsum.astype(float)


def build_mfim_matrix(params: MfimParams) -> np.ndarray:
    """Dense real-symmetric MFIM Hamiltonian (2**L x 2**L)."""
    L = params.L
    if L > MAX_DENSE_L:
        raise NotImplementedError(f"dense Hamiltonian limited to L <= {MAX_DENSE_L}, got {L}")
    dim = 1 << L
    zz, zsum = _zz_and_z_sums(L)
    ham = np.diag(-params.J * (zz + params.h_z * zsum))
    z = np.arange(dim)
    for i in range(L):
        ham[z ^ (1 << i), z] += -params.J * params.h_x
    return ham


@lru_cache(maxsize=4)
def _eigensystem(L, J, h_x, h_z):
    ham = build_mfim_matrix(MfimParams(L=L, J=J, h_x=h_x, h_z=h_z))
    return np.linalg.eigh(ham)


def exact_evolve(state: PureState, params: MfimParams) -> PureState:
    """exp(-i H t)|state> via full diagonalization (cached per Hamiltonian)."""
    if state.num_qubits != params.L:
        raise ValueError(f"state has {state.num_qubits} qubits, model has L={params.L}")
    energies, vecs = _eigensystem(params.L, params.J, params.h_x, params.h_z)
    coeffs = vecs.T @ state.amplitudes
    amps = vecs @ (np.exp(-1j * energies * params.t) * coeffs)
    return PureState(params.L, amps)


def trotter_evolve(state: PureState, params: MfimParams, steps: int) -> PureState:
    """Second-order product formula, layers [X/2, Z/2, ZZ, Z/2, X/2] per step."""
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if state.num_qubits != params.L:
        raise ValueError(f"state has {state.num_qubits} qubits, model has L={params.L}")
    L, J = params.L, params.J
    dt = params.t / steps
    # exp(+i J c dt P) == R_P(-2 J c dt) for the field terms
    half_x = rx(-J * params.h_x * dt)
    half_z = rz(-J * params.h_z * dt)
    psi = state
    for _ in range(steps):
        for q in range(L):
            psi = apply_one_qubit_gate(psi, q, half_x)
        for q in range(L):
            psi = apply_one_qubit_gate(psi, q, half_z)
        for q in range(L):
            psi = apply_zz_rotation(psi, q, (q + 1) % L, J * dt)
        for q in range(L):
            psi = apply_one_qubit_gate(psi, q, half_z)
        for q in range(L):
            psi = apply_one_qubit_gate(psi, q, half_x)
    return PureState(L, psi.amplitudes)


def prepare_state(params: MfimParams, method: str = "exact", steps: int = 64) -> PureState:
    """Evolve |0...0> under the MFIM for time ``params.t``."""
    psi0 = init_basis_state(params.L, 0)
    if method == "exact":
        return exact_evolve(psi0, params)
    if method == "trotter":
        return trotter_evolve(psi0, params, steps)
    raise ValueError(f"unknown preparation method {method!r}")


# -- exact statistics -----------------------------------------------------


def _system_probs(state: PureState, op: NumberOperator) -> np.ndarray:
    return state.probabilities.reshape(-1, 1 << op.L).sum(axis=0)


def exact_distribution(state: PureState, op: NumberOperator):
    """Sector weights P(n) = sum_{z in G_n} |c_z|^2."""
    from qfcs.fcs import Distribution

    weights = np.bincount(op.values, weights=_system_probs(state, op), minlength=op.L + 1)
    return Distribution({n: float(weights[n]) for n in op.support})


def exact_char_func(state: PureState, op: NumberOperator, theta: float) -> complex:
    """<exp(i theta N)> evaluated directly from the amplitudes."""
    if theta == 0:
        return 1.0 + 0.0j
    return complex(np.dot(_system_probs(state, op), np.exp(1j * theta * op.values)))
