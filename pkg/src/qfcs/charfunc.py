"""Hadamard-test estimation of the characteristic function <exp(i theta N)>.

Circuit (ancilla at qubit L, starting in |0>)::

    ancilla: H --o-------------------- H or Rx(pi/2) -- measure
    system : ----exp(i theta N)------------------------

The real-part circuit gives p0 = (1 + Re P)/2.  With Rx(phi) = exp(-i phi X/2)
the imaginary-part circuit gives p0 = (1 + Im P)/2, so both parts are read out
as ``2*p0 - 1`` with no extra sign flip.

Exact mode normally runs in double precision.  Passing ``precision_bits``
re-runs the same gate sequence on gmpy2 multiprecision amplitudes; the
returned value is then a ``gmpy2.mpc``.  Finite-difference stencils at small
steps need this, because double rounding (~1e-16) divided by h**order swamps
the truncation error there.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from qfcs.model import NumberOperator
from qfcs.statevector import (
    H,
    DiagonalPhaseSpec,
    PureState,
    append_qubits,
    apply_diagonal_phase,
    apply_one_qubit_gate,
    qubit_marginal,
    rx,
    sample_counts,
)

EXACT = "exact"
SHOTS = "shots"
_READOUT = {"real": H, "imag": rx(math.pi / 2)}


@dataclass(frozen=True)
class SamplingGrid:
    """k uniformly spaced angles covering one period of the characteristic function.

    The default period 2*pi gives theta_i = -pi + 2*pi*i/k.  For operators whose
    values are all even the characteristic function is pi-periodic, and
    ``period=pi`` samples only that period: theta_i = -pi/2 + pi*i/k.
    """

    k: int
    period: float = 2 * math.pi

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("grid needs at least one point")
        if not (math.isclose(self.period, 2 * math.pi) or math.isclose(self.period, math.pi)):
            raise ValueError("grid period must be 2*pi or pi")

    @classmethod
    def for_operator(cls, k: int, op: NumberOperator, parity_aware: bool = True) -> "SamplingGrid":
        if parity_aware and op.even_support:
            return cls(k, math.pi)
        return cls(k)

    @property
    def spacing(self) -> float:
        return self.period / self.k

    @property
    def stride(self) -> int:
        """Spacing between integers n that share one Fourier mode (1 or 2)."""
        return round(2 * math.pi / self.period)

    @property
    def angles(self) -> np.ndarray:
        return -self.period / 2 + self.spacing * np.arange(self.k)


@dataclass(frozen=True)
class CharFuncSample:
    theta: float
    value: complex
    mode: str = EXACT
    shots: int = 0
    seed: int | None = None


def _controlled_state(prepared: PureState, op: NumberOperator, theta: float) -> PureState:
    if prepared.num_qubits != op.L:
        raise ValueError(f"prepared state has {prepared.num_qubits} qubits, operator acts on {op.L}")
    psi = append_qubits(prepared, 1)
    psi = apply_one_qubit_gate(psi, op.L, H)
    return apply_diagonal_phase(psi, DiagonalPhaseSpec(theta, op, control=op.L))


def hadamard_test_circuit(prepared: PureState, op: NumberOperator, theta: float, part: str) -> PureState:
    """Final (pre-measurement) state of the real- or imaginary-part circuit."""
    if part not in _READOUT:
        raise ValueError(f"part must be 'real' or 'imag', got {part!r}")
    psi = _controlled_state(prepared, op, theta)
    return apply_one_qubit_gate(psi, op.L, _READOUT[part])


def hadamard_test_probability(prepared: PureState, op: NumberOperator, theta: float, part: str) -> float:
    """Probability that the ancilla reads 0."""
    psi = hadamard_test_circuit(prepared, op, theta, part)
    return qubit_marginal(psi, op.L)[0]


def hadamard_test_probability_mp(prepared: PureState, op: NumberOperator, theta, part: str, bits: int):
    """Multiprecision twin of :func:`hadamard_test_probability`.

    The register is held as the two ancilla halves (ancilla = top qubit), so
    every gate acts on the ancilla index only.  ``theta`` may be a float or a
    gmpy2 ``mpfr``; the result is an ``mpfr``.
    """
    import gmpy2

    if part not in _READOUT:
        raise ValueError(f"part must be 'real' or 'imag', got {part!r}")
    if prepared.num_qubits != op.L:
        raise ValueError(f"prepared state has {prepared.num_qubits} qubits, operator acts on {op.L}")
    with gmpy2.context(precision=bits):
        amps = np.array([gmpy2.mpc(a) for a in prepared.amplitudes], dtype=object)
        r = gmpy2.rec_sqrt(gmpy2.mpfr(2))
        theta = gmpy2.mpfr(theta)
        # H on the ancilla (starts in |0>)
        top, bottom = amps * r, amps * r
        # controlled exp(i theta N)
        phases = {n: gmpy2.exp(gmpy2.mpc(0, theta * n)) for n in op.support}
        bottom = bottom * np.array([phases[int(n)] for n in op.values], dtype=object)
        if part == "real":
            top = (top + bottom) * r
        else:
            # Rx(pi/2) row 0: (1, -i) / sqrt(2)
            top = (top - gmpy2.mpc(0, 1) * bottom) * r
        return gmpy2.fsum([gmpy2.norm(a) for a in top])


def estimate_point(
    prepared: PureState,
    op: NumberOperator,
    theta: float,
    mode: str = EXACT,
    shots: int = 0,
    seed: int | None = None,
    precision_bits: int | None = None,
) -> CharFuncSample:
    """Estimate P(theta) from the two Hadamard-test circuits.

    In shot mode each circuit is measured ``shots`` times, so a point costs
    ``2*shots`` circuit executions.
    """
    if mode == EXACT and precision_bits:
        import gmpy2

        with gmpy2.context(precision=precision_bits):
            re = 2 * hadamard_test_probability_mp(prepared, op, theta, "real", precision_bits) - 1
            im = 2 * hadamard_test_probability_mp(prepared, op, theta, "imag", precision_bits) - 1
            return CharFuncSample(float(theta), gmpy2.mpc(re, im), EXACT, 0, seed)
    if mode == EXACT:
        re = 2 * hadamard_test_probability(prepared, op, theta, "real") - 1
        im = 2 * hadamard_test_probability(prepared, op, theta, "imag") - 1
        return CharFuncSample(float(theta), complex(re, im), EXACT, 0, seed)
    if mode != SHOTS:
        raise ValueError(f"unknown estimation mode {mode!r}")
    if shots < 1:
        raise ValueError("shot mode needs shots >= 1")
    rng = np.random.default_rng(seed)
    parts = []
    for part in ("real", "imag"):
        circuit = hadamard_test_circuit(prepared, op, theta, part)
        counts = sample_counts(circuit, [op.L], shots, rng)
        parts.append(2 * counts.get("0", 0) / shots - 1)
    return CharFuncSample(float(theta), complex(*parts), SHOTS, shots, seed)


def estimate_grid(
    prepared: PureState,
    op: NumberOperator,
    grid: SamplingGrid,
    mode: str = EXACT,
    shots: int = 0,
    seed: int = 0,
) -> list[CharFuncSample]:
    """One sample per grid angle; point i uses seed ``seed + i``."""
    return [
        estimate_point(prepared, op, theta, mode, shots, seed + i)
        for i, theta in enumerate(grid.angles)
    ]
