"""Ancilla-based removal of number sectors and inversion of its reweighting.

One ancilla per removed sector N_m::

    ancilla m: |1> -- H --o-------------- Rz(N_m t_m) -- H -- project |0>
    system   : ----------exp(-i N t_m)-------------------------------------

Post-selecting every ancilla on 0 multiplies the amplitudes of sector N_k by
prod_m (1/2 - 1/2 exp(-i (N_k - N_m) t_m)), up to the global phase
exp(-i N_m t_m / 2) contributed by Rz.  Targeted sectors vanish; the others
are reweighted by g_k = w_k / sum_j P(N_j) w_j with
w_k = prod_m sin^2((N_k - N_m) t_m / 2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from qfcs.charfunc import EXACT, SamplingGrid, estimate_grid
from qfcs.fcs import Distribution, dft_reconstruct
from qfcs.model import NumberOperator, exact_distribution
from qfcs.statevector import (
    H,
    DiagonalPhaseSpec,
    ProjectionError,
    PureState,
    append_qubits,
    apply_diagonal_phase,
    apply_one_qubit_gate,
    drop_qubit,
    project_qubit,
    rz,
)

ANNIHILATION_TOL = 1e-12


class FilterError(RuntimeError):
    """The filter leaves nothing behind (success probability ~ 0)."""


@dataclass(frozen=True)
class FilterSpec:
    targets: tuple[tuple[int, float], ...]
    center: int
    support: tuple[int, ...]

    def __post_init__(self):
        removed = [n for n, _ in self.targets]
        if len(set(removed)) != len(removed):
            raise ValueError(f"duplicate filter targets {removed}")
        for n, t in self.targets:
            if n not in self.support:
                raise ValueError(f"target {n} is not an attainable value {self.support}")
            if not t > 0:
                raise ValueError(f"filter time for target {n} must be positive, got {t}")

    @property
    def removed(self) -> tuple[int, ...]:
        return tuple(n for n, _ in self.targets)

    @property
    def surviving(self) -> tuple[int, ...]:
        return tuple(n for n in self.support if n not in self.removed)


@dataclass
class FilterOutcome:
    success_probability: float
    filtered_state: PureState
    g_factors: dict[int, float]
    attempts: int = 0
    stage_probabilities: list[float] = field(default_factory=list)


def schedule_times(center: int, targets, support) -> FilterSpec:
    """t_m = pi / |N_c - N_m|, or pi / |N_c' - N_m| when N_m is the center itself.

    N_c' is the attainable value closest to N_c (ties go to the smaller one).
    """
    support = tuple(sorted(int(n) for n in support))
    targets = [int(n) for n in targets]
    if center not in support:
        raise ValueError(f"center {center} is not an attainable value")
    if set(support) <= set(targets):
        raise FilterError("filter targets cover the whole support; nothing survives")
    others = [n for n in support if n != center]
    nearest = min(others, key=lambda n: (abs(n - center), n)) if others else None
    pairs = []
    for n in targets:
        ref = center if n != center else nearest
        pairs.append((n, math.pi / abs(ref - n)))
    return FilterSpec(tuple(pairs), center, support)


def sector_weights(values, spec: FilterSpec) -> np.ndarray:
    """w(n) = prod_m sin^2((n - N_m) t_m / 2) for an array of values n."""
    n = np.asarray(values, dtype=float)
    w = np.ones_like(n)
    for nm, tm in spec.targets:
        w = w * np.sin((n - nm) * tm / 2) ** 2
    return w


def success_probability(dist: Distribution, spec: FilterSpec) -> float:
    keys = list(dist.probs)
    w = sector_weights(keys, spec)
    return math.fsum(dist[n] * wn for n, wn in zip(keys, w))


def g_factors(dist: Distribution, spec: FilterSpec) -> dict[int, float]:
    """Per-sector reweighting P'(N_k) = g_k P(N_k); zero on removed sectors."""
    pf = success_probability(dist, spec)
    if pf < 1e-14:
        raise FilterError(f"filter annihilates the distribution (P_f = {pf:.2e})")
    keys = sorted(set(dist.probs) | set(spec.support))
    w = sector_weights(keys, spec)
    out = {n: float(wn / pf) for n, wn in zip(keys, w)}
    for n in spec.removed:
        out[n] = 0.0
    return out


def _filter_ancilla_stage(psi: PureState, op: NumberOperator, target: int, time: float, anc: int) -> PureState:
    psi = apply_one_qubit_gate(psi, anc, H)
    psi = apply_diagonal_phase(psi, DiagonalPhaseSpec(-time, op, control=anc))
    psi = apply_one_qubit_gate(psi, anc, rz(target * time))
    return apply_one_qubit_gate(psi, anc, H)


def apply_filter(
    state: PureState,
    op: NumberOperator,
    spec: FilterSpec,
    joint: bool = False,
    shots: int = 0,
    seed=None,
) -> FilterOutcome:
    """Run the filter circuit and post-select all ancillas on |0>.

    Ancillas are allocated one at a time and released after projection unless
    ``joint`` is set, in which case all are appended up front and projected at
    the end.  With ``shots > 0`` the number of circuit executions needed to
    collect ``shots`` accepted runs is drawn as well (rejection sampling).
    """
    if state.num_qubits != op.L:
        raise ValueError("filter input must span exactly the system qubits")
    L = op.L
    stage_probs = []
    try:
        if joint:
            m = len(spec.targets)
            psi = append_qubits(state, m, (1 << m) - 1)
            for i, (nm, tm) in enumerate(spec.targets):
                psi = _filter_ancilla_stage(psi, op, nm, tm, L + i)
            for i in range(m):
                p, psi = project_qubit(psi, L + i, 0)
                stage_probs.append(p)
            for i in reversed(range(m)):
                psi = drop_qubit(psi, L + i)
        else:
            psi = state
            for nm, tm in spec.targets:
                psi = append_qubits(psi, 1, 1)
                psi = _filter_ancilla_stage(psi, op, nm, tm, L)
                p, psi = project_qubit(psi, L, 0)
                stage_probs.append(p)
                psi = drop_qubit(psi, L)
    except ProjectionError as exc:
        raise FilterError(f"filter annihilates the state ({exc})") from exc
    pf = math.prod(stage_probs)
    if pf < ANNIHILATION_TOL:
        raise FilterError(f"filter annihilates the state (P_f = {pf:.2e})")

    g = g_factors(exact_distribution(state, op), spec)
    attempts = 0
    if shots:
        # each execution succeeds independently with probability P_f
        attempts = int(np.random.default_rng(seed).geometric(pf, size=shots).sum())
    return FilterOutcome(pf, psi, g, attempts, stage_probs)


def choose_reference(state: PureState, op: NumberOperator, sector: int) -> int:
    """Basis state with the largest weight in ``sector`` (ties -> smallest index)."""
    idx = op.sector(sector)
    if idx.size == 0:
        raise ValueError(f"sector {sector} is empty")
    probs = state.probabilities[idx]
    if probs.max() <= 0:
        raise ValueError(f"sector {sector} carries no weight")
    return int(idx[np.argmax(probs)])


def reconstruct_distribution(filtered_dist: Distribution, reference_probs) -> Distribution:
    """Undo the filter's reweighting: P(N_k) = P(i)/P'(i) * P'(N_k).

    ``reference_probs`` maps each surviving sector to the pair
    (P_unfiltered(i), P_filtered(i)) for one basis state i in that sector.
    Sectors without a reference pair (the removed ones) are left out.
    """
    out = {}
    for n, pair in reference_probs.items():
        p_orig, p_filt = pair
        if p_filt <= 0:
            raise ValueError(f"reference probability after filtering is zero in sector {n}")
        out[n] = p_orig / p_filt * filtered_dist[n]
    return Distribution(out, reconstructed=filtered_dist.reconstructed, imag_residue=filtered_dist.imag_residue)


def reference_pairs(original: PureState, filtered: PureState, op: NumberOperator, sectors) -> dict[int, tuple[float, float]]:
    """Exact (P(i), P'(i)) for the chosen reference state of every sector."""
    pairs = {}
    for n in sectors:
        i = choose_reference(original, op, n)
        pairs[n] = (float(original.probabilities[i]), float(filtered.probabilities[i]))
    return pairs


def _system_counts(state: PureState, op: NumberOperator, shots: int, rng) -> np.ndarray:
    """Histogram over system basis states from ``shots`` computational-basis measurements."""
    probs = state.probabilities
    return rng.multinomial(shots, probs / probs.sum())


def filtered_fcs(
    state: PureState,
    op: NumberOperator,
    spec: FilterSpec,
    grid: SamplingGrid,
    mode: str = EXACT,
    shots: int = 0,
    seed: int = 0,
):
    """Filter, sample the characteristic function, reconstruct and undo the reweighting.

    Returns ``(distribution, outcome)`` where ``distribution`` covers the
    surviving sectors only.  In shot mode the reference probabilities come from
    ``shots`` computational-basis measurements of the original and filtered
    states, and ``outcome.attempts`` counts every filter execution needed for
    the accepted runs (Hadamard tests plus reference measurements).
    """
    accepted = (2 * grid.k + 1) * shots if mode != EXACT else 0
    outcome = apply_filter(state, op, spec, shots=accepted, seed=seed)
    samples = estimate_grid(outcome.filtered_state, op, grid, mode, shots, seed + 1)
    surviving = list(spec.surviving)
    filtered_dist = dft_reconstruct(samples, n_range=surviving, grid=grid)
    if mode == EXACT:
        pairs = reference_pairs(state, outcome.filtered_state, op, surviving)
    else:
        rng = np.random.default_rng(seed + 2)
        before = _system_counts(state, op, shots, rng)
        after = _system_counts(outcome.filtered_state, op, shots, rng)
        pairs = {}
        for n in surviving:
            idx = op.sector(n)
            i = int(idx[np.argmax(before[idx])])
            if before[i] == 0:
                continue  # sector never observed; no reference available
            pairs[n] = (before[i] / shots, after[i] / shots)
        pairs = {n: pr for n, pr in pairs.items() if pr[1] > 0}
    return reconstruct_distribution(filtered_dist, pairs), outcome
