"""Classical post-processing of characteristic-function samples.

* Fourier reconstruction of P(n) from a uniform grid, including its aliasing
  behaviour below the sampling limit.
* Finite-difference moments  <N^n> = d^n P / d(i theta)^n at theta = 0,
  with Richardson extrapolation to raise the error order.
* Moment -> cumulant conversion and distribution distances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from qfcs.charfunc import (
    EXACT,
    CharFuncSample,
    SamplingGrid,
    estimate_point,
)

IMAG_RESIDUE_TOL = 1e-9
NEGATIVE_TOL = 1e-9


@dataclass
class Distribution:
    """Probabilities P(n) keyed by integer n.

    ``reconstructed`` marks Fourier estimates, which may carry small negative
    or aliased values and are not held to the non-negativity check.
    """

    probs: dict[int, float]
    reconstructed: bool = False
    imag_residue: float = 0.0

    def __post_init__(self):
        self.probs = {int(n): float(p) for n, p in sorted(self.probs.items())}
        if not self.reconstructed:
            bad = {n: p for n, p in self.probs.items() if p < -NEGATIVE_TOL}
            if bad:
                raise ValueError(f"negative probabilities {bad}")

    def __getitem__(self, n: int) -> float:
        return self.probs.get(n, 0.0)

    def __iter__(self):
        return iter(self.probs)

    def __len__(self):
        return len(self.probs)

    def items(self):
        return self.probs.items()

    def total(self) -> float:
        return math.fsum(self.probs.values())

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(n for n, p in self.probs.items() if p != 0.0)

    @property
    def max_value(self) -> int:
        return max(self.support, default=0)

    @property
    def even_support(self) -> bool:
        return all(n % 2 == 0 for n in self.support)

    def moment(self, power: int) -> float:
        return math.fsum(p * n**power for n, p in self.probs.items())

    def restrict(self, keep) -> "Distribution":
        keep = set(keep)
        return Distribution(
            {n: p for n, p in self.probs.items() if n in keep},
            reconstructed=self.reconstructed,
            imag_residue=self.imag_residue,
        )

    def normalized(self) -> "Distribution":
        """Clamp negative entries to zero and rescale to unit total."""
        clipped = {n: max(p, 0.0) for n, p in self.probs.items()}
        total = math.fsum(clipped.values())
        if total <= 0:
            raise ValueError("distribution has no positive weight")
        return Distribution({n: p / total for n, p in clipped.items()})


def trace_distance(p: Distribution, q: Distribution) -> float:
    """Half the L1 distance; missing keys count as zero."""
    keys = set(p) | set(q)
    return 0.5 * math.fsum(abs(p[n] - q[n]) for n in keys)


# -- Fourier reconstruction -----------------------------------------------


def _infer_grid(thetas: np.ndarray) -> SamplingGrid:
    k = len(thetas)
    for period in (2 * math.pi, math.pi):
        grid = SamplingGrid(k, period)
        if np.allclose(thetas, grid.angles, rtol=0, atol=1e-12):
            return grid
    raise ValueError(f"{k} sample angles do not form a uniform sampling grid")


def dft_reconstruct(
    samples: Sequence[CharFuncSample],
    n_range=None,
    grid: SamplingGrid | None = None,
) -> Distribution:
    """P(n) ~= (1/k) sum_i P(theta_i) exp(-i theta_i n).

    With k below the sampling limit the result is aliased:
    P_rec(n) = sum_j (-1)^(j k) P(n + j*s*k), where s is the grid stride
    (1 for the 2*pi grid, 2 for the pi grid).

    ``n_range`` defaults to the k values n = 0, s, ..., s*(k-1).  On a pi grid
    only even n can be resolved.
    """
    if not samples:
        raise ValueError("no samples")
    thetas = np.array([s.theta for s in samples])
    if grid is None:
        grid = _infer_grid(thetas)
    elif len(samples) != grid.k or not np.allclose(thetas, grid.angles, rtol=0, atol=1e-12):
        raise ValueError("samples do not match the sampling grid")
    if n_range is None:
        n_range = range(0, grid.stride * grid.k, grid.stride)
    n_values = np.array(list(n_range), dtype=np.int64)
    if grid.stride == 2 and np.any(n_values % 2):
        raise ValueError("odd n cannot be resolved on a pi-period grid")
    values = np.array([s.value for s in samples], dtype=np.complex128)
    phases = np.exp(-1j * np.outer(n_values, thetas))
    rec = phases @ values / grid.k
    residue = float(np.max(np.abs(rec.imag), initial=0.0))
    if all(s.mode == EXACT for s in samples) and residue > IMAG_RESIDUE_TOL:
        raise ValueError(f"reconstruction has imaginary residue {residue:.2e} in exact mode")
    return Distribution(
        dict(zip(n_values.tolist(), rec.real.tolist())),
        reconstructed=True,
        imag_residue=residue,
    )


def min_sampling_points(max_value: int, parity_even: bool) -> int:
    """Fewest grid points that resolve a distribution on 0..max_value.

    For even-only support the characteristic function is pi-periodic and only
    max_value/2 + 1 Fourier modes are present (sampled on a pi grid).
    """
    if max_value < 0:
        raise ValueError("max_value must be >= 0")
    return max_value // 2 + 1 if parity_even else max_value + 1


# -- finite-difference stencils -------------------------------------------


@dataclass(frozen=True)
class Stencil:
    """Finite-difference rule for d^order P / d(i theta)^order at 0.

    estimate = sum_j weights[j] * P(offsets[j] * h) / (i h)^order
    """

    order: int
    h: float
    weights: tuple[tuple[int, Fraction], ...]
    error_order: int = 2
    rounds: int = 0

    @classmethod
    def from_mapping(cls, order, h, weights: Mapping[int, Fraction], error_order=2, rounds=0):
        items = tuple(sorted(((int(o), Fraction(w)) for o, w in weights.items() if w != 0), reverse=True))
        return cls(order, h, items, error_order, rounds)

    @property
    def offsets(self) -> tuple[int, ...]:
        return tuple(o for o, _ in self.weights)

    @property
    def coefficients(self) -> tuple[complex, ...]:
        scale = (1j * self.h) ** self.order
        return tuple(float(w) / scale for _, w in self.weights)

    @property
    def angles(self) -> tuple[float, ...]:
        return tuple(o * self.h for o in self.offsets)

    def moment_condition(self, m: int) -> Fraction:
        """sum_j w_j * offset_j^m; equals 0 for m < order and order! at m = order."""
        return sum((w * o**m for o, w in self.weights), Fraction(0))

    def with_step(self, h: float) -> "Stencil":
        return Stencil(self.order, h, self.weights, self.error_order, self.rounds)

    def apply(self, values: Mapping[int, complex]):
        # sum the integer-weighted samples first; the (i h)^n division comes last
        bits = _mp_precision(values[o] for o in self.offsets)
        if bits is None:
            num = sum(w.numerator * values[o] / w.denominator for o, w in self.weights)
            return num / (1j * self.h) ** self.order
        import gmpy2

        # multiprecision samples: keep the cancellation-heavy sum at their precision
        with gmpy2.context(precision=bits):
            num = sum((w.numerator * values[o] / w.denominator for o, w in self.weights), gmpy2.mpc(0))
            return num / gmpy2.mpc(0, gmpy2.mpfr(self.h)) ** self.order


def _mp_precision(values):
    """Largest gmpy2 precision among ``values`` (None if all are plain numbers)."""
    bits = None
    for v in values:
        p = getattr(v, "precision", None)
        if p is None or isinstance(v, (int, float, complex, np.generic)):
            continue
        p = max(p) if isinstance(p, tuple) else p
        bits = p if bits is None else max(bits, p)
    return bits


_BASE_WEIGHTS = {
    1: {1: Fraction(1, 2), -1: Fraction(-1, 2)},
    2: {1: Fraction(1), 0: Fraction(-2), -1: Fraction(1)},
    3: {2: Fraction(1, 2), 1: Fraction(-1), -1: Fraction(1), -2: Fraction(-1, 2)},
}


def base_stencil(order: int, h: float) -> Stencil:
    """Central second-order-accurate stencils for orders 1-3.

    Higher orders are composed from the first-order difference with
    :func:`build_stencil`.
    """
    if h <= 0:
        raise ValueError("step h must be positive")
    if order < 1:
        raise ValueError("derivative order must be >= 1")
    if order in _BASE_WEIGHTS:
        return Stencil.from_mapping(order, h, _BASE_WEIGHTS[order])
    return build_stencil(order, base_stencil(order - 1, h))


def build_stencil(order: int, base: Stencil) -> Stencil:
    """Apply one more central first difference on top of ``base``."""
    if order != base.order + 1:
        raise ValueError(f"can only raise the order by one (base {base.order}, asked {order})")
    first = _BASE_WEIGHTS[1]
    out: dict[int, Fraction] = {}
    for o1, w1 in first.items():
        for o2, w2 in base.weights:
            out[o1 + o2] = out.get(o1 + o2, Fraction(0)) + w1 * w2
    return Stencil.from_mapping(order, base.h, out, error_order=2, rounds=base.rounds)


def richardson_combine(f1, f2, ratio, p: int):
    """(f1 - r f2) / (1 - r) with r = ratio**p.

    ``f1`` uses step x1 and ``f2`` step x2 with ratio = x1/x2; the leading
    x**p error term cancels.  Works on floats, complex numbers and Fractions.
    """
    if p < 1:
        raise ValueError("error order p must be >= 1")
    if not 0 < ratio < 1:
        raise ValueError(f"step ratio must lie in (0, 1), got {ratio}")
    r = ratio**p
    if r == 1:
        raise ZeroDivisionError("degenerate step ratio")
    return (f1 - r * f2) / (1 - r)


def richardson_stencil(stencil: Stencil, rounds: int = 1, ratio: Fraction = Fraction(1, 2)) -> Stencil:
    """Fold ``rounds`` Richardson steps into the stencil weights.

    Each round combines the stencil at step h with itself at step h/ratio.
    Central stencils have error expansions in even powers, so every round
    raises the error order by two.
    """
    ratio = Fraction(ratio)
    if ratio.numerator != 1:
        raise ValueError("stencil-level extrapolation needs ratio 1/m with integer m")
    m = ratio.denominator
    for _ in range(rounds):
        fine = dict(stencil.weights)
        # same rule at step m*h: offsets scale by m, the 1/(i h)^n prefactor by m^-n
        coarse = {o * m: w / m**stencil.order for o, w in stencil.weights}
        out = {
            o: richardson_combine(fine.get(o, Fraction(0)), coarse.get(o, Fraction(0)), ratio, stencil.error_order)
            for o in set(fine) | set(coarse)
        }
        stencil = Stencil.from_mapping(
            stencil.order, stencil.h, out, error_order=stencil.error_order + 2, rounds=stencil.rounds + 1
        )
    return stencil


def moment_stencil(order: int, h: float, rounds: int = 0) -> Stencil:
    return richardson_stencil(base_stencil(order, h), rounds)


def sample_stencil(
    prepared,
    op,
    stencil: Stencil,
    mode: str = EXACT,
    shots: int = 0,
    seed: int = 0,
    precision_bits: int | None = None,
) -> dict[int, CharFuncSample]:
    """Characteristic-function samples at every stencil offset (point j uses seed + j).

    With ``precision_bits`` the angles offset*h are formed in multiprecision so
    that they are exact multiples of the (double) step h.
    """
    out = {}
    for j, o in enumerate(sorted(stencil.offsets)):
        if precision_bits:
            import gmpy2

            with gmpy2.context(precision=precision_bits):
                theta = gmpy2.mpfr(o) * gmpy2.mpfr(stencil.h)
        else:
            theta = o * stencil.h
        out[o] = estimate_point(prepared, op, theta, mode, shots, seed + j, precision_bits)
    return out


def estimate_moments(samples_at_offsets: Mapping[int, object], stencil: Stencil, return_residue: bool = False):
    """Raw moment <N^order> from samples keyed by integer stencil offset.

    Values may be :class:`CharFuncSample` objects or plain complex numbers.
    With ``return_residue`` the discarded imaginary part is returned as well.
    """
    values = {}
    for o in stencil.offsets:
        if o not in samples_at_offsets:
            raise ValueError(f"missing sample at offset {o} (theta = {o * stencil.h:g})")
        s = samples_at_offsets[o]
        values[o] = s.value if isinstance(s, CharFuncSample) else s
    est = stencil.apply(values)
    if return_residue:
        return est.real, abs(est.imag)
    return est.real


# -- cumulants ------------------------------------------------------------


@dataclass(frozen=True)
class CumulantSet:
    """First three cumulants (mean, variance, third cumulant) and the raw moments."""

    mean: float
    variance: float
    skewness: float
    m1: float
    m2: float
    m3: float
    meta: dict = field(default_factory=dict, compare=False)

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.mean, self.variance, self.skewness)


def moments_to_cumulants(m1: float, m2: float, m3: float, **meta) -> CumulantSet:
    # third cumulant uses m1**3; a squared mean would not vanish for a point mass
    return CumulantSet(
        mean=m1,
        variance=m2 - m1**2,
        skewness=m3 - 3 * m2 * m1 + 2 * m1**3,
        m1=m1,
        m2=m2,
        m3=m3,
        meta=meta,
    )


def distribution_cumulants(dist: Distribution) -> tuple[float, float, float]:
    """Mean and second/third central moments computed directly from P(n)."""
    mean = dist.moment(1)
    c2 = math.fsum(p * (n - mean) ** 2 for n, p in dist.items())
    c3 = math.fsum(p * (n - mean) ** 3 for n, p in dist.items())
    return mean, c2, c3


def stencil_cumulants(
    prepared,
    op,
    h: float,
    rounds: int = 0,
    mode: str = EXACT,
    shots: int = 0,
    seed: int = 0,
    precision_bits: int | None = None,
) -> CumulantSet:
    """Cumulants from finite-difference moments of orders 1-3."""
    moments = []
    for order in (1, 2, 3):
        st = moment_stencil(order, h, rounds)
        samples = sample_stencil(prepared, op, st, mode, shots, seed + 1000 * order, precision_bits)
        moments.append(float(estimate_moments(samples, st)))
    return moments_to_cumulants(*moments, h=h, rounds=rounds)
