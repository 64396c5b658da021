import math

import numpy as np
import pytest

from qfcs.charfunc import (
    CharFuncSample,
    SamplingGrid,
    estimate_grid,
    estimate_point,
    hadamard_test_probability,
    hadamard_test_probability_mp,
)
from qfcs.model import domain_wall_operator, exact_char_func, particle_number_operator
from qfcs.statevector import init_basis_state, random_state


def test_grid_angles():
    grid = SamplingGrid(4)
    assert np.allclose(grid.angles, [-math.pi, -math.pi / 2, 0, math.pi / 2])
    assert grid.spacing == pytest.approx(math.pi / 2)
    assert np.all(grid.angles >= -math.pi) and np.all(grid.angles < math.pi)
    assert np.allclose(np.diff(SamplingGrid(13).angles), 2 * math.pi / 13)
    assert SamplingGrid(1).angles.tolist() == [-math.pi]


def test_half_period_grid():
    grid = SamplingGrid(5, math.pi)
    assert grid.stride == 2
    assert np.allclose(grid.angles, -math.pi / 2 + math.pi * np.arange(5) / 5)
    assert SamplingGrid.for_operator(5, domain_wall_operator(4)).stride == 2
    assert SamplingGrid.for_operator(5, domain_wall_operator(4), parity_aware=False).stride == 1
    assert SamplingGrid.for_operator(5, particle_number_operator(4)).stride == 1
    with pytest.raises(ValueError):
        SamplingGrid(0)
    with pytest.raises(ValueError):
        SamplingGrid(3, 1.0)


def test_theta_zero_gives_one(rng):
    op = domain_wall_operator(4)
    psi = random_state(4, rng)
    assert hadamard_test_probability(psi, op, 0.0, "real") == pytest.approx(1.0, abs=1e-14)
    s = estimate_point(psi, op, 0.0)
    assert abs(s.value - 1) < 1e-12


def test_zero_sector_state_accrues_no_phase():
    op = domain_wall_operator(6)
    psi = init_basis_state(6, 0)
    for theta in np.linspace(-3, 3, 7):
        s = estimate_point(psi, op, theta)
        assert abs(s.value.real - 1) < 1e-12 and abs(s.value.imag) < 1e-12


def test_imaginary_sign_convention():
    # single sector n=2: P(theta) = exp(2i theta), Im > 0 for small theta > 0
    op = domain_wall_operator(4)
    psi = init_basis_state(4, 0b0011)
    p0 = hadamard_test_probability(psi, op, 0.3, "imag")
    assert 2 * p0 - 1 == pytest.approx(math.sin(0.6), abs=1e-14)


@pytest.mark.parametrize("make_op", [domain_wall_operator, particle_number_operator])
def test_hadamard_matches_oracle(rng, make_op):
    for L in (2, 4, 6):
        op = make_op(L)
        for _ in range(5):
            psi = random_state(L, rng)
            theta = rng.uniform(-math.pi, math.pi)
            ref = exact_char_func(psi, op, theta)
            assert abs(2 * hadamard_test_probability(psi, op, theta, "real") - 1 - ref.real) < 1e-12
            assert abs(2 * hadamard_test_probability(psi, op, theta, "imag") - 1 - ref.imag) < 1e-12


def test_bad_part_rejected():
    with pytest.raises(ValueError):
        hadamard_test_probability(init_basis_state(2, 0), domain_wall_operator(2), 0.1, "both")


def test_exact_mode_properties(rng):
    op = domain_wall_operator(6)
    psi = random_state(6, rng)
    for theta in rng.uniform(-math.pi, math.pi, 10):
        v = estimate_point(psi, op, theta).value
        assert abs(v) <= 1 + 1e-12
        assert abs(v - estimate_point(psi, op, theta + 2 * math.pi).value) < 1e-12
        # even support: pi-periodic
        assert abs(v - estimate_point(psi, op, theta + math.pi).value) < 1e-12


def test_shot_mode_deterministic(rng):
    op = domain_wall_operator(4)
    psi = random_state(4, rng)
    a = estimate_point(psi, op, 0.7, "shots", 500, seed=3)
    b = estimate_point(psi, op, 0.7, "shots", 500, seed=3)
    assert a == b and a.shots == 500 and a.mode == "shots"
    assert a != estimate_point(psi, op, 0.7, "shots", 500, seed=4)
    assert abs(a.value) <= 1 + 4 / math.sqrt(500) * math.sqrt(2)


def test_shot_mode_argument_errors():
    op = domain_wall_operator(2)
    psi = init_basis_state(2, 0)
    with pytest.raises(ValueError):
        estimate_point(psi, op, 0.1, "shots", 0)
    with pytest.raises(ValueError):
        estimate_point(psi, op, 0.1, "sampled", 10)


def test_shot_error_scaling(rng):
    op = domain_wall_operator(4)
    psi = random_state(4, rng)
    ref = exact_char_func(psi, op, 1.0)
    for shots in (100, 1000, 10_000):
        errs = [abs(estimate_point(psi, op, 1.0, "shots", shots, seed=s).value - ref) for s in range(20)]
        assert np.median(errs) * math.sqrt(shots) <= 3


def test_grid_single_point():
    op = domain_wall_operator(4)
    (s,) = estimate_grid(init_basis_state(4, 0), op, SamplingGrid(1))
    assert s.theta == -math.pi and abs(s.value - 1) < 1e-12


def test_grid_conjugate_symmetry(rng):
    op = particle_number_operator(5)
    psi = random_state(5, rng)
    samples = estimate_grid(psi, op, SamplingGrid(8))
    by_theta = {round(s.theta, 12): s.value for s in samples}
    for s in samples:
        mirror = round(-s.theta, 12)
        if mirror in by_theta:
            assert abs(by_theta[mirror] - np.conj(s.value)) < 1e-12


def test_grid_seeds_are_offsets():
    op = domain_wall_operator(2)
    samples = estimate_grid(init_basis_state(2, 0), op, SamplingGrid(3), "shots", 10, seed=40)
    assert [s.seed for s in samples] == [40, 41, 42]
    assert all(isinstance(s, CharFuncSample) for s in samples)


def test_reference_grid_size(reference):
    _, state, op, _ = reference
    samples = estimate_grid(state, op, SamplingGrid(13))
    assert len(samples) == 13
    for s in samples:
        assert abs(s.value - exact_char_func(state, op, s.theta)) < 1e-12


def test_multiprecision_matches_double(rng):
    import gmpy2

    op = domain_wall_operator(4)
    psi = random_state(4, rng)
    for part in ("real", "imag"):
        mp = hadamard_test_probability_mp(psi, op, 0.37, part, 128)
        assert isinstance(mp, type(gmpy2.mpfr(0)))
        assert abs(float(mp) - hadamard_test_probability(psi, op, 0.37, part)) < 1e-14
    s = estimate_point(psi, op, 0.37, precision_bits=128)
    assert abs(complex(s.value) - exact_char_func(psi, op, 0.37)) < 1e-14
