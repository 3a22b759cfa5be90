import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from conftest import (
    kernel_from_pairs,
    orthonormal_gaussian_modes,
    random_smooth_kernel,
    separable_kernel,
    symmetric_grid,
    two_term_kernel,
)
from tmfc.errors import ResolutionError
from tmfc.schmidt import RotationAngles, decompose
from tmfc.states import (
    TwoBandState,
    evolve,
    fidelity,
    gaussian_input,
    ideal_qubit_output,
    project,
    state_from_pair,
)


def make_angles(magnitudes, phase=0.0):
    mags = np.asarray(magnitudes, dtype=float)
    return RotationAngles(
        rotations=mags * np.exp(1j * phase), magnitudes=mags, common_phase=phase
    )


def random_state(rng, dec, grid):
    """Random normalized two-band state spanning modes and residual space."""
    amp3 = rng.normal(size=grid.n3) + 1j * rng.normal(size=grid.n3)
    amp4 = rng.normal(size=grid.n4) + 1j * rng.normal(size=grid.n4)
    state = TwoBandState(amp3=amp3, amp4=amp4, grid=grid)
    scale = math.sqrt(state.norm_sq())
    return TwoBandState(amp3=amp3 / scale, amp4=amp4 / scale, grid=grid)


class TestGaussianInput:
    def test_grid_norm_is_one(self):
        grid = symmetric_grid(64)
        state = gaussian_input(grid, 3, 1.6e15, 8e12)
        assert state.norm_sq() == pytest.approx(1.0, abs=1e-10)
        assert np.all(state.amp4 == 0)

    def test_continuum_norm_via_quadrature(self):
        # The closed-form amplitude integrates to 1 before renormalization.
        grid = symmetric_grid(256)
        sigma = 8e12
        omega = grid.omega(3)
        amp = (2.0 / (math.pi * sigma**2)) ** 0.25 * np.exp(-((omega - 1.6e15) ** 2) / sigma**2)
        integral = float(np.sum(grid.weights(3) * amp**2))
        assert integral == pytest.approx(1.0, abs=1e-6)

    def test_shifted_overlap_matches_analytic(self):
        grid = symmetric_grid(512, half=6e13)
        sigma = 5e12
        a = gaussian_input(grid, 3, 1.6e15, sigma)
        b = gaussian_input(grid, 3, 1.6e15 + 3 * sigma, sigma)
        overlap = np.sum(grid.weights(3) * a.amp3.conj() * b.amp3)
        assert abs(overlap) == pytest.approx(math.exp(-4.5), abs=1e-6)

    def test_too_narrow_raises_resolution_error(self):
        grid = symmetric_grid(32)
        with pytest.raises(ResolutionError):
            gaussian_input(grid, 3, 1.6e15, grid.spacing(3) / 10)

    def test_center_outside_band_rejected(self):
        grid = symmetric_grid(32)
        with pytest.raises(ValueError):
            gaussian_input(grid, 3, 2.4e15, 8e12)


class TestProject:
    def test_mode_projects_to_unit_coefficient(self):
        grid = symmetric_grid(48)
        kernel = two_term_kernel(grid)
        dec = decompose(kernel)
        state = state_from_pair(dec, 1.0, 0.0)
        co = project(state, dec)
        assert co.coeff3[0] == pytest.approx(1.0, abs=1e-8)
        assert abs(co.coeff3[1]) < 1e-8
        assert co.residual3 == pytest.approx(0.0, abs=1e-8)
        assert co.residual4 == pytest.approx(0.0, abs=1e-8)

    def test_orthogonal_state_is_pure_residual(self):
        grid = symmetric_grid(48)
        modes3 = orthonormal_gaussian_modes(grid, 3, 3)
        modes4 = orthonormal_gaussian_modes(grid, 4, 3)
        kernel = kernel_from_pairs(grid, [0.6, 0.4], modes3[:2], modes4[:2])
        dec = decompose(kernel)
        state = TwoBandState(amp3=modes3[2], amp4=np.zeros(grid.n4, dtype=complex), grid=grid)
        co = project(state, dec)
        assert np.max(np.abs(co.coeff3)) < 1e-8
        assert co.residual3 == pytest.approx(1.0, abs=1e-8)


class TestEvolve:
    def test_zero_angles_identity_bitwise(self):
        grid = symmetric_grid(48)
        kernel = two_term_kernel(grid)
        dec = decompose(kernel)
        state = gaussian_input(grid, 3, 1.6e15, 9e12)
        out = evolve(state, dec, make_angles([0.0, 0.0]))
        assert np.array_equal(out.amp3, state.amp3)
        assert np.array_equal(out.amp4, state.amp4)

    def test_full_conversion_gives_minus_i_partner(self):
        grid = symmetric_grid(48)
        kernel = separable_kernel(grid)
        dec = decompose(kernel)
        state = state_from_pair(dec, 1.0, 0.0)
        out = evolve(state, dec, make_angles([math.pi / 2], phase=0.0))
        expected = state_from_pair(dec, 0.0, -1.0j)
        assert np.max(np.abs(out.amp3)) < 1e-12
        assert np.max(np.abs(out.amp4 - expected.amp4)) < 1e-12

    def test_matrix_exponential_oracle_rank2(self):
        # Dense expm of the block two-level Hamiltonian, evolved pairwise.
        grid = symmetric_grid(48)
        kernel = two_term_kernel(grid, weights=(0.8, 0.2))
        dec = decompose(kernel)
        phase = 0.7
        angles = make_angles([0.9, 0.45], phase=phase)
        rng = np.random.default_rng(5)
        state = random_state(rng, dec, grid)
        out = evolve(state, dec, angles)

        co_in = project(state, dec)
        co_out = project(out, dec)
        for j in range(2):
            block = angles.magnitudes[j] * np.array(
                [[0.0, np.exp(-1j * phase)], [np.exp(1j * phase), 0.0]]
            )
            unitary = expm(-1j * block)
            expected = unitary @ np.array([co_in.coeff3[j], co_in.coeff4[j]])
            got = np.array([co_out.coeff3[j], co_out.coeff4[j]])
            assert np.max(np.abs(got - expected)) < 1e-8

    def test_matrix_exponential_oracle_rank3_random_states(self):
        grid = symmetric_grid(40)
        rng = np.random.default_rng(42)
        kernel = random_smooth_kernel(rng, grid, rank=3)
        dec = decompose(kernel)
        phase = -1.3
        angles = make_angles(rng.uniform(0.1, 2.5, size=dec.rank), phase=phase)
        rank = dec.rank
        block = np.zeros((2 * rank, 2 * rank), dtype=complex)
        for j in range(rank):
            block[2 * j, 2 * j + 1] = angles.magnitudes[j] * np.exp(-1j * phase)
            block[2 * j + 1, 2 * j] = angles.magnitudes[j] * np.exp(1j * phase)
        unitary = expm(-1j * block)
        for _ in range(10):
            state = random_state(rng, dec, grid)
            out = evolve(state, dec, angles)
            co_in = project(state, dec)
            co_out = project(out, dec)
            stacked_in = np.ravel(np.column_stack([co_in.coeff3, co_in.coeff4]))
            stacked_out = np.ravel(np.column_stack([co_out.coeff3, co_out.coeff4]))
            assert np.max(np.abs(stacked_out - unitary @ stacked_in)) < 1e-8

    def test_residual_passes_through_unchanged(self):
        grid = symmetric_grid(48)
        modes3 = orthonormal_gaussian_modes(grid, 3, 3)
        modes4 = orthonormal_gaussian_modes(grid, 4, 3)
        kernel = kernel_from_pairs(grid, [0.6, 0.4], modes3[:2], modes4[:2])
        dec = decompose(kernel)
        outside = TwoBandState(amp3=modes3[2], amp4=np.zeros(grid.n4, dtype=complex), grid=grid)
        out = evolve(outside, dec, make_angles([1.1, 0.3]))
        assert np.max(np.abs(out.amp3 - outside.amp3)) < 1e-12
        assert np.max(np.abs(out.amp4)) < 1e-12

    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), theta=st.floats(0.0, 6.0), phase=st.floats(-3.0, 3.0))
    def test_unitarity(self, seed, theta, phase):
        grid = symmetric_grid(32)
        rng = np.random.default_rng(seed)
        kernel = random_smooth_kernel(rng, grid, rank=2)
        dec = decompose(kernel)
        angles = make_angles([theta, 0.5 * theta], phase=phase)
        state = random_state(rng, dec, grid)
        out = evolve(state, dec, angles)
        assert out.norm_sq() == pytest.approx(state.norm_sq(), abs=1e-10)

    @settings(max_examples=15, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1))
    def test_linearity(self, seed):
        grid = symmetric_grid(32)
        rng = np.random.default_rng(seed)
        kernel = random_smooth_kernel(rng, grid, rank=2)
        dec = decompose(kernel)
        angles = make_angles([0.8, 0.2], phase=0.3)
        s = random_state(rng, dec, grid)
        t = random_state(rng, dec, grid)
        alpha, beta = 0.3 - 0.1j, 0.7 + 0.2j
        combined = TwoBandState(
            amp3=alpha * s.amp3 + beta * t.amp3,
            amp4=alpha * s.amp4 + beta * t.amp4,
            grid=grid,
        )
        lhs = evolve(combined, dec, angles)
        es = evolve(s, dec, angles)
        et = evolve(t, dec, angles)
        assert np.max(np.abs(lhs.amp3 - (alpha * es.amp3 + beta * et.amp3))) < 1e-10
        assert np.max(np.abs(lhs.amp4 - (alpha * es.amp4 + beta * et.amp4))) < 1e-10

    def test_pair_blocks_do_not_mix(self):
        grid = symmetric_grid(40)
        kernel = two_term_kernel(grid, weights=(0.7, 0.3))
        dec = decompose(kernel)
        state = state_from_pair(dec, 0.6, 0.8j, pair=1)
        out = evolve(state, dec, make_angles([1.0, 0.4], phase=0.2))
        co = project(out, dec)
        assert abs(co.coeff3[0]) < 1e-10
        assert abs(co.coeff4[0]) < 1e-10


class TestIdealQubitOutput:
    def test_identity_at_zero_angle(self):
        assert ideal_qubit_output((1.0, 0.0), 0.0, 0.0) == (1.0 + 0.0j, 0.0 + 0.0j)

    def test_quarter_rotation(self):
        x, y = ideal_qubit_output((1.0, 0.0), math.pi / 4, 0.0)
        assert x == pytest.approx(math.cos(math.pi / 4), abs=1e-15)
        assert y == pytest.approx(-1j * math.sin(math.pi / 4), abs=1e-15)

    def test_two_half_rotations_negate(self):
        xy = ideal_qubit_output((1.0, 0.0), math.pi / 2, 0.0)
        x, y = ideal_qubit_output(xy, math.pi / 2, 0.0)
        assert x == pytest.approx(-1.0, abs=1e-15)
        assert abs(y) < 1e-15

    def test_rejects_unnormalized(self):
        with pytest.raises(ValueError):
            ideal_qubit_output((1.0, 1.0), 0.3, 0.0)


class TestFidelity:
    def test_exact_ideal_state_scores_one(self):
        grid = symmetric_grid(48)
        kernel = two_term_kernel(grid)
        dec = decompose(kernel)
        xy = ideal_qubit_output((1.0, 0.0), 0.9, 0.4)
        state = state_from_pair(dec, xy[0], xy[1])
        assert fidelity(state, dec, xy) == pytest.approx(1.0, abs=1e-10)

    def test_orthogonal_output_scores_zero(self):
        grid = symmetric_grid(48)
        kernel = two_term_kernel(grid)
        dec = decompose(kernel)
        state = state_from_pair(dec, 1.0, 0.0, pair=1)
        assert fidelity(state, dec, (1.0, 0.0)) == pytest.approx(0.0, abs=1e-12)

    def test_single_pair_gaussian_input_perfect_for_any_angle(self):
        # separable kernel whose fundamental band-3 mode is an exact Gaussian
        grid = symmetric_grid(64)
        width = 6e12
        kernel = separable_kernel(grid, width3=width)
        dec = decompose(kernel)
        center = 0.5 * (grid.min3 + grid.max3)
        state = gaussian_input(grid, 3, center, width * math.sqrt(2.0))
        for theta in (0.0, math.pi / 8, math.pi / 4, math.pi / 2):
            angles = make_angles([theta], phase=0.0)
            out = evolve(state, dec, angles)
            ideal = ideal_qubit_output((1.0, 0.0), theta, 0.0)
            assert fidelity(out, dec, ideal) == pytest.approx(1.0, abs=1e-8)

    @settings(max_examples=20, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), theta=st.floats(0.0, 3.0))
    def test_bounds(self, seed, theta):
        grid = symmetric_grid(32)
        rng = np.random.default_rng(seed)
        kernel = random_smooth_kernel(rng, grid, rank=2)
        dec = decompose(kernel)
        state = random_state(rng, dec, grid)
        out = evolve(state, dec, make_angles([theta, 0.3], phase=0.1))
        xy = ideal_qubit_output((1.0, 0.0), theta, 0.1)
        value = fidelity(out, dec, xy)
        assert 0.0 <= value <= 1.0
