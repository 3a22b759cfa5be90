import math

import numpy as np
import pytest

from conftest import paper_context, separable_kernel, symmetric_grid, two_term_kernel, vacuum_context
from tmfc.errors import BracketError
from tmfc.gates import GateTarget, gate_deviation, mixing_angle_at_power, solve_gate
from tmfc.pipeline import prepare
from tmfc.schmidt import RotationAngles, decompose
from tmfc.states import TwoBandState, evolve, gaussian_input, project, state_from_pair


def make_angles(theta, phase=0.0):
    mags = np.asarray([theta], dtype=float)
    return RotationAngles(rotations=mags * np.exp(1j * phase), magnitudes=mags, common_phase=phase)


class TestGateTarget:
    def test_target_angles_are_odd_multiples(self):
        assert GateTarget("X", 0).target_angle == pytest.approx(math.pi / 2)
        assert GateTarget("Y", 2).target_angle == pytest.approx(5 * math.pi / 2)

    def test_phase_selection(self):
        assert GateTarget("X").phase_required == 0.0
        assert GateTarget("Y").phase_required == pytest.approx(math.pi / 2)
        assert GateTarget("Z-composed").phase_required == 0.0

    def test_rejects_unknown_kind(self):
        with pytest.raises(ValueError):
            GateTarget("H")


class TestMixingAngle:
    def test_zero_power_zero_angle(self):
        prepared = prepare(paper_context(points=48, nodes=129))
        assert mixing_angle_at_power(0.0, prepared) == 0.0

    def test_square_root_scaling_exact(self):
        prepared = prepare(paper_context(points=48, nodes=129))
        base = mixing_angle_at_power(40e-6, prepared)
        assert mixing_angle_at_power(160e-6, prepared) == 2 * base

    def test_monotone_in_power(self):
        prepared = prepare(paper_context(points=48, nodes=129))
        powers = np.linspace(1e-6, 1e-3, 9)
        angles = [mixing_angle_at_power(p, prepared) for p in powers]
        assert all(a < b for a, b in zip(angles, angles[1:]))


class TestSolveGate:
    def test_power_solution_closed_form(self):
        context = paper_context(points=48, nodes=129)
        prepared = prepare(context)
        p_ref = context.pumps.power1
        theta_ref = prepared.fundamental_angle()
        target = GateTarget("X", 0)
        expected = p_ref * (target.target_angle / theta_ref) ** 2
        result = solve_gate(target, "P1", (p_ref / 10, expected * 4), 1e-10, context)
        assert result.value == pytest.approx(expected, rel=1e-10)
        assert result.deviation <= 1e-10

    def test_closed_form_agrees_with_bisection(self):
        context = paper_context(points=48, nodes=129)
        prepared = prepare(context)
        p_ref = context.pumps.power1
        target = GateTarget("X", 0)
        bracket = (p_ref / 10, p_ref * 100)
        fast = solve_gate(target, "P1", bracket, 1e-9, context)
        slow = solve_gate(target, "P1", bracket, 1e-9, context, method="bisect")
        theta_fast = mixing_angle_at_power(fast.value, prepared)
        theta_slow = mixing_angle_at_power(slow.value, prepared)
        assert abs(theta_fast - theta_slow) <= 2e-9

    def test_bracket_must_straddle(self):
        context = paper_context(points=48, nodes=129)
        with pytest.raises(BracketError):
            solve_gate(GateTarget("X", 0), "P1", (1e-9, 2e-9), 1e-9, context)

    def test_length_solve_linear_on_dispersionless_kernel(self):
        # dk = 0 everywhere: the kernel shape is length-independent, so the
        # fundamental angle grows linearly with L and the root is analytic.
        from dataclasses import replace

        from tmfc.conversion import WaveguideSpec

        context = vacuum_context(points=40)
        theta_at_unit_gamma = prepare(context).fundamental_angle()
        # put the n=0 solution at exactly twice the reference length
        gamma = (math.pi / 4) / theta_at_unit_gamma
        wg = WaveguideSpec(
            length=context.waveguide.length,
            gamma=gamma,
            dispersion=context.waveguide.dispersion,
        )
        context = replace(context, waveguide=wg)
        length_ref = context.waveguide.length
        target = GateTarget("X", 0)
        expected = 2.0 * length_ref
        result = solve_gate(target, "L", (length_ref * 1e-3, length_ref * 1e3), 1e-9, context)
        achieved = prepare(context.with_length(result.value)).fundamental_angle()
        assert abs(achieved - target.target_angle) <= 1e-9
        assert result.value == pytest.approx(expected, rel=1e-6)


class TestGateDeviation:
    def test_solved_x_gate_is_exact_on_single_pair(self):
        grid = symmetric_grid(48)
        kernel = separable_kernel(grid)
        dec = decompose(kernel)
        state = state_from_pair(dec, 1.0, 0.0)
        deviation = gate_deviation(state, dec, make_angles(math.pi / 2, 0.0), GateTarget("X", 0))
        assert deviation <= 1e-8

    def test_detuned_angle_deviation_value(self):
        # overlap^2 = sin^2(theta) so the deviation is cos^2(theta):
        # at theta = pi/2 + 0.1 that is sin^2(0.1), evaluated independently.
        grid = symmetric_grid(48)
        kernel = separable_kernel(grid)
        dec = decompose(kernel)
        state = state_from_pair(dec, 1.0, 0.0)
        deviation = gate_deviation(
            state, dec, make_angles(math.pi / 2 + 0.1, 0.0), GateTarget("X", 0)
        )
        assert deviation == pytest.approx(0.009966711079379184, abs=1e-8)

    def test_z_composition_matches_pauli_z(self):
        grid = symmetric_grid(48)
        kernel = two_term_kernel(grid)
        dec = decompose(kernel)
        # input with both components so Z is distinguishable up to phase
        state = state_from_pair(dec, 0.8, 0.6j)
        passes = [make_angles(math.pi / 2, 0.0), make_angles(math.pi / 2, math.pi / 2)]
        deviation = gate_deviation(state, dec, passes, GateTarget("Z-composed", 0))
        assert deviation <= 1e-8

    def test_phase_selects_x_or_y(self):
        # with both quadratures populated, switching the pump phase by pi/2
        # swaps which Pauli the pass realizes
        grid = symmetric_grid(48)
        kernel = separable_kernel(grid)
        dec = decompose(kernel)
        plus = state_from_pair(dec, 1 / math.sqrt(2), 1 / math.sqrt(2))
        x_pass = make_angles(math.pi / 2, 0.0)
        y_pass = make_angles(math.pi / 2, math.pi / 2)
        assert gate_deviation(plus, dec, x_pass, GateTarget("X")) <= 1e-10
        assert gate_deviation(plus, dec, y_pass, GateTarget("X")) >= 0.99
        assert gate_deviation(plus, dec, y_pass, GateTarget("Y")) <= 1e-10
        assert gate_deviation(plus, dec, x_pass, GateTarget("Y")) >= 0.99

    def test_double_x_returns_to_input_ray(self):
        grid = symmetric_grid(48)
        kernel = separable_kernel(grid)
        dec = decompose(kernel)
        state = state_from_pair(dec, 0.6, 0.8)
        x_pass = make_angles(math.pi / 2, 0.0)
        out = evolve(evolve(state, dec, x_pass), dec, x_pass)
        co_in = project(state, dec)
        co_out = project(out, dec)
        vec_in = np.array([co_in.coeff3[0], co_in.coeff4[0]])
        vec_out = np.array([co_out.coeff3[0], co_out.coeff4[0]])
        overlap = abs(np.vdot(vec_in, vec_out)) ** 2
        assert overlap == pytest.approx(1.0, abs=1e-10)

    def test_empty_pair_content_scores_one(self):
        grid = symmetric_grid(48)
        kernel = two_term_kernel(grid)
        dec = decompose(kernel)
        zero = TwoBandState(
            amp3=np.zeros(grid.n3, dtype=complex),
            amp4=np.zeros(grid.n4, dtype=complex),
            grid=grid,
        )
        assert gate_deviation(zero, dec, make_angles(1.0), GateTarget("X")) == 1.0

    def test_gaussian_probe_on_paper_kernel_at_solution(self):
        context = paper_context(points=64, nodes=257)
        prepared = prepare(context)
        result = solve_gate(
            GateTarget("X", 0), "P1", (context.pumps.power1, context.pumps.power1 * 100), 1e-10, context
        )
        pumps = context.pumps.with_power(power1=result.value).with_phase(0.0)
        angles = prepared.angles(pumps)
        center = prepared.mode_centroid(band=3)
        probe = gaussian_input(context.grid, 3, center, 8e12)
        deviation = gate_deviation(probe, prepared.decomposition, angles, GateTarget("X", 0))
        assert deviation <= 1e-8
