"""Null-coordinate solver tests: the truncated second fundamental form, the
Duhamel fixed-point map and its invariants, the characteristic-lattice
cross-check, and Cartesian reconstruction.

Synthetic low-amplitude trigonometric waves keep these fast; the full
Brownian-pipeline experiments live in the acceptance suite.
"""

import math

import numpy as np
import pytest

from wavemaps.randomdata import LinearWaves
from wavemaps.solver import (
    SolverConfig,
    WaveMapState,
    characteristic_march,
    hamiltonian_energy,
    linear_state,
    null_to_cartesian,
    picard_map,
    second_form_contraction,
    solve_picard,
    zero_state,
)
from wavemaps.spectral import Field1D, Grid1D, cutoff_chi, spectral_derivative

SHIFT = np.array([0.0, 0.0, 1.0])


def synthetic_waves(n: int, amp: float = 0.05) -> LinearWaves:
    grid = Grid1D(n, 2 * math.pi)
    x = grid.points
    pp = np.stack([amp * np.sin((j + 1) * x) for j in range(3)])
    pm = np.stack([0.8 * amp * (np.cos((j + 1) * x) - 1.0) for j in range(3)])
    return LinearWaves(grid, pp, pm, 1.0)


class TestSecondForm:
    def test_orthogonal_arguments(self):
        zeta = np.zeros(3)
        X = np.array([1.0, 0.0, 0.0])
        Y = np.array([0.0, 1.0, 0.0])
        assert np.all(second_form_contraction(zeta, X, Y, SHIFT) == 0.0)

    def test_unit_sphere_value(self):
        zeta = np.zeros(3)
        X = np.array([1.0, 0.0, 0.0])
        out = second_form_contraction(zeta, X, X, SHIFT)
        assert np.abs(out - SHIFT).max() < 1e-14

    def test_vanishes_outside_extension(self):
        zeta = np.array([0.0, 0.0, 2.0])  # |zeta + shift| = 3
        X = np.array([1.0, 0.0, 0.0])
        assert np.all(second_form_contraction(zeta, X, X, SHIFT) == 0.0)


class TestConfig:
    def test_parameter_guards(self):
        with pytest.raises(ValueError):
            SolverConfig(s=0.6)
        with pytest.raises(ValueError):
            SolverConfig(r=0.8)
        with pytest.raises(ValueError):
            SolverConfig(tau=1.5)
        with pytest.raises(ValueError):
            SolverConfig(picard_tol=0.0)

    def test_sigma(self):
        assert SolverConfig(delta=0.005).sigma == 0.5


class TestPicard:
    def test_zero_data_zero_solution(self):
        grid = Grid1D(128, 2 * math.pi)
        waves = LinearWaves(grid, np.zeros((3, 128)), np.zeros((3, 128)), 1.0)
        state, diag = solve_picard(waves, SolverConfig(grid_points=128), SHIFT)
        assert diag.iterations == 1
        assert np.all(state.values == 0.0)

    def test_unidirectional_data_stays_linear(self):
        # a pure right-mover has d_v phi = 0, so the null form vanishes and
        # one Picard application returns the linear evolution exactly
        grid = Grid1D(256, 2 * math.pi)
        x = grid.points
        pp = np.stack([0.1 * np.sin((j + 2) * x) for j in range(3)])
        waves = LinearWaves(grid, pp, np.zeros((3, 256)), 1.0)
        cfg = SolverConfig(grid_points=256, tau=0.5)
        lin = linear_state(waves, SHIFT)
        out = picard_map(lin, waves, cfg)
        assert out.sup_difference(lin) <= 1e-13

    def test_fixed_point_reproduced(self):
        cfg = SolverConfig(grid_points=256, tau=0.5)
        waves = synthetic_waves(256)
        state, diag = solve_picard(waves, cfg, SHIFT)
        assert diag.converged
        again = picard_map(state, waves, cfg)
        assert state.sup_difference(again) <= cfg.picard_tol

    def test_initial_guess_independence(self):
        cfg = SolverConfig(grid_points=256, tau=0.5)
        waves = synthetic_waves(256)
        a, _ = solve_picard(waves, cfg, SHIFT)
        b, _ = solve_picard(waves, cfg, SHIFT,
                            initial=zero_state(waves, SHIFT))
        assert a.sup_difference(b) <= 10.0 * cfg.picard_tol

    def test_contraction_ratio_small_data(self):
        cfg = SolverConfig(grid_points=256, tau=0.5)
        _, diag = solve_picard(synthetic_waves(256), cfg, SHIFT)
        assert all(r <= 0.5 for r in diag.ratios)

    def test_transposition_symmetry(self):
        # exchanging u and v together with phi^+ <-> phi^- commutes with
        # the map up to the nested-quadrature ordering error, which
        # refines away at high order
        discrepancies = []
        for n in (256, 512):
            cfg = SolverConfig(grid_points=n, tau=0.5)
            waves = synthetic_waves(n)
            swapped = LinearWaves(waves.grid, waves.phi_minus,
                                  waves.phi_plus, 1.0)
            lin = linear_state(waves, SHIFT)
            a = picard_map(lin, waves, cfg)
            lin_t = WaveMapState(waves.grid,
                                 lin.values.transpose(0, 2, 1).copy(), SHIFT)
            b = picard_map(lin_t, swapped, cfg)
            discrepancies.append(
                np.abs(b.values - a.values.transpose(0, 2, 1)).max())
        assert discrepancies[0] <= 1e-5
        assert discrepancies[1] <= discrepancies[0] / 4.0

    def test_finite_speed_of_propagation(self):
        cfg = SolverConfig(grid_points=256, tau=0.5)
        waves = synthetic_waves(256)
        grid = waves.grid
        x = grid.points
        inside = np.abs(np.abs(x) - 1.55) < 0.25
        bump = np.zeros_like(x)
        bump[inside] = np.exp(-1.0 / (0.25**2 - (np.abs(x[inside]) - 1.55) ** 2))
        perturbed = LinearWaves(
            grid, waves.phi_plus + 0.05 * bump, waves.phi_minus, 1.0)
        a, _ = solve_picard(waves, cfg, SHIFT)
        b, _ = solve_picard(perturbed, cfg, SHIFT)
        mask = (np.abs(x)[:, None] <= 0.9) & (np.abs(x)[None, :] <= 0.9)
        assert np.abs((a.values - b.values)[:, mask]).max() <= 1e-10

    def test_non_contraction_reported(self):
        grid = Grid1D(512, 2 * math.pi)
        x = grid.points
        pp = np.stack([0.8 * np.sin(12 * x + j) for j in range(3)])
        pm = np.stack([0.8 * np.cos(12 * x + 2 * j) for j in range(3)])
        waves = LinearWaves(grid, pp, pm, 1.0)
        cfg = SolverConfig(grid_points=512, tau=1.0, max_iter=25)
        with pytest.raises(RuntimeError, match="not contracting"):
            solve_picard(waves, cfg, SHIFT)


class TestCharacteristicMarch:
    def test_zero_data(self):
        grid = Grid1D(128, 2 * math.pi)
        state = characteristic_march(np.zeros((3, 128)), np.zeros((3, 128)),
                                     grid, SHIFT, 0.3)
        band = ~np.isnan(state.values)
        assert np.all(state.values[band] == 0.0)

    def test_right_mover_exact_transport(self):
        grid = Grid1D(256, 2 * math.pi)
        x = grid.points
        f = np.stack([0.1 * np.exp(-2 * x**2) * np.sin((j + 2) * x)
                      for j in range(3)])
        fp = np.stack([spectral_derivative(Field1D(grid, r), "x").samples
                       for r in f])
        state = characteristic_march(f, -fp, grid, SHIFT, 0.3)
        err = np.nanmax(np.abs(state.values - f[:, :, None]))
        assert err <= 1e-12

    def test_blow_up_guard(self):
        grid = Grid1D(128, 2 * math.pi)
        w = 100.0 * np.ones((3, 128))
        with pytest.raises(RuntimeError, match="blew up"):
            characteristic_march(np.zeros((3, 128)), w, grid, SHIFT, 1.0)


class TestCartesian:
    def test_time_zero_is_diagonal(self):
        cfg = SolverConfig(grid_points=256, tau=0.5)
        state, _ = solve_picard(synthetic_waves(256), cfg, SHIFT)
        pos, _ = null_to_cartesian(state, [0.0])
        diag = np.stack([np.diagonal(state.values[k]) for k in range(3)])
        assert np.abs(pos[0] - diag).max() <= 1e-14

    def test_linear_evolution_dalembert(self):
        grid = Grid1D(512, 2 * math.pi)
        x = grid.points
        pp = np.stack([0.05 * np.exp(-2 * x**2) * np.sin((j + 1) * x)
                       for j in range(3)])
        pm = np.stack([0.04 * np.exp(-2 * x**2) * np.cos((j + 2) * x)
                       for j in range(3)])
        waves = LinearWaves(grid, pp, pm, 1.0)
        lin = linear_state(waves, SHIFT)
        h = grid.spacing
        m = 16
        pos, _ = null_to_cartesian(lin, [m * h])
        chi = cutoff_chi(x)

        def shift_rows(a, k):
            out = np.zeros_like(a)
            if k > 0:
                out[:, :-k] = a[:, k:]
            else:
                out[:, -k:] = a[:, :k]
            return out

        formula = shift_rows(chi * pp, -m) + shift_rows(chi * pm, m)
        inner = np.abs(x) <= 4.0
        assert np.abs(pos[0] - formula)[:, inner].max() <= 1e-13

    def test_linear_energy_conserved(self):
        grid = Grid1D(512, 2 * math.pi)
        x = grid.points
        pp = np.stack([0.05 * np.exp(-2 * x**2) * np.sin((j + 1) * x)
                       for j in range(3)])
        pm = np.stack([0.04 * np.exp(-2 * x**2) * np.cos((j + 2) * x)
                       for j in range(3)])
        lin = linear_state(LinearWaves(grid, pp, pm, 1.0), SHIFT)
        h = grid.spacing
        ts = [0.0, 8 * h, 16 * h]
        pos, vel = null_to_cartesian(lin, ts)
        es = [hamiltonian_energy(pos[j], vel[j], grid) for j in range(3)]
        assert max(abs(e - es[0]) for e in es) <= 1e-8 * es[0]

    def test_zero_energy(self):
        grid = Grid1D(128, 2 * math.pi)
        assert hamiltonian_energy(np.zeros((3, 128)), np.zeros((3, 128)),
                                  grid) == 0.0
