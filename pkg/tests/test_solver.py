"""Propagator, relaxation, eigensolver, and checkpoint tests."""

import math

import numpy as np
import pytest

from kickshift.fields import WaveField, fidelity, total_energy
from kickshift.grids import build_grid
from kickshift.models import PotentialField, helium_ion_potential_1d
from kickshift.pulses import design_for_displacement
from kickshift.solver import (
    BoundaryLeakError,
    PropagationPlan,
    SolverError,
    eigensolve_1d,
    load_checkpoint,
    propagate,
    relax,
    save_checkpoint,
    step,
    translate,
)


def _free_grid(length=256.0, dz=0.0625):
    return build_grid("cartesian_1d", (length,), (dz,))


def _zero_potential(grid):
    return PotentialField(grid, np.zeros(grid.shape))


def _gaussian(grid, center=0.0, width=1.0):
    z = grid.axes[0].coordinates()
    vals = np.exp(-((z - center) ** 2) / (2.0 * width**2)).astype(complex)
    return WaveField(grid, vals).normalize()


def _ho_potential(grid):
    z = grid.axes[0].coordinates()
    return PotentialField(grid, 0.5 * z**2)


class TestFreeParticle:
    @pytest.mark.parametrize("dt", [0.05, 0.013])
    def test_pulse_displaces_packet_exactly(self, dt):
        grid = _free_grid()
        psi0 = _gaussian(grid, width=4.0)
        pulse = design_for_displacement(5.0, 0.5)
        plan = PropagationPlan(dt, pulse.duration, pulse, record_every=10_000)
        traj = propagate(psi0, plan, _zero_potential(grid))
        shift = traj.z_mean[-1] - traj.z_mean[0]
        assert shift == pytest.approx(5.0, rel=1e-10)

    def test_final_state_matches_translate(self):
        grid = _free_grid()
        psi0 = _gaussian(grid, width=8.0)
        pulse = design_for_displacement(5.0, 0.5)
        plan = PropagationPlan(0.05, pulse.duration, pulse, record_every=10_000)
        traj = propagate(psi0, plan, _zero_potential(grid))
        # The packet spreads a little, so fidelity with the rigidly shifted
        # initial state is below one, but the shift should dominate.
        assert fidelity(traj.final_field, translate(psi0, 5.0)) > 0.95

    def test_negative_displacement(self):
        grid = _free_grid()
        psi0 = _gaussian(grid, width=4.0)
        pulse = design_for_displacement(-3.0, 0.5)
        plan = PropagationPlan(0.05, pulse.duration, pulse, record_every=10_000)
        traj = propagate(psi0, plan, _zero_potential(grid))
        assert traj.z_mean[-1] - traj.z_mean[0] == pytest.approx(-3.0, rel=1e-10)


class TestHarmonicOscillator:
    def test_coherent_state_one_period(self):
        grid = build_grid("cartesian_1d", (32.0,), (0.0625,))
        psi0 = _gaussian(grid, center=1.0)
        plan = PropagationPlan(0.01, 2.0 * math.pi, record_every=1)
        traj = propagate(psi0, plan, _ho_potential(grid))
        expected = np.cos(traj.times)
        assert np.max(np.abs(traj.z_mean - expected)) < 1e-4

    def test_dt_halving_improves_accuracy(self):
        grid = build_grid("cartesian_1d", (32.0,), (0.0625,))
        psi0 = _gaussian(grid, center=1.0)
        v = _ho_potential(grid)
        errs = []
        for dt in (0.04, 0.02):
            plan = PropagationPlan(dt, 2.0 * math.pi, record_every=10_000)
            traj = propagate(psi0, plan, v)
            errs.append(abs(traj.z_mean[-1] - math.cos(traj.times[-1])))
        # Strang splitting is second order in dt.
        assert errs[1] < errs[0] / 3.0

    def test_norm_conserved_over_long_run(self):
        grid = build_grid("cartesian_1d", (32.0,), (0.125,))
        psi0 = _gaussian(grid, center=1.0)
        plan = PropagationPlan(0.01, 100.0, record_every=100)
        traj = propagate(psi0, plan, _ho_potential(grid))
        assert np.max(np.abs(traj.norm - 1.0)) < 1e-10

    def test_energy_conserved_field_free(self):
        grid = build_grid("cartesian_1d", (32.0,), (0.125,))
        psi0 = _gaussian(grid, center=1.0)
        v = _ho_potential(grid)
        plan = PropagationPlan(0.002, 20.0, record_every=100)
        traj = propagate(psi0, plan, v)
        e0 = total_energy(psi0, v)
        assert np.max(np.abs(traj.energy - e0)) < 1e-6 * abs(e0)


class TestRelax:
    def test_oscillator_ground_state(self):
        grid = build_grid("cartesian_1d", (32.0,), (0.0625,))
        guess = _gaussian(grid, width=1.3)
        psi, e = relax(_ho_potential(grid), guess, dtau=0.05, tol=1e-12)
        assert e == pytest.approx(0.5, abs=1e-6)
        assert psi.norm() == pytest.approx(1.0, abs=1e-12)

    def test_orthogonal_relax_finds_first_excited(self):
        grid = build_grid("cartesian_1d", (32.0,), (0.0625,))
        v = _ho_potential(grid)
        ground, _ = relax(v, _gaussian(grid, width=1.3), dtau=0.05, tol=1e-12)
        z = grid.axes[0].coordinates()
        guess = WaveField(grid, (z * np.exp(-0.4 * z**2)).astype(complex)).normalize()
        excited, e1 = relax(v, guess, dtau=0.05, tol=1e-12, orthogonal_to=(ground,))
        assert e1 == pytest.approx(1.5, abs=1e-5)
        overlap = abs(np.vdot(ground.values, excited.values)) * grid.volume_element
        assert overlap < 1e-6

    def test_relax_rejects_bad_dtau(self):
        grid = build_grid("cartesian_1d", (32.0,), (0.125,))
        with pytest.raises(SolverError):
            relax(_ho_potential(grid), _gaussian(grid), dtau=-0.1)

    @staticmethod
    def _two_electron_ho(extent=16.0, dz=0.25):
        grid = build_grid("cartesian_2e", (extent, extent), (dz, dz))
        z1 = grid.coordinate_mesh(0)
        z2 = grid.coordinate_mesh(1)
        v = PotentialField(grid, 0.5 * (z1**2 + z2**2))
        anti = (z1 - z2) * np.exp(-0.5 * (z1**2 + z2**2))
        guess = WaveField(grid, anti.astype(complex)).normalize()
        return grid, v, guess

    def test_exchange_sign_pins_antisymmetric_sector(self):
        from kickshift.solver import exchange_residual

        grid, v, guess = self._two_electron_ho()
        # Seed a symmetric contamination well above rounding level; the
        # pinned relaxation must still land on the antisymmetric state.
        guess.values += 1e-3 * np.exp(-0.5 * (grid.coordinate_mesh(0) ** 2 + grid.coordinate_mesh(1) ** 2))
        guess.normalize()
        psi, e = relax(v, guess, dtau=0.05, tol=1e-12, exchange_sign=-1.0)
        assert exchange_residual(psi, -1.0) < 1e-12
        assert e == pytest.approx(2.0, abs=1e-4)

    def test_unpinned_relax_collapses_to_symmetric_ground(self):
        from kickshift.solver import exchange_residual

        grid, v, guess = self._two_electron_ho()
        guess.values += 1e-3 * np.exp(-0.5 * (grid.coordinate_mesh(0) ** 2 + grid.coordinate_mesh(1) ** 2))
        guess.normalize()
        psi, e = relax(v, guess, dtau=0.05, tol=1e-12)
        # Imaginary time amplifies the lower symmetric component.
        assert e == pytest.approx(1.0, abs=1e-4)
        assert exchange_residual(psi, -1.0) > 1.0

    def test_exchange_sign_rejects_wrong_grid_and_value(self):
        grid = build_grid("cartesian_1d", (32.0,), (0.125,))
        with pytest.raises(SolverError):
            relax(_ho_potential(grid), _gaussian(grid), exchange_sign=-1.0)
        grid2, v, guess = self._two_electron_ho()
        with pytest.raises(SolverError):
            relax(v, guess, exchange_sign=0.5)


class TestEigensolve1D:
    def test_oscillator_spectrum(self):
        grid = build_grid("cartesian_1d", (32.0,), (0.015625,))
        pairs = eigensolve_1d(_ho_potential(grid), 3)
        for i, (state, energy) in enumerate(pairs):
            assert energy == pytest.approx(i + 0.5, abs=1e-4)
            assert state.norm() == pytest.approx(1.0, abs=1e-10)

    def test_states_orthonormal(self):
        grid = build_grid("cartesian_1d", (32.0,), (0.0625,))
        pairs = eigensolve_1d(_ho_potential(grid), 4)
        vol = grid.volume_element
        for i, (si, _) in enumerate(pairs):
            for j, (sj, _) in enumerate(pairs):
                want = 1.0 if i == j else 0.0
                got = abs(np.vdot(si.values, sj.values)) * vol
                assert got == pytest.approx(want, abs=1e-10)

    def test_agrees_with_relax_on_soft_core_ion(self):
        grid = build_grid("cartesian_1d", (64.0,), (0.0078125,))
        v = helium_ion_potential_1d(grid)
        (fd_state, fd_energy) = eigensolve_1d(v, 1)[0]
        relaxed, e = relax(v, fd_state, dtau=0.002, tol=1e-12)
        assert e == pytest.approx(fd_energy, abs=5e-5)

    def test_rejects_wrong_grid(self):
        grid = build_grid("cylindrical_rz", (16.0, 16.0), (0.25, 0.25))
        with pytest.raises(SolverError):
            eigensolve_1d(PotentialField(grid, np.zeros(grid.shape)), 1)
        grid1 = build_grid("cartesian_1d", (16.0,), (0.25,))
        with pytest.raises(SolverError):
            eigensolve_1d(_ho_potential(grid1), 0)


class TestGuardsAndErrors:
    def test_boundary_guard_trips_on_leak(self):
        grid = build_grid("cartesian_1d", (16.0,), (0.0625,))
        psi0 = _gaussian(grid, width=2.0)
        pulse = design_for_displacement(20.0, 0.5)
        plan = PropagationPlan(0.05, pulse.duration, pulse, record_every=20)
        with pytest.raises(BoundaryLeakError):
            propagate(psi0, plan, _zero_potential(grid))

    def test_guard_can_be_disabled(self):
        grid = build_grid("cartesian_1d", (16.0,), (0.0625,))
        psi0 = _gaussian(grid, width=2.0)
        pulse = design_for_displacement(8.0, 0.5)
        plan = PropagationPlan(
            0.05, pulse.duration, pulse, record_every=20, boundary_guard=None
        )
        propagate(psi0, plan, _zero_potential(grid))

    def test_plan_rejects_bad_dt(self):
        with pytest.raises(SolverError):
            PropagationPlan(-0.1, 1.0)
        with pytest.raises(SolverError):
            PropagationPlan(0.0, 1.0)

    def test_plan_rejects_unresolved_pulse(self):
        pulse = design_for_displacement(5.0, 10.0)
        with pytest.raises(SolverError):
            PropagationPlan(0.1, pulse.duration, pulse)

    def test_plan_rejects_unknown_mode(self):
        with pytest.raises(SolverError):
            PropagationPlan(0.01, 1.0, mode="sideways")

    def test_grid_mismatch(self):
        g1 = build_grid("cartesian_1d", (32.0,), (0.125,))
        g2 = build_grid("cartesian_1d", (64.0,), (0.125,))
        plan = PropagationPlan(0.01, 0.1)
        with pytest.raises(SolverError):
            propagate(_gaussian(g1), plan, _zero_potential(g2))
        with pytest.raises(SolverError):
            step(_gaussian(g1), _zero_potential(g2), None, 0.0, 0.01)


class TestStepWrapper:
    def test_single_step_matches_propagate(self):
        grid = build_grid("cartesian_1d", (32.0,), (0.125,))
        psi0 = _gaussian(grid, center=1.0)
        v = _ho_potential(grid)
        out = step(psi0, v, None, 0.0, 0.01)
        plan = PropagationPlan(0.01, 0.01, record_every=1)
        traj = propagate(psi0, plan, v)
        assert np.allclose(out.values, traj.final_field.values, atol=1e-14)


class TestTranslate:
    def test_shift_moves_gaussian(self):
        grid = _free_grid(64.0, 0.0625)
        psi = _gaussian(grid, width=2.0)
        shifted = translate(psi, 3.0)
        target = _gaussian(grid, center=3.0, width=2.0)
        assert fidelity(shifted, target) == pytest.approx(1.0, abs=1e-12)

    def test_inverse_shift_round_trips(self):
        grid = _free_grid(64.0, 0.0625)
        psi = _gaussian(grid, center=1.0, width=1.5)
        back = translate(translate(psi, 2.5), -2.5)
        assert np.allclose(back.values, psi.values, atol=1e-12)


class TestCheckpoint:
    def test_round_trip_bitwise(self, tmp_path):
        grid = build_grid("cylindrical_rz", (16.0, 16.0), (0.25, 0.25))
        rng = np.random.default_rng(7)
        vals = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
        psi = WaveField(grid, vals, "u_scaled")
        path = tmp_path / "state.ksck"
        save_checkpoint(path, psi, 1.25, b"\x01" * 32)
        loaded, t, plan_hash = load_checkpoint(path)
        assert t == 1.25
        assert plan_hash == b"\x01" * 32
        assert loaded.grid == grid
        assert loaded.representation == "u_scaled"
        assert np.array_equal(loaded.values, psi.values)

    def test_rejects_foreign_file(self, tmp_path):
        path = tmp_path / "junk.bin"
        path.write_bytes(b"not a checkpoint")
        with pytest.raises(SolverError):
            load_checkpoint(path)
