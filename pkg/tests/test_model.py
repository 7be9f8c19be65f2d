import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import constants

from omem.model import (
    ConfigurationError,
    CouplingPhase,
    NoiseMode,
    NoiseSpec,
    PhysicalParams,
    UnstableConfigurationError,
    _fixed_point_residuals,
    diffusion_matrix,
    drift_matrix,
    drift_matrix_full,
    drift_matrix_mean,
    fixed_points,
    is_hurwitz,
    rotation_generator,
    select_fixed_point,
    thermal_occupation,
)
from omem.propagate import expm

TWO_PI = 2 * math.pi
PHASES = list(CouplingPhase)


def teufel(**kw):
    wm = TWO_PI * 10.69e6
    base = dict(omega_m=wm, kappa=TWO_PI * 170e3, gamma=wm / 360000, N_m=3.0,
                noise=NoiseSpec(1e3, 0.5e6))
    base.update(kw)
    return PhysicalParams.from_coupling(G=0.05 * wm, g0=TWO_PI * 230, **base)


def groblacher(**kw):
    base = dict(omega_m=TWO_PI * 947e3, kappa=TWO_PI * 215e3, gamma=TWO_PI * 140, N_m=3.0)
    base.update(kw)
    return PhysicalParams.from_coupling(G=TWO_PI * 229.81e3, g0=TWO_PI * 1.91, **base)


physical_params = st.builds(
    lambda kappa, gamma, G, NmNc, GL, gc: PhysicalParams.from_coupling(
        omega_m=1.0, kappa=kappa, gamma=gamma, G=G, g0=1e-3, N_m=NmNc[0], N_C=NmNc[1],
        noise=NoiseSpec(GL, gc)),
    st.floats(0.0, 0.5),
    st.floats(0.0, 0.05),
    st.floats(0.0, 0.5),
    st.tuples(st.floats(0, 20), st.floats(0, 2)),
    st.floats(0, 1e-2),
    st.floats(0, 5),
)


class TestThermalOccupation:
    def test_drum_temperature_gives_three_quanta(self):
        assert thermal_occupation(1.7e-3, TWO_PI * 10.69e6) == pytest.approx(3.0, abs=0.2)

    def test_zero_temperature_limit(self):
        assert thermal_occupation(1e-9, TWO_PI * 10.69e6) == 0.0
        assert thermal_occupation(1e-5, TWO_PI * 10.69e6) < 1e-20

    def test_ten_millikelvin_regression(self):
        x = constants.hbar * TWO_PI * 10.69e6 / (constants.k * 0.01)
        direct = 1 / (math.exp(x) - 1)
        assert thermal_occupation(0.01, TWO_PI * 10.69e6) == pytest.approx(direct, rel=1e-12)
        assert thermal_occupation(0.01, TWO_PI * 10.69e6) == pytest.approx(18.99597, abs=1e-5)

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            thermal_occupation(0.0, 1.0)


class TestValidation:
    def test_white_mode_with_cutoff(self):
        with pytest.raises(ConfigurationError):
            NoiseSpec(1e3, 1e5, NoiseMode.WHITE_EXACT)

    def test_negative_rate(self):
        with pytest.raises(ConfigurationError):
            PhysicalParams(omega_m=1.0, kappa=0.1, gamma=-1e-3, g0=1e-3, alpha_s=1.0)

    def test_unresolved_sideband_warns(self):
        with pytest.warns(UserWarning, match="resolved-sideband"):
            PhysicalParams(omega_m=1.0, kappa=2.0, gamma=0.0, g0=1e-3, alpha_s=1.0)

    def test_with_updates_coupling_and_noise(self):
        p = teufel().with_(G=1e6, Gamma_L=5.0)
        assert p.G == pytest.approx(1e6)
        assert p.noise.Gamma_L == 5.0 and p.noise.gamma_c == 0.5e6


class TestDrift:
    def test_store_is_block_diagonal(self):
        Q = drift_matrix(teufel(), CouplingPhase.STORE)
        assert np.all(Q[0:2, 2:5] == 0) and np.all(Q[2:4, 0:2] == 0)
        assert np.all(Q[2:4, 4] == 0) and np.all(Q[4, :4] == 0)

    def test_read_negates_coupling(self):
        p = teufel()
        W, R = drift_matrix(p, CouplingPhase.WRITE), drift_matrix(p, CouplingPhase.READ)
        G = p.G / p.omega_m
        coupling = np.zeros((5, 5))
        coupling[0, 3], coupling[1, 2], coupling[2, 1], coupling[3, 0] = -G, G, -G, G
        np.testing.assert_array_equal(W - R, 2 * coupling)
        np.testing.assert_array_equal(W - coupling, R + coupling)

    def test_pure_rotation_eigenvalues(self):
        p = PhysicalParams(omega_m=3.0, kappa=0.0, gamma=0.0, g0=1.0, alpha_s=0.0)
        ev = np.sort_complex(np.linalg.eigvals(drift_matrix(p, scaled=False)))
        np.testing.assert_allclose(ev, np.sort_complex([-3j, -3j, 0, 3j, 3j]), atol=1e-12)

    def test_laser_noise_column(self):
        p = teufel()
        assert drift_matrix(p, CouplingPhase.WRITE)[3, 4] == -p.alpha_s
        assert drift_matrix(p, CouplingPhase.STORE)[3, 4] == 0.0

    @pytest.mark.parametrize("phase", PHASES)
    def test_mean_block(self, phase):
        p = groblacher()
        Q4 = drift_matrix_mean(p, phase)
        np.testing.assert_array_equal(Q4, drift_matrix(p, phase)[:4, :4])
        assert np.trace(Q4) == pytest.approx(-(p.gamma + p.kappa) / p.omega_m, rel=1e-14)
        anti = (Q4 - Q4.T) / 2
        G = p.G / p.omega_m * phase.value
        assert set(np.round(np.abs(anti[anti != 0]), 15)) <= {1.0, round(abs(G), 15)}

    @given(physical_params, st.sampled_from(PHASES))
    @settings(max_examples=50, deadline=None)
    def test_mean_block_exact(self, p, phase):
        np.testing.assert_array_equal(drift_matrix_mean(p, phase), drift_matrix(p, phase)[:4, :4])


class TestDiffusion:
    def test_zero_occupancies(self):
        p = teufel(N_m=0.0)
        g, k = p.gamma / p.omega_m, p.kappa / p.omega_m
        gc, GL = 0.5e6 / p.omega_m, 1e3 / p.omega_m
        expected = np.diag([g / 4, g / 4, k / 4, k / 4, 2 * gc**2 * GL])
        np.testing.assert_allclose(diffusion_matrix(p), expected, rtol=1e-14)

    def test_no_linewidth(self):
        assert diffusion_matrix(teufel(noise=NoiseSpec(0.0, 1e5)))[4, 4] == 0.0

    def test_laser_off(self):
        assert diffusion_matrix(teufel(), laser_on=False)[4, 4] == 0.0

    def test_white_mode_moves_noise_to_p2(self):
        p = teufel(noise=NoiseSpec(1e3, 0.0, NoiseMode.WHITE_EXACT))
        N = diffusion_matrix(p, scaled=False)
        assert N[4, 4] == 0.0
        assert N[3, 3] - N[2, 2] == pytest.approx(2 * 1e3 * p.alpha_s**2, rel=1e-14)

    @given(physical_params)
    @settings(max_examples=50, deadline=None)
    def test_diagonal_nonnegative(self, p):
        N = diffusion_matrix(p)
        assert np.all(N == np.diag(np.diag(N))) and np.all(np.diag(N) >= 0)

    @given(physical_params)
    @settings(max_examples=30, deadline=None)
    def test_matches_input_correlator_symmetrization(self, p):
        # correlator of the input noises times a delta; over [0, t] the delta
        # sits at the endpoint and contributes half its weight
        gb = p.gamma * (1 + 2 * p.N_m)
        kb = p.kappa * (1 + 2 * p.N_C)
        D = np.zeros((5, 5), dtype=complex)
        D[:2, :2] = [[gb, 1j * p.gamma], [-1j * p.gamma, gb]]
        D[2:4, 2:4] = [[kb, 1j * p.kappa], [-1j * p.kappa, kb]]
        D[4, 4] = 8 * p.noise.gamma_c**2 * p.noise.Gamma_L
        D /= 4
        A = 0.5 * (D + D.T)
        N = 0.5 * (A + A.T)
        np.testing.assert_allclose(N.imag, 0, atol=1e-300)
        np.testing.assert_allclose(N.real, diffusion_matrix(p, scaled=False), rtol=1e-14, atol=0)


class TestRotationGenerator:
    def test_full_period_is_identity(self):
        R = expm(-rotation_generator(1.0), TWO_PI)
        np.testing.assert_allclose(R[:4, :4], np.eye(4), atol=1e-12)

    def test_antisymmetric(self):
        Q = rotation_generator(2.5)
        assert np.all(Q + Q.T == 0) and np.all(Q[4] == 0) and np.all(Q[:, 4] == 0)

    @given(st.floats(-50, 50), st.lists(st.floats(-10, 10), min_size=4, max_size=4))
    def test_preserves_norm(self, t, x):
        R = expm(-rotation_generator(1.0), t)[:4, :4]
        assert np.linalg.norm(R @ x) == pytest.approx(np.linalg.norm(x), rel=1e-12, abs=1e-12)

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            rotation_generator(0.0)


class TestFullDrift:
    def test_uncoupled_eigenvalues(self):
        p = groblacher()
        Delta = 0.9 * p.omega_m
        ev = np.linalg.eigvals(drift_matrix_full(p, Delta, G=0.0, scaled=False))
        s = p.omega_m
        exp = [-p.gamma / 2 + 1j * s, -p.gamma / 2 - 1j * s,
               -p.kappa / 2 + 1j * Delta, -p.kappa / 2 - 1j * Delta]
        np.testing.assert_allclose(np.sort_complex(ev) / s, np.sort_complex(exp) / s, atol=1e-12)

    def test_uncoupled_damped_is_hurwitz(self):
        assert is_hurwitz(drift_matrix_full(groblacher(), 1e6, G=0.0))

    @pytest.mark.parametrize("make", [teufel, groblacher])
    def test_presets_hurwitz(self, make):
        p = make()
        assert is_hurwitz(drift_matrix_full(p, p.omega_m))


class TestFixedPoints:
    base = PhysicalParams(omega_m=1.0, kappa=0.1, gamma=0.01, g0=1e-3, alpha_s=0.0)

    def test_no_drive(self):
        [fp] = fixed_points(self.base, 0.0, 1.0)
        assert fp.alpha_s == 0 and fp.beta == 0 and fp.stable and fp.selected

    def test_linear_cavity(self):
        p = self.base.with_(g0=0.0)
        [fp] = fixed_points(p, 3.0, 1.0)
        assert abs(fp.alpha_s) == pytest.approx(3.0 / math.sqrt(1.0 + 0.1**2 / 4), rel=1e-14)
        assert fp.beta == 0

    def test_bistable_pattern(self):
        # scan the drive until the cubic discriminant says three real roots
        c = 2 * 1e-6 / (1 + 0.01**2 / 4)
        D0, lin = 0.5, 0.5**2 + 0.1**2 / 4
        for E in np.linspace(1, 400, 400):
            a, b, cc, d = c * c, -2 * D0 * c, lin, -E * E
            disc = 18 * a * b * cc * d - 4 * b**3 * d + b**2 * cc**2 - 4 * a * cc**3 - 27 * a**2 * d**2
            if disc > 0:
                break
        else:
            pytest.fail("no bistable drive found")
        points = fixed_points(self.base, E, D0)
        assert len(points) == 3
        assert [fp.stable for fp in points] == [True, False, True]
        assert select_fixed_point(points) is points[0]
        for fp in points:
            r1, r2 = _fixed_point_residuals(self.base, E, D0, fp.alpha_s, fp.beta)
            assert r1 <= 1e-10 and r2 <= 1e-10

    @given(st.floats(0.01, 300), st.floats(-1.0, 1.0))
    @settings(max_examples=100, deadline=None)
    def test_residuals(self, E, D0):
        points = fixed_points(self.base, E, D0)
        for fp in points:
            r1, r2 = _fixed_point_residuals(self.base, E, D0, fp.alpha_s, fp.beta)
            assert r1 <= 1e-10 and r2 <= 1e-10
        sel = [fp for fp in points if fp.selected]
        for fp in sel:
            assert is_hurwitz(drift_matrix_full(self.base, fp.detuning_used,
                                                G=self.base.g0 * abs(fp.alpha_s)))

    def test_selected_branch_monotone_in_drive(self):
        # below the bistability threshold only one branch exists
        amps = [abs(select_fixed_point(fixed_points(self.base, E, 0.04)).alpha_s)
                for E in np.linspace(0, 50, 60)]
        assert np.all(np.diff(amps) >= 0)

    def test_no_stable_root(self):
        with pytest.raises(UnstableConfigurationError):
            # blue detuning drives the oscillator unstable
            select_fixed_point(fixed_points(self.base.with_(gamma=1e-6), 20.0, -1.0))
