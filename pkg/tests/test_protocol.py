import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from omem.model import NoiseMode, NoiseSpec, PhysicalParams
from omem.propagate import GaussianState, symplectic_form
from omem.protocol import (
    DegenerateStateError,
    InputState,
    ProtocolSpec,
    Psi0Mode,
    RotationMode,
    cooled_start,
    fidelity,
    fidelity_direct,
    initial_state,
    optimal_rotation,
    rotate,
    rotate_compensate,
    run_protocol,
    storage_fidelity,
)

TWO_PI = 2 * math.pi
FOCK_DIM = 60


def drum(**kw):
    wm = TWO_PI * 10.69e6
    base = dict(omega_m=wm, kappa=TWO_PI * 170e3, gamma=wm / 360000, N_m=3.0,
                noise=NoiseSpec(1e3, 0.5e6))
    G = kw.pop("G", 0.05 * wm)
    base.update(kw)
    return PhysicalParams.from_coupling(G=G, g0=TWO_PI * 230, **base)


def drum_spec(p):
    return ProtocolSpec(tau=64 / p.omega_m)


def lossless(G=0.1):
    return PhysicalParams.from_coupling(omega_m=1.0, kappa=0.0, gamma=0.0, G=G, g0=1e-3)


# -- Fock-basis oracle ---------------------------------------------------------

def _ops(dim):
    a = np.diag(np.sqrt(np.arange(1, dim)), 1)
    return a, a.T


def pure_state(alpha, r, dim=FOCK_DIM, pad=80):
    """D(alpha) S(r)|0> in a padded number basis, truncated to ``dim``."""
    a, ad = _ops(dim + pad)
    vac = np.zeros(dim + pad)
    vac[0] = 1.0
    S = scipy.linalg.expm(r / 2 * (a @ a - ad @ ad))
    D = scipy.linalg.expm(alpha * ad - np.conj(alpha) * a)
    return (D @ S @ vac)[:dim]


def thermal_rho(n, dim=FOCK_DIM):
    k = np.arange(dim)
    return np.diag(n**k / (1 + n) ** (k + 1))


def gaussian_of_pure(alpha, r):
    cov = np.diag([0.25, 0.25, math.exp(-2 * r) / 4, math.exp(2 * r) / 4, 0.0])
    return GaussianState(np.array([0, 0, alpha.real, alpha.imag]), cov)


def gaussian_thermal(n):
    return GaussianState(np.zeros(4), np.diag([0.25, 0.25, (1 + 2 * n) / 4, (1 + 2 * n) / 4, 0.0]))


class TestFockOracle:
    @pytest.mark.parametrize("a1,r1,a2,r2", [
        (1.0, 0.0, 0.0, 0.0),
        (0.5 - 0.3j, 0.0, -0.2 + 0.4j, 0.0),
        (0.7, 0.4, 0.7, 0.0),
        (0.3 + 0.2j, 0.5, -0.1j, 0.2),
        (0.0, 0.8, 0.0, 0.0),
    ])
    def test_pure_overlaps(self, a1, r1, a2, r2):
        a1, a2 = complex(a1), complex(a2)
        psi1, psi2 = pure_state(a1, r1), pure_state(a2, r2)
        trace = abs(np.vdot(psi1, psi2)) ** 2
        F = fidelity(gaussian_of_pure(a1, r1), gaussian_of_pure(a2, r2)).F
        assert F == pytest.approx(trace, abs=1e-9)

    @pytest.mark.parametrize("n1,n2", [(0.0, 0.0), (0.5, 0.0), (1.0, 2.0), (3.0, 0.2)])
    def test_thermal_pair(self, n1, n2):
        trace = np.trace(thermal_rho(n1, 400) @ thermal_rho(n2, 400))
        F = fidelity(gaussian_thermal(n1), gaussian_thermal(n2)).F
        assert F == pytest.approx(trace, abs=1e-10)
        assert F == pytest.approx(1 / (1 + n1 + n2), rel=1e-12)

    @pytest.mark.parametrize("alpha,n", [(1.0, 0.5), (0.4 - 0.8j, 2.0)])
    def test_coherent_against_thermal(self, alpha, n):
        psi = pure_state(complex(alpha), 0.0, 120)
        trace = float(np.real(np.conj(psi) @ thermal_rho(n, 120) @ psi))
        F = fidelity(gaussian_of_pure(complex(alpha), 0.0), gaussian_thermal(n)).F
        assert F == pytest.approx(trace, abs=1e-10)


# -- fidelity functional -------------------------------------------------------

def random_symplectic(rng, scale=0.6):
    H = rng.normal(size=(4, 4)) * scale
    H = (H + H.T) / 2
    return scipy.linalg.expm(symplectic_form(2) @ H)


def random_state(rng):
    S = random_symplectic(rng)
    nu = 1 + rng.exponential(1.0, size=2)
    V4 = S @ np.diag([nu[0], nu[0], nu[1], nu[1]]) @ S.T / 4
    cov = np.zeros((5, 5))
    cov[:4, :4] = V4
    cov[4, 4] = rng.exponential(1e-3)
    return GaussianState(rng.normal(size=4), cov)


class TestFidelity:
    def test_identical_vacua(self):
        v = gaussian_thermal(0.0)
        res = fidelity(v, v)
        assert (res.F, res.n_h, res.lam) == (pytest.approx(1.0), pytest.approx(0.0), 0.0)

    def test_coherent_vs_vacuum(self):
        F = fidelity(gaussian_of_pure(1.0 + 0j, 0.0), gaussian_thermal(0.0)).F
        assert F == pytest.approx(math.exp(-1), rel=1e-14)

    def test_degenerate(self):
        z = GaussianState(np.zeros(4), np.zeros((5, 5)))
        with pytest.raises(DegenerateStateError):
            fidelity(z, z)

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=200, deadline=None)
    def test_forms_agree_and_bounded(self, seed):
        rng = np.random.default_rng(seed)
        a, b = random_state(rng), random_state(rng)
        res = fidelity(a, b)
        assert res.F == pytest.approx(fidelity_direct(a, b), rel=1e-12, abs=1e-300)
        assert 0 < res.F <= 1 + 1e-12 or res.F == 0.0
        assert res.F == pytest.approx(math.exp(-res.lam**2 / (1 + res.n_h)) / (1 + res.n_h),
                                      rel=1e-12, abs=1e-300)

    @given(st.integers(0, 2**32 - 1), st.floats(-10, 10))
    @settings(max_examples=200, deadline=None)
    def test_joint_rotation_invariance(self, seed, theta):
        rng = np.random.default_rng(seed)
        a, b = random_state(rng), random_state(rng)
        F0 = fidelity(a, b).F
        assert fidelity(rotate(a, theta), rotate(b, theta)).F == pytest.approx(F0, rel=1e-12,
                                                                               abs=1e-300)

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=50, deadline=None)
    def test_unit_only_for_equal_pure(self, seed):
        rng = np.random.default_rng(seed)
        # single-mode symplectic so the optical marginal stays pure
        H = rng.normal(size=(2, 2)) * 0.6
        S = scipy.linalg.expm(symplectic_form(1) @ (H + H.T) / 2)
        cov = np.eye(5) / 4
        cov[2:4, 2:4] = S @ S.T / 4
        pure = GaussianState(rng.normal(size=4), cov)
        assert fidelity(pure, pure).F == pytest.approx(1.0, abs=1e-12)
        mixed = pure.replace(cov=cov * 1.1)
        assert fidelity(mixed, mixed).F < 1
        shifted = pure.replace(mean=pure.mean + np.array([0, 0, 0.1, 0]))
        assert fidelity(pure, shifted).F < 1


# -- initial state, protocol, rotation -------------------------------------------

class TestInitialState:
    def test_vacuum(self):
        s = initial_state(InputState(alpha=0, r=0), drum(noise=NoiseSpec()))
        np.testing.assert_array_equal(s.cov[:4, :4], np.eye(4) / 4)
        assert np.all(s.mean == 0)

    def test_squeezed(self):
        s = initial_state(InputState(r=0.5), drum())
        assert s.cov[2, 2] == pytest.approx(math.exp(-1) / 4)
        assert s.cov[3, 3] == pytest.approx(math.exp(1) / 4)

    def test_hot_oscillator(self):
        s = initial_state(InputState(mechanical_cooled=False), drum())
        assert s.cov[0, 0] == s.cov[1, 1] == 7 / 4

    def test_psi_modes(self):
        p = drum()
        quarter = initial_state(InputState(), p).cov[4, 4]
        stat = initial_state(InputState(psi0_mode=Psi0Mode.STATIONARY), p).cov[4, 4]
        assert quarter == pytest.approx(0.25 / p.omega_m**2)
        assert stat == pytest.approx(1e3 * 0.5e6 / p.omega_m**2)
        assert initial_state(InputState(), drum(noise=NoiseSpec())).cov[4, 4] == 0.0

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            InputState(r=math.inf)


class TestProtocol:
    def test_lossless_double_swap(self):
        p = lossless()
        inp = InputState(alpha=0.8 - 0.5j, r=0.3)
        res = storage_fidelity(p, inp, ProtocolSpec(tau=0.0))
        assert res.F == pytest.approx(1.0, abs=1e-6)
        start = initial_state(inp, p)
        final, _ = rotate_compensate(run_protocol(p, start, ProtocolSpec()), ProtocolSpec(),
                                     1.0, total_time=math.pi / 0.1)
        np.testing.assert_allclose(final.optical_mean, start.optical_mean, atol=1e-10)
        np.testing.assert_allclose(final.optical_cov, start.optical_cov, atol=1e-10)

    def test_lossless_with_storage(self):
        res = storage_fidelity(lossless(), InputState(alpha=1.0), ProtocolSpec(tau=7.3))
        assert res.F == pytest.approx(1.0, abs=1e-6)

    def test_elapsed_time(self):
        p = drum()
        spec = drum_spec(p)
        out = run_protocol(p, initial_state(InputState(), p), spec)
        assert out.elapsed == pytest.approx(spec.total_time(p), rel=1e-12)

    def test_pulse_needs_coupling(self):
        with pytest.raises(ValueError):
            ProtocolSpec().pulse_time(lossless(G=0.0))

    @given(st.floats(0.0, 20.0), st.floats(-1, 1), st.floats(0, 1e4))
    @settings(max_examples=25, deadline=None)
    def test_optimize_dominates(self, tau_wm, re, GL):
        p = drum(noise=NoiseSpec(GL, 0.5e6))
        inp = InputState(alpha=complex(re, 0.5))
        fixed = storage_fidelity(p, inp, ProtocolSpec(tau=tau_wm / p.omega_m))
        opt = storage_fidelity(p, inp, ProtocolSpec(
            tau=tau_wm / p.omega_m, rotation_compensation=RotationMode.NUMERIC_OPTIMIZE))
        assert opt.F >= fixed.F - 1e-9

    def test_isotropic_state_unchanged_by_rotation(self):
        s = gaussian_thermal(2.0)
        r = rotate(s, 1.234)
        np.testing.assert_allclose(r.cov, s.cov, atol=1e-15)
        assert fidelity(r, s).F == pytest.approx(fidelity(s, s).F, rel=1e-14)

    def test_optimal_rotation_recovers_angle(self):
        s = gaussian_of_pure(1.0 + 0.5j, 0.3)
        theta = optimal_rotation(rotate(s, -0.7), s)
        assert theta == pytest.approx(0.7, abs=1e-6)

    def test_noiseless_fidelity_decreases_with_storage(self):
        p = drum(noise=NoiseSpec())
        taus = np.linspace(0, 2e-4, 12)
        F = [storage_fidelity(p, InputState(), ProtocolSpec(tau=t)).F for t in taus]
        assert np.all(np.diff(F) <= 1e-12)

    def test_fidelity_decreases_with_linewidth(self):
        p = drum()
        spec = drum_spec(p)
        F = [storage_fidelity(p.with_(Gamma_L=g), InputState(), spec).F
             for g in np.linspace(0, 1e4, 11)]
        assert np.all(np.diff(F) <= 0)

    def test_white_limit_of_colored_noise(self):
        p = drum()
        gc = 50 * max(p.kappa, p.G)
        colored = storage_fidelity(p.with_(gamma_c=gc), InputState(), drum_spec(p)).F
        white = storage_fidelity(p.with_(gamma_c=0.0, mode=NoiseMode.WHITE_EXACT),
                                 InputState(), drum_spec(p)).F
        assert abs(colored - white) <= 0.01

    def test_explicit_cooling_pulse(self):
        p = drum(noise=NoiseSpec())
        spec = drum_spec(p)
        start = cooled_start(InputState(), p, spec)
        assert start.is_physical()
        assert start.cov[0, 0] < 0.3
        np.testing.assert_array_equal(start.optical_mean, [1.0, 0.0])
        hot = storage_fidelity(p, InputState(mechanical_cooled=False), spec).F
        pre = storage_fidelity(p, InputState(mechanical_cooled=False),
                               ProtocolSpec(tau=spec.tau, cooling_prepulse=True)).F
        assert pre > hot

    def test_store_noise_switch_lowers_fidelity(self):
        p = drum()
        on = storage_fidelity(p, InputState(), ProtocolSpec(tau=1e-5, phase_noise_in_store=True))
        off = storage_fidelity(p, InputState(), ProtocolSpec(tau=1e-5))
        assert on.F < off.F
