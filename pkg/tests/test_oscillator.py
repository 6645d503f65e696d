import math

import numpy as np
import pytest

from canon_avg.oracle import integrate, l2_distance
from canon_avg.oscillator import (
    DriveProfile,
    ExactDrivenOscillator,
    HermiteBasis,
    abrupt_shifted_coefficients,
    derivative_ladder,
    eigenfunction,
    eigenfunctions,
    exact_coefficients,
    exact_expansions,
    exact_solution,
    hermite,
    matrix_elements,
    oscillator_problem,
    position_matrix,
)
from canon_avg.quadrature import integrate_complex

SQ2 = math.sqrt(2.0)


class TestHermite:
    def test_base_cases(self):
        x = np.linspace(-2, 2, 7)
        assert np.allclose(hermite(0, x), 1.0)
        assert np.allclose(hermite(1, x), 2 * x)
        assert np.allclose(hermite(3, x), 8 * x ** 3 - 12 * x)

    def test_negative_order(self):
        with pytest.raises(ValueError):
            hermite(-1, 0.0)
        with pytest.raises(ValueError):
            eigenfunction(-1, 0.0)

    def test_generating_function(self):
        for x in np.linspace(-2, 2, 9):
            for z in (-0.5, -0.1, 0.3, 0.5):
                series = sum(z ** k * hermite(k, x) / math.factorial(k) for k in range(40))
                assert abs(series - math.exp(2 * x * z - z * z)) < 1e-10

    def test_normalized_recurrence_matches_polynomials(self):
        x = np.linspace(-3, 3, 11)
        psi = eigenfunctions(12, x)
        for n in range(12):
            ref = hermite(n, x) * np.exp(-x * x / 2) / math.sqrt(2.0 ** n * math.factorial(n) * math.sqrt(math.pi))
            assert np.allclose(psi[n], ref, atol=1e-13)

    def test_ground_normalized(self):
        assert HermiteBasis(1).project(lambda x: eigenfunction(0, x))[0] == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("shift", [0.0, 0.7, -1.3])
    def test_gram_orthonormal(self, shift):
        assert np.max(np.abs(HermiteBasis(40, shift).gram() - np.eye(40))) < 1e-8

    def test_no_overflow_at_high_order(self):
        assert np.all(np.isfinite(eigenfunctions(120, np.linspace(-15, 15, 301))))


class TestMatrixElements:
    def test_abrupt_entries(self):
        V = matrix_elements("abrupt", 4).entries
        assert V[0, 1] == pytest.approx(-1 / SQ2) and V[1, 0] == pytest.approx(-1 / SQ2)

    def test_position_matrix_by_quadrature(self):
        N = 10
        basis = HermiteBasis(N)
        Xq = np.column_stack([basis.project(lambda x, n=n: x * eigenfunction(n, x)) for n in range(N)])
        assert np.max(np.abs(Xq - position_matrix(N))) < 1e-12

    def test_adiabatic_ground_column(self):
        drive = DriveProfile.gaussian_adiabatic(1.0, 7.0, 1.5)
        eps = 0.1
        cp = matrix_elements("adiabatic", 5, drive)
        t = 75.0
        xi_dot = drive.xi_dot(t, eps)
        assert eps * cp.at(t, eps)[1, 0] == pytest.approx(-1j * xi_dot / SQ2)
        assert np.all(cp.at(t, eps)[2:, 0] == 0)

    def test_resonant_ladder_amplitude(self):
        e1 = 0.1
        cp = matrix_elements("harmonic_resonant", 4, DriveProfile.sinusoidal(e1, 1.0, math.pi / 2))
        f = cp.entries[0, 1]
        assert np.allclose(np.abs(e1 * f.amplitudes), e1 / (2 * SQ2))

    def test_harmonic_evaluates_to_minus_sin_x(self):
        nu, p = 2.0, 0.4
        cp = matrix_elements("harmonic_nonresonant", 5, DriveProfile.sinusoidal(0.1, nu, p))
        for t in (0.0, 0.3, 2.1):
            assert np.allclose(cp.at(t, 0.1), -math.sin(nu * t + p) * position_matrix(5), atol=1e-14)

    def test_unknown_scenario(self):
        with pytest.raises(ValueError):
            matrix_elements("quartic", 4)

    def test_hermitian(self):
        L = derivative_ladder(6)
        assert np.allclose(L, L.conj().T)

    def test_coupling_matches_time_derivative_of_hamiltonian(self):
        # v_mn = (i / w_mn) (dH/dt)_mn in the instantaneous basis, with dH/dt = -xi_dot x
        drive = DriveProfile.gaussian_adiabatic(1.0, 7.0, 1.5)
        eps = 0.1
        N = 8
        cp = matrix_elements("adiabatic", N, drive)
        for t in (40.0, 65.0, 70.0, 83.0):
            xi, xi_dot = float(drive.xi(t, eps)), float(drive.xi_dot(t, eps))
            basis = HermiteBasis(N, shift=xi)
            dH = np.column_stack([
                basis.project(lambda x, n=n: -xi_dot * x * eigenfunction(n, x, xi)) for n in range(N)
            ])
            n = np.arange(N)
            w = n[:, None] - n[None, :]
            with np.errstate(divide="ignore", invalid="ignore"):
                v = np.where(w != 0, 1j * dH / w, 0.0)
            want = eps * cp.at(t, eps)
            assert np.max(np.abs(v - want)) < 1e-6


class TestDrives:
    def test_gaussian_soft_switch_enforced(self):
        with pytest.raises(ValueError, match="softly"):
            DriveProfile.gaussian_adiabatic(1.0, 2.0, 1.0)

    def test_custom_soft_switch_flag(self):
        with pytest.raises(ValueError):
            DriveProfile.custom(lambda s: 1.0 + s, lambda s: 1.0, soft_switch=True)

    def test_sinusoid_needs_frequency(self):
        with pytest.raises(ValueError):
            DriveProfile.sinusoidal(0.1, 0.0)

    def test_slow_drive_needs_epsilon(self):
        with pytest.raises(ValueError):
            DriveProfile.gaussian_adiabatic(1.0, 7.0).xi(1.0)


def quad_delta(drive, t, eps=None):
    return integrate_complex(lambda z: -1j / SQ2 * drive.xi(z, eps) * np.exp(1j * z), 0.0, t, period=2 * math.pi,
                             tol=1e-12)


class TestExactSolution:
    @pytest.mark.parametrize("drive", [
        DriveProfile.abrupt_constant(0.2),
        DriveProfile.sinusoidal(0.1, 2.0),
        DriveProfile.sinusoidal(0.1, 0.5, 0.3),
        DriveProfile.sinusoidal(0.1, 1.0, math.pi / 2),
    ], ids=["abrupt", "nu2", "nu05-phase", "resonant"])
    def test_closed_form_delta_and_phase_against_quadrature(self, drive):
        ex = ExactDrivenOscillator(drive)
        for t in (0.7, 5.0, 23.4):
            d, phi = ex.delta_phi(t)
            assert abs(d - quad_delta(drive, t)) < 1e-9
            phi_q = integrate_complex(lambda z: ex.delta(z) ** 2 * np.exp(-2j * z), 0.0, t, period=math.pi, tol=1e-12)
            assert abs(phi - phi_q) < 1e-9

    def test_slow_delta_against_quadrature(self):
        drive = DriveProfile.gaussian_adiabatic(1.0, 7.0, 1.5)
        ex = ExactDrivenOscillator(drive, 0.1)
        t = np.array([10.0, 70.0, 120.0])
        got = ex.delta(t)
        for ti, g in zip(t, got):
            assert abs(g - quad_delta(drive, ti, 0.1)) < 1e-9

    def test_zero_drive(self):
        x = np.linspace(-3, 3, 13)
        t = 1.7
        psi = exact_solution(DriveProfile.sinusoidal(0.0, 2.0), x, t)
        assert np.allclose(psi, math.pi ** -0.25 * np.exp(-0.5j * t - x * x / 2), atol=1e-15)

    def test_initial_state(self):
        c = exact_coefficients(DriveProfile.sinusoidal(0.1, 2.0), 0.0, 6)
        assert np.allclose(c[0], np.eye(6)[0])
        assert ExactDrivenOscillator(DriveProfile.sinusoidal(0.1, 2.0)).delta(0.0) == 0

    def test_abrupt_shifted_projection(self):
        eps, N = 0.3, 12
        ex = ExactDrivenOscillator(DriveProfile.abrupt_constant(eps))
        basis = HermiteBasis(N, shift=eps)
        a = abrupt_shifted_coefficients(eps, N)
        n = np.arange(N)
        for t in (0.0, 1.1, 6.0):
            proj = basis.project(lambda x: ex.wavefunction(x, t))
            want = a * np.exp(-1j * (n + 0.5 - eps * eps / 2) * t)
            assert np.max(np.abs(proj - want)) < 1e-8
        assert np.allclose(np.abs(a), eps ** n / np.sqrt(2.0 ** n * np.array([math.factorial(k) for k in n])) *
                           math.exp(-eps * eps / 4))

    def test_abrupt_transition_probability(self):
        eps = 0.1
        a = abrupt_shifted_coefficients(eps, 4)
        assert abs(a[1]) ** 2 == pytest.approx(eps * eps * math.exp(-eps * eps / 2) / 2, abs=1e-15)

    def test_unperturbed_projection_matches_coefficients(self):
        drive = DriveProfile.sinusoidal(0.3, 2.0)
        ex = ExactDrivenOscillator(drive)
        N, t = 14, 3.3
        proj = HermiteBasis(N).project(lambda x: ex.wavefunction(x, t))
        c = ex.coefficients(t, N)[0] * np.exp(-1j * (np.arange(N) + 0.5) * t)
        assert np.max(np.abs(proj - c)) < 1e-10

    def test_instantaneous_projection_matches_coefficients(self):
        drive = DriveProfile.gaussian_adiabatic(1.0, 7.0, 1.5)
        eps = 0.1
        ex = ExactDrivenOscillator(drive, eps)
        N, t = 14, 72.0
        xi = float(drive.xi(t, eps))
        proj = HermiteBasis(N, shift=xi).project(lambda x: ex.wavefunction(x, t))
        theta = (np.arange(N) + 0.5) * t - ex.xi_square_integral(t)[0]
        c = ex.coefficients(t, N, "instantaneous")[0] * np.exp(-1j * theta)
        assert np.max(np.abs(proj - c)) < 1e-8

    def test_norm(self):
        for drive, eps, T in ((DriveProfile.sinusoidal(0.5, 1.0, math.pi / 2), None, 20.0),
                              (DriveProfile.gaussian_adiabatic(1.0, 7.0, 1.5), 0.1, 140.0)):
            c = exact_coefficients(drive, np.linspace(0, T, 9), 40, epsilon=eps)
            assert np.max(np.abs(np.sum(np.abs(c) ** 2, axis=1) - 1)) < 1e-8

    @pytest.mark.parametrize("scenario,drive,eps,T", [
        ("abrupt", DriveProfile.abrupt_constant(0.2), 0.2, 5.0),
        ("harmonic_nonresonant", DriveProfile.sinusoidal(0.1, 0.5), 0.1, 10.0),
        ("harmonic_resonant", DriveProfile.sinusoidal(0.1, 1.0, math.pi / 2), 0.1, 40.0),
        ("adiabatic", DriveProfile.gaussian_adiabatic(1.0, 7.0, 1.5), 0.1, 140.0),
    ])
    def test_oracle_agrees(self, scenario, drive, eps, T):
        N = 24
        P = oscillator_problem(scenario, N, eps, drive)
        t = np.linspace(0, T, 200)
        traj = integrate(P, T, t_eval=t)
        assert np.max(l2_distance(traj.states, exact_coefficients(drive, t, N, epsilon=eps))) < 1e-8

    def test_custom_slow_drive_oracle(self):
        fn = lambda tau: 0.8 * np.sin(tau) ** 3
        dfn = lambda tau: 2.4 * np.sin(tau) ** 2 * np.cos(tau)
        drive = DriveProfile.custom(fn, dfn, soft_switch=True)
        eps, N, T = 0.1, 14, 30.0
        P = oscillator_problem("adiabatic", N, eps, drive)
        t = np.linspace(0, T, 50)
        traj = integrate(P, T, t_eval=t)
        assert np.max(l2_distance(traj.states, exact_coefficients(drive, t, N, epsilon=eps))) < 1e-8


class TestExpansions:
    def test_nonresonant_expansion_error_second_order(self):
        errs = []
        for e1 in (0.1, 0.05):
            drive = DriveProfile.sinusoidal(e1, 2.0)
            t = np.linspace(0, 1 / e1, 400)
            errs.append(np.max(l2_distance(exact_coefficients(drive, t, 8), exact_expansions(drive, t, 8))))
        assert math.log(errs[0] / errs[1], 2) == pytest.approx(2.0, abs=0.25)

    def test_resonant_expansion_first_order(self):
        drive = DriveProfile.sinusoidal(0.01, 1.0, math.pi / 2)
        t = np.linspace(0, 400, 400)
        assert np.max(l2_distance(exact_coefficients(drive, t, 16), exact_expansions(drive, t, 16))) < 0.02

    def test_adiabatic_expansion_error_second_order(self):
        errs = []
        for eps in (0.1, 0.05):
            drive = DriveProfile.gaussian_adiabatic(1.0, 7.0, 1.5)
            t = np.linspace(0, 14 / eps, 600)
            errs.append(np.max(l2_distance(exact_coefficients(drive, t, 8, epsilon=eps),
                                           exact_expansions(drive, t, 8, epsilon=eps))))
        assert math.log(errs[0] / errs[1], 2) == pytest.approx(2.0, abs=0.3)

    def test_no_expansion(self):
        with pytest.raises(ValueError):
            exact_expansions(DriveProfile.abrupt_constant(0.1), [1.0], 4)
