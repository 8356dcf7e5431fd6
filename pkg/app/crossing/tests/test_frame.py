"""
Tests for the two-level crossing algebra.
"""

import math

import numpy as np
from core.exceptions import CrossingModelError
from crossing.frame import (
    CrossingFrame,
    dressed_pair,
    effective_sweep_moment,
    mixing_angle,
    rabi_frequency,
    rf_induced_crossings,
    static_hamiltonian,
    transition_moment,
    transition_moment_braket,
    transition_moment_closed_form,
)
from django.test import SimpleTestCase
from hypothesis import given
from hypothesis import strategies as st
from manifold.loader import fixture_path, load_manifold
from manifold.units import MU_B_MHZ_PER_G, TWO_PI

OMEGA_A = 13.3321


def make_frame(delta=0.0, omega=1.0, mu1=0.0, mu2=2.8, b0=1001.4):
    """Create and return a frame."""
    return CrossingFrame(delta=delta, omega=omega, mu1=mu1, mu2=mu2, b0=b0)


class FrameTests(SimpleTestCase):
    """Test frame construction."""

    def test_invalid_frames(self):
        """Test zero coupling and equal moments are rejected."""
        with self.assertRaises(CrossingModelError):
            make_frame(omega=0.0)
        with self.assertRaises(CrossingModelError):
            make_frame(mu1=1.0, mu2=1.0)

    def test_from_crossing(self):
        """Test a manifold crossing gives a frame that is zero-detuned at B0."""
        crossing = load_manifold(fixture_path("crossing_a.cfg")).crossing("A")

        frame = CrossingFrame.from_crossing(crossing)
        shifted = CrossingFrame.from_crossing(crossing, 1002.4)

        self.assertEqual(frame.delta, 0.0)
        self.assertAlmostEqual(shifted.delta, 2.8, places=9)
        self.assertAlmostEqual(shifted.field, 1002.4, places=9)
        self.assertEqual(frame.detuning(1001.4), 0.0)


class MixingAngleTests(SimpleTestCase):
    """Test the mixing angle."""

    def test_symmetric_at_crossing(self):
        """Test theta is pi/4 at the crossing."""
        self.assertAlmostEqual(mixing_angle(make_frame()), math.pi / 4, places=15)

    def test_asymptotic(self):
        """Test theta approaches pi/2 and 0 far from the crossing."""
        self.assertAlmostEqual(mixing_angle(make_frame(delta=1e9)), math.pi / 2, places=8)
        self.assertAlmostEqual(mixing_angle(make_frame(delta=-1e9)), 0.0, places=8)

    def test_sqrt3_detuning(self):
        """Test delta = sqrt(3) Omega gives arctan(2 + sqrt(3)) = 75 degrees."""
        theta = mixing_angle(make_frame(delta=math.sqrt(3.0)))

        self.assertAlmostEqual(theta, math.atan(2.0 + math.sqrt(3.0)), places=13)
        self.assertAlmostEqual(math.degrees(theta), 75.0, places=10)

    @given(st.floats(-1e4, 1e4))
    def test_matches_arctan_expression(self, delta):
        """Test the stable form equals the arctan expression."""
        omega = 1.7
        expected = math.atan((delta + math.sqrt(delta**2 + omega**2)) / omega)

        self.assertAlmostEqual(mixing_angle(make_frame(delta=delta, omega=omega)), expected, delta=1e-9)


class DressedPairTests(SimpleTestCase):
    """Test the static eigen-decomposition."""

    def test_minimal_splitting(self):
        """Test the splitting equals Omega at the crossing."""
        pair = dressed_pair(make_frame(omega=OMEGA_A))

        self.assertAlmostEqual(pair.splitting, 13.33210, places=12)

    def test_splitting_at_delta_equal_omega(self):
        """Test the splitting is sqrt(2) Omega at delta = Omega."""
        frame = make_frame(delta=2.5, omega=2.5)
        pair = dressed_pair(frame)
        numeric = np.linalg.eigvalsh(static_hamiltonian(frame))

        self.assertAlmostEqual(pair.splitting, math.sqrt(2.0) * 2.5, places=12)
        self.assertAlmostEqual(pair.e_upper, numeric[1], places=10)
        self.assertAlmostEqual(pair.e_lower, numeric[0], places=10)

    @given(st.floats(-500.0, 500.0), st.floats(0.01, 100.0), st.floats(-5.0, 5.0), st.floats(-5.0, 5.0))
    def test_states_diagonalize(self, delta, omega, mu1, mu2):
        """Test the dressed states are orthonormal and diagonalize the Hamiltonian."""
        if abs(mu2 - mu1) < 1e-2:
            return
        frame = make_frame(delta=delta, omega=omega, mu1=mu1, mu2=mu2)
        pair = dressed_pair(frame)
        basis = np.column_stack([pair.state_upper, pair.state_lower])
        hamiltonian = np.array([[-delta / 2, omega / 2], [omega / 2, delta / 2]])
        rotated = basis.T @ hamiltonian @ basis

        np.testing.assert_allclose(basis.T @ basis, np.eye(2), atol=1e-14)
        self.assertLess(abs(rotated[0, 1]), 1e-12 * max(omega, abs(delta)) + 1e-12 * omega)
        self.assertGreaterEqual(pair.splitting, omega * (1 - 1e-15))


class TransitionMomentTests(SimpleTestCase):
    """Test the transition moment."""

    def test_peak_and_half_width(self):
        """Test the peak is mu2 - mu1 with half maximum at delta = +-sqrt(3) Omega."""
        omega = 3.0

        peak = transition_moment(make_frame(omega=omega))
        left = transition_moment(make_frame(delta=-math.sqrt(3.0) * omega, omega=omega))
        right = transition_moment(make_frame(delta=math.sqrt(3.0) * omega, omega=omega))

        self.assertAlmostEqual(peak, 2.8, places=14)
        self.assertLess(abs(left / 1.4 - 1.0), 1e-9)
        self.assertLess(abs(right / 1.4 - 1.0), 1e-9)

    def test_tail(self):
        """Test the moment at delta = 10 Omega and the 1/|B - B0| tail."""
        self.assertLess(abs(transition_moment(make_frame(delta=10.0)) / (2.8 / math.sqrt(101.0)) - 1.0), 1e-12)
        self.assertAlmostEqual(2.8 / math.sqrt(101.0) / 2.8, 0.0995, places=4)

        for delta in (1e3, 1e4, 1e5):
            expected = 2.8 * 1.0 / math.sqrt(delta**2 + 1.0)
            self.assertLess(abs(transition_moment(make_frame(delta=delta)) / expected - 1.0), 1e-9)
            self.assertLess(abs(transition_moment(make_frame(delta=delta)) * delta / 2.8 - 1.0), 1e-6)

    @given(st.floats(-50.0, 50.0))
    def test_factor_two_relation(self, delta):
        """Test the closed form is exactly twice the bra-ket evaluation."""
        frame = make_frame(delta=delta, omega=1.3, mu1=0.4, mu2=2.1)

        closed = transition_moment_closed_form(frame)
        braket = transition_moment_braket(frame)

        self.assertLess(abs(closed / (2.0 * braket) - 1.0), 1e-12)
        self.assertLess(abs(transition_moment(frame) / closed - 1.0), 1e-12)

    @given(st.floats(0.0, 100.0), st.floats(0.0, 100.0))
    def test_even_and_monotone(self, first, second):
        """Test the moment is even in delta and decreasing in |delta|."""
        near, far = sorted((first, second))

        self.assertEqual(transition_moment(make_frame(delta=near)), transition_moment(make_frame(delta=-near)))
        self.assertGreaterEqual(transition_moment(make_frame(delta=near)), transition_moment(make_frame(delta=far)))

    def test_negative_moment_difference(self):
        """Test the sign of mu2 - mu1 is kept in the moment."""
        self.assertAlmostEqual(transition_moment(make_frame(mu1=2.8, mu2=0.0)), -2.8, places=14)


class RabiFrequencyTests(SimpleTestCase):
    """Test the Rabi frequency."""

    def test_zero_amplitude(self):
        """Test no drive gives zero."""
        self.assertEqual(rabi_frequency(make_frame(), 0.0), 0.0)

    def test_fifty_milligauss_bohr_magneton(self):
        """Test 50 mG on a one Bohr magneton moment gives about 2 pi x 70 kHz."""
        frame = make_frame(mu1=0.0, mu2=MU_B_MHZ_PER_G)

        omega_r = rabi_frequency(frame, 0.05)

        self.assertAlmostEqual(omega_r / TWO_PI, 0.0699812, places=7)

    def test_linear_in_amplitude(self):
        """Test doubling the amplitude doubles the frequency."""
        frame = make_frame(delta=0.7)

        self.assertAlmostEqual(rabi_frequency(frame, 0.1), 2.0 * rabi_frequency(frame, 0.05), places=14)

    def test_negative_amplitude_rejected(self):
        """Test negative amplitudes are rejected."""
        with self.assertRaises(CrossingModelError):
            rabi_frequency(make_frame(), -0.01)


class RfInducedCrossingTests(SimpleTestCase):
    """Test rf-induced crossing geometry."""

    def test_tangent(self):
        """Test f_rf = Omega touches at B0."""
        self.assertEqual(rf_induced_crossings(make_frame(omega=OMEGA_A), OMEGA_A), (1001.4,))

    def test_crossing_a_blue_detuned(self):
        """Test 13.6 MHz on crossing A gives two fields 2.686/|mu2 - mu1| from B0."""
        frame = make_frame(omega=13.332)

        upper, lower = rf_induced_crossings(frame, 13.6)

        offset = math.sqrt(13.6**2 - 13.332**2) / 2.8
        self.assertAlmostEqual(math.sqrt(13.6**2 - 13.332**2), 2.686, places=3)
        self.assertAlmostEqual(upper, 1001.4 + offset, places=12)
        self.assertAlmostEqual(lower, 1001.4 - offset, places=12)

    def test_red_detuned(self):
        """Test f_rf below Omega gives no crossing."""
        self.assertEqual(rf_induced_crossings(make_frame(omega=OMEGA_A), 10.0), ())

    @given(st.floats(0.01, 50.0), st.floats(1.0001, 20.0), st.floats(-5.0, 5.0))
    def test_symmetric_about_b0(self, omega, ratio, delta_mu):
        """Test the two fields are symmetric about B0 and sit where the splitting matches."""
        if abs(delta_mu) < 1e-2:
            return
        frame = make_frame(omega=omega, mu1=0.0, mu2=delta_mu, b0=500.0)
        f_rf = omega * ratio

        upper, lower = rf_induced_crossings(frame, f_rf)

        self.assertLess(abs((upper - 500.0) - (500.0 - lower)), 1e-12 * 500.0)
        self.assertAlmostEqual(frame.splitting(upper), f_rf, delta=1e-9 * f_rf)

    def test_effective_sweep_moment(self):
        """Test the dressed-gap slope at the rf-induced crossing."""
        frame = make_frame(omega=3.0, mu1=0.0, mu2=2.0, b0=100.0)
        upper, _ = rf_induced_crossings(frame, 5.0)
        step = 1e-6

        numeric = (frame.splitting(upper + step) - frame.splitting(upper - step)) / (2 * step)

        self.assertAlmostEqual(effective_sweep_moment(frame, 5.0), numeric, places=6)
        self.assertEqual(effective_sweep_moment(frame, 2.0), 0.0)
