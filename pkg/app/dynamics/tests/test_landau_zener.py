"""
Tests for Landau-Zener predictions and the transition-moment fit.
"""

import math

import numpy as np
from core.exceptions import DegenerateDataError, DynamicsError, PreconditionError
from crossing.frame import CrossingFrame
from django.test import SimpleTestCase
from dynamics.integrator import LAB, propagate
from dynamics.landau_zener import (
    diabatic_jump_probability,
    extract_lz_fit,
    landau_zener_exponent,
    landau_zener_probability,
    static_crossing_lz,
)
from dynamics.schedule import PulseSchedule, RampSegment
from dynamics.state import QuantumState
from manifold.units import TWO_PI

ATAC_SWEEP_MOMENT = 2.8 * math.sqrt(13.6**2 - 13.3321**2) / 13.6


class PredictionTests(SimpleTestCase):
    """Test the closed-form probabilities."""

    def test_exponent_for_fifty_milligauss(self):
        """Test 70 kHz Rabi frequency at 1.3 G/ms on 2.8 MHz/G gives an exponent of about 13."""
        exponent = landau_zener_exponent(TWO_PI * 0.07, 1.3, 2.8)

        self.assertAlmostEqual(exponent, 13.287, delta=1e-3)
        self.assertGreater(landau_zener_probability(TWO_PI * 0.07, 1.3, 2.8), 0.999998)

    def test_sign_independent(self):
        """Test the direction of the sweep and the sign of the moment do not matter."""
        self.assertEqual(landau_zener_exponent(1.0, 2.0, 3.0), landau_zener_exponent(1.0, -2.0, -3.0))

    def test_no_drive(self):
        """Test a vanishing Rabi frequency never transfers."""
        self.assertEqual(landau_zener_probability(0.0, 1.0, 1.0), 0.0)

    def test_narrow_static_crossing_is_jumped(self):
        """Test a 5 kHz crossing swept at 100 G/ms is jumped diabatically."""
        frame = CrossingFrame(delta=0.0, omega=0.005, mu1=4.4, mu2=5.2, b0=380.0)

        self.assertAlmostEqual(diabatic_jump_probability(frame, 100.0), 0.99692, places=5)
        self.assertAlmostEqual(static_crossing_lz(frame, 100.0) + diabatic_jump_probability(frame, 100.0), 1.0)

    def test_invalid_inputs(self):
        """Test zero speed and zero moment are rejected."""
        with self.assertRaises(DynamicsError):
            landau_zener_exponent(1.0, 0.0, 1.0)
        with self.assertRaises(DynamicsError):
            landau_zener_exponent(1.0, 1.0, 0.0)


class SimulationAgreementTests(SimpleTestCase):
    """Test the Landau-Zener formula against the integrator."""

    def test_static_sweeps(self):
        """Test twenty linear sweeps with exponents from 0.1 to 5."""
        for index, exponent in enumerate(np.geomspace(0.1, 5.0, 20)):
            omega = (0.5, 1.0, 2.0)[index % 3]
            delta_mu = (1.0, 2.5)[index % 2]
            frame = CrossingFrame(delta=0.0, omega=omega, mu1=0.0, mu2=delta_mu, b0=500.0)
            speed_g_per_us = math.pi**2 * omega**2 / (delta_mu * exponent)
            half_width = 25.0 * omega / delta_mu
            segment = RampSegment.ramp(500.0 - half_width, 500.0 + half_width, 1000.0 * speed_g_per_us)

            start = QuantumState.dressed(frame, segment.b_start, "lower")
            trace = propagate(start, frame, PulseSchedule.from_segments([segment]), 1e-7, frame_mode=LAB)
            followed = trace.final.branch_population(frame, segment.b_end, "lower")

            with self.subTest(exponent=exponent):
                predicted = static_crossing_lz(frame, 1000.0 * speed_g_per_us)
                self.assertAlmostEqual(predicted, -math.expm1(-exponent), places=9)
                self.assertLess(abs(followed - predicted), 0.02)


def synthetic_efficiencies(b_rf, moment=2.7448, speed=1.3, dmu=ATAC_SWEEP_MOMENT):
    """Create and return efficiencies from the Landau-Zener model."""
    omega_r = TWO_PI * moment * np.asarray(b_rf)
    return np.array([landau_zener_probability(w, speed, dmu) for w in omega_r])


class ExtractLzFitTests(SimpleTestCase):
    """Test fitting the transition moment."""

    def setUp(self) -> None:
        self.b_rf = np.linspace(0.001, 0.008, 12)

    def test_noise_free_recovery(self):
        """Test exact data return the generating moment."""
        fit = extract_lz_fit(self.b_rf, synthetic_efficiencies(self.b_rf), 1.3, ATAC_SWEEP_MOMENT)

        self.assertLess(abs(fit.moment / 2.7448 - 1.0), 1e-8)
        self.assertEqual(fit.n_points, 12)
        np.testing.assert_allclose(fit.predict(self.b_rf), synthetic_efficiencies(self.b_rf), atol=1e-9)

    def test_noisy_recovery(self):
        """Test five percent multiplicative noise still recovers the moment."""
        rng = np.random.default_rng(7)
        b_rf = np.linspace(0.001, 0.008, 40)
        noisy = synthetic_efficiencies(b_rf) * (1.0 + 0.05 * rng.standard_normal(b_rf.size))

        fit = extract_lz_fit(b_rf, np.clip(noisy, 0.0, 1.0), 1.3, ATAC_SWEEP_MOMENT)

        self.assertLess(abs(fit.moment / 2.7448 - 1.0), 0.05)
        self.assertGreater(fit.stderr, 0.0)
        self.assertLess(abs(fit.moment - 2.7448), 4.0 * fit.stderr + 0.01)

    def test_saturated_data_rejected(self):
        """Test data stuck at full transfer are degenerate."""
        with self.assertRaises(DegenerateDataError):
            extract_lz_fit(self.b_rf, np.ones_like(self.b_rf), 1.3, ATAC_SWEEP_MOMENT)

    def test_zero_data_rejected(self):
        """Test data without any transfer are degenerate."""
        with self.assertRaises(DegenerateDataError):
            extract_lz_fit(self.b_rf, np.zeros_like(self.b_rf), 1.3, ATAC_SWEEP_MOMENT)

    def test_too_few_points(self):
        """Test a minimum number of points is required."""
        with self.assertRaises(PreconditionError):
            extract_lz_fit(self.b_rf[:4], synthetic_efficiencies(self.b_rf[:4]), 1.3, ATAC_SWEEP_MOMENT)
