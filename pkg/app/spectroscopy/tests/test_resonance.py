"""
Tests for resonant-transfer scans and peak extraction.
"""

import math

import numpy as np
from core.exceptions import PreconditionError, SpectroscopyError
from crossing.frame import CrossingFrame
from django.test import SimpleTestCase
from dynamics.integrator import RWA, propagate
from dynamics.schedule import PulseSchedule, RampSegment, RfDrive
from dynamics.state import QuantumState
from manifold.loader import fixture_path, load_manifold
from spectroscopy.records import NoiseModel, ResonanceScan
from spectroscopy.resonance import (
    LINESHAPE,
    peak_frequency,
    pi_pulse_length_ms,
    rabi_lineshape,
    simulate_resonance_scan,
)

CROSSING_A = CrossingFrame(delta=0.0, omega=13.3321, mu1=0.0, mu2=2.8, b0=1001.4)


def crossing_e():
    """Load and return the frame of crossing E from the path fixture."""
    manifold = load_manifold(fixture_path("fig1_path.cfg"))
    return CrossingFrame.from_crossing(manifold.crossing("E"))


class SimulateScanTests(SimpleTestCase):
    """Test simulated scans."""

    def test_resonant_pi_pulse(self):
        """Test a pi pulse on resonance transfers everything."""
        pulse = pi_pulse_length_ms(CROSSING_A, 1001.4, 0.001)
        grid = 13.3321 + np.array([-0.01, 0.0, 0.01])

        scan = simulate_resonance_scan(CROSSING_A, 1001.4, pulse, 0.001, grid)

        self.assertAlmostEqual(scan.transfer[1], 1.0, places=12)

    def test_rabi_formula(self):
        """Test the transfer follows the Rabi lineshape, e.g. detuning w gives 0.5 sin^2(pi / sqrt 2)."""
        pulse = pi_pulse_length_ms(CROSSING_A, 1001.4, 0.001)
        coupling = 0.5 / (1000.0 * pulse)
        grid = 13.3321 + coupling * np.linspace(-3.0, 3.0, 13)

        scan = simulate_resonance_scan(CROSSING_A, 1001.4, pulse, 0.001, grid)

        expected = rabi_lineshape(grid, 13.3321, coupling, 1.0, 1000.0 * pulse)
        np.testing.assert_allclose(scan.transfer, expected, atol=1e-12)
        self.assertAlmostEqual(scan.transfer[8], 0.5 * math.sin(math.pi / math.sqrt(2.0)) ** 2, places=12)

    def test_matches_rotating_frame_integration(self):
        """Test one grid point against the integrator in the rotating frame."""
        b_rf, f_rf, pulse = 0.01, 13.34, 0.004
        rf = RfDrive(amplitude_g=b_rf, frequency_mhz=f_rf)
        schedule = PulseSchedule.from_segments([RampSegment.hold(1001.4, pulse, rf=rf)])
        trace = propagate(QuantumState.dressed(CROSSING_A, 1001.4, "upper"), CROSSING_A, schedule, frame_mode=RWA)

        scan = simulate_resonance_scan(CROSSING_A, 1001.4, pulse, b_rf, [13.30, f_rf, 13.36])

        self.assertAlmostEqual(scan.transfer[1], trace.final.branch_population(CROSSING_A, 1001.4, "lower"), places=9)

    def test_grid_must_bracket_splitting(self):
        """Test a grid entirely above the splitting is rejected."""
        with self.assertRaises(SpectroscopyError):
            simulate_resonance_scan(CROSSING_A, 1001.4, 1.0, 0.001, np.linspace(13.34, 13.40, 11))

    def test_noise_lowers_contrast(self):
        """Test a field spread washes out the resonance."""
        pulse = pi_pulse_length_ms(CROSSING_A, 1001.6, 0.0002)
        splitting = CROSSING_A.splitting(1001.6)
        grid = np.linspace(splitting - 0.003, splitting + 0.003, 61)
        noise = NoiseModel(gradient_g_per_mm=2.0, cloud_diameter_mm=0.02, fluctuation_sigma_g=0.02)

        quiet = simulate_resonance_scan(CROSSING_A, 1001.6, pulse, 0.0002, grid)
        noisy = simulate_resonance_scan(CROSSING_A, 1001.6, pulse, 0.0002, grid, noise=noise)

        self.assertLess(noisy.transfer.max(), quiet.transfer.max())


class PeakFrequencyTests(SimpleTestCase):
    """Test peak extraction."""

    def test_crossing_e_at_b0(self):
        """Test a scan at the crossing field of E peaks at 2.36 MHz."""
        frame = crossing_e()
        b_rf = 5e-4 / abs(frame.delta_mu)
        pulse = pi_pulse_length_ms(frame, frame.b0, b_rf)

        scan = simulate_resonance_scan(frame, frame.b0, pulse, b_rf, np.linspace(2.35, 2.37, 201))
        peak = peak_frequency(scan)

        self.assertLess(abs(peak.value - 2.36), 1e-4)
        self.assertLess(peak.uncertainty, 1e-3)

    def test_symmetric_lineshape_gives_exact_center(self):
        """Test a lineshape centred on a grid point is found exactly."""
        grid = np.linspace(-1.0, 1.0, 21)
        scan = ResonanceScan(
            b_gauss=0.0,
            frequencies_mhz=grid,
            pulse_length_ms=1.0,
            b_rf_g=0.0,
            transfer=1.0 / (1.0 + 4.0 * grid**2),
        )

        self.assertAlmostEqual(peak_frequency(scan).value, 0.0, places=12)

    def test_crossing_a_scan(self):
        """Test a coarse scan around 13.33 MHz finds 13.331 within a few kHz."""
        pulse = 0.5
        b_rf = 0.5 / (1000.0 * pulse) / 2.8
        grid = np.arange(13.320, 13.3405, 0.001)

        scan = simulate_resonance_scan(CROSSING_A, 1001.4, pulse, b_rf, grid)
        peak = peak_frequency(scan)

        self.assertLess(abs(peak.value - 13.3321), 0.002)
        self.assertGreater(peak.uncertainty, 0.0)
        self.assertLess(peak.uncertainty, 0.005)

    def test_lineshape_fit(self):
        """Test the full lineshape fit recovers an off-grid centre."""
        pulse = 0.5
        b_rf = 0.5 / (1000.0 * pulse) / 2.8
        scan = simulate_resonance_scan(CROSSING_A, 1001.4, pulse, b_rf, np.arange(13.320, 13.3405, 0.0005))

        peak = peak_frequency(scan, method=LINESHAPE)

        self.assertLess(abs(peak.value - 13.3321), 1e-7)
        self.assertAlmostEqual(peak.details["amplitude"], 1.0, places=6)

    def test_edge_maximum(self):
        """Test a maximum on the first grid point is rejected."""
        grid = np.linspace(0.0, 1.0, 11)
        scan = ResonanceScan(b_gauss=0.0, frequencies_mhz=grid, pulse_length_ms=1.0, b_rf_g=0.0, transfer=1.0 - grid)

        with self.assertRaisesMessage(SpectroscopyError, "grid edge"):
            peak_frequency(scan)

    def test_flat_scan(self):
        """Test a scan without a peak is rejected."""
        grid = np.linspace(0.0, 1.0, 11)
        scan = ResonanceScan(
            b_gauss=0.0, frequencies_mhz=grid, pulse_length_ms=1.0, b_rf_g=0.0, transfer=np.zeros(11)
        )

        with self.assertRaisesMessage(SpectroscopyError, "flat"):
            peak_frequency(scan)

    def test_too_few_points(self):
        """Test at least five points are needed."""
        scan = ResonanceScan(
            b_gauss=0.0,
            frequencies_mhz=[0.0, 1.0, 2.0, 3.0],
            pulse_length_ms=1.0,
            b_rf_g=0.0,
            transfer=[0.1, 0.5, 0.4, 0.1],
        )

        with self.assertRaises(PreconditionError):
            peak_frequency(scan)

    def test_invalid_scan(self):
        """Test decreasing frequencies and out-of-range transfer are rejected."""
        with self.assertRaises(SpectroscopyError):
            ResonanceScan(b_gauss=0.0, frequencies_mhz=[2.0, 1.0], pulse_length_ms=1.0, b_rf_g=0.0, transfer=[0, 0])
        with self.assertRaises(SpectroscopyError):
            ResonanceScan(b_gauss=0.0, frequencies_mhz=[1.0, 2.0], pulse_length_ms=1.0, b_rf_g=0.0, transfer=[0, 2])
