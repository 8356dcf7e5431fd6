"""
Unit system.

Field in gauss, energies as E/h in MHz, magnetic moments in MHz/G, schedule time
in ms and propagation time in us. With energies in MHz and time in us the phase
accumulated by an energy E over a time t is simply 2*pi*E*t, so no hbar appears
anywhere in the code.

Angular frequencies (Rabi frequencies) are in rad/us: an energy of f MHz
corresponds to 2*pi*f rad/us.
"""

import math

# Bohr magneton over Planck's constant.
MU_B_MHZ_PER_G = 1.399624

TWO_PI = 2.0 * math.pi

US_PER_MS = 1000.0

# Tolerance on crossing fields declared in manifold files.
B0_TOLERANCE_G = 1e-6


def ms_to_us(value_ms: float) -> float:
    return value_ms * US_PER_MS


def us_to_ms(value_us: float) -> float:
    return value_us / US_PER_MS


def g_per_ms_to_g_per_us(speed: float) -> float:
    return speed / US_PER_MS


def mhz_to_rad_per_us(frequency_mhz: float) -> float:
    return TWO_PI * frequency_mhz


def rad_per_us_to_mhz(omega: float) -> float:
    return omega / TWO_PI
