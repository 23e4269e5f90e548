"""Unit conventions and conversions.

Internal frequencies are angular (rad/ms) everywhere in this package.
User-facing numbers (config files, CSV columns, plot axes) are ordinary
frequencies in kHz, with nu = omega / 2 pi. Times are in ms, so 1 kHz = 1/ms
and no extra factors appear in the conversions.

Magnetic fields are expressed directly in their kHz equivalents through the
fixed conversion 0.7 kHz/mG (10 mG = 7 kHz).
"""

import math

TWO_PI = 2.0 * math.pi

GYROMAGNETIC_KHZ_PER_MG = 0.7


def khz_to_angular(nu_khz):
    """Ordinary frequency in kHz to angular frequency in rad/ms."""
    return TWO_PI * nu_khz


def angular_to_khz(omega):
    """Angular frequency in rad/ms to ordinary frequency in kHz."""
    return omega / TWO_PI


def field_mg_to_khz(b_mg):
    """Magnetic field in mG to its ordinary-frequency equivalent in kHz."""
    return GYROMAGNETIC_KHZ_PER_MG * b_mg
