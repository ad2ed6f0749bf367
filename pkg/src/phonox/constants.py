"""Physical constants and unit helpers used across the toolkit.

All internal quantities are SI: lengths in m, (angular) frequencies in
rad/s, capacitances in F, energies in J.  Rates are displayed as
``value / 2π`` in Hz by the reporting layer only.
"""

import math

HBAR = 1.054571817e-34  # J s
EPS0 = 8.8541878128e-12  # F/m
C0 = 299792458.0  # m/s

TWO_PI = 2.0 * math.pi


def to_hz(omega: float) -> float:
    """Angular frequency (rad/s) -> cyclic frequency (Hz)."""
    return omega / TWO_PI


def from_hz(f: float) -> float:
    """Cyclic frequency (Hz) -> angular frequency (rad/s)."""
    return f * TWO_PI
