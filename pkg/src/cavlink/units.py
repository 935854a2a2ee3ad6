"""Angular/cyclic frequency conversions.

The library works in angular frequency (rad/s) internally; anything read off
an instrument or written to a file is cyclic frequency in Hz (f = omega/2pi).
"""

import math

TWO_PI = 2.0 * math.pi


def hz_to_angular(f):
    """Hz -> rad/s. Works on scalars and numpy arrays."""
    return TWO_PI * f


def angular_to_hz(omega):
    """rad/s -> Hz. Works on scalars and numpy arrays."""
    return omega / TWO_PI
