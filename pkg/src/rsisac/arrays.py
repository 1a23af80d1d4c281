"""Uniform linear array geometry, steering vectors, and their angle derivatives.

Convention: broadside-referenced ULA with the phase reference at element 0,
so the steering vector at angle 0 is all ones. Transmit and receive arrays
share the element spacing (co-located monostatic platform) but may differ in
element count; a single angle parameterizes both.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

HALF_PI = np.pi / 2.0


@dataclass(frozen=True)
class ArrayGeometry:
    """Transmit/receive ULA sizes and element spacing in wavelengths."""

    num_tx: int
    num_rx: int
    spacing_wavelengths: float = 0.5

    def __post_init__(self) -> None:
        if self.num_tx < 1 or self.num_rx < 1:
            raise ValueError(
                f"array sizes must be >= 1, got num_tx={self.num_tx}, num_rx={self.num_rx}"
            )
        if not self.spacing_wavelengths > 0:
            raise ValueError(f"spacing_wavelengths must be > 0, got {self.spacing_wavelengths}")

    def size(self, side: str) -> int:
        if side == "tx":
            return self.num_tx
        if side == "rx":
            return self.num_rx
        raise ValueError(f"side must be 'tx' or 'rx', got {side!r}")


def _check_angle(angle: float) -> float:
    angle = float(angle)
    if not (-HALF_PI < angle < HALF_PI):
        raise ValueError(f"angle must lie in the open interval (-pi/2, pi/2), got {angle}")
    return angle


def steering(geometry: ArrayGeometry, side: str, angle: float) -> np.ndarray:
    """Unit-modulus steering vector; entry n is exp(j*2*pi*d*n*sin(angle))."""
    angle = _check_angle(angle)
    n = np.arange(geometry.size(side))
    return np.exp(1j * 2.0 * np.pi * geometry.spacing_wavelengths * n * np.sin(angle))


def steering_derivative(geometry: ArrayGeometry, side: str, angle: float) -> np.ndarray:
    """Entrywise angle derivative of :func:`steering` at the same angle."""
    angle = _check_angle(angle)
    n = np.arange(geometry.size(side))
    phase_rate = 2.0 * np.pi * geometry.spacing_wavelengths * n
    return 1j * phase_rate * np.cos(angle) * np.exp(1j * phase_rate * np.sin(angle))
