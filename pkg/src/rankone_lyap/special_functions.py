"""Exponent of the uniform measure on the sphere, via exact half-integer digamma."""

from __future__ import annotations

import math
from dataclasses import dataclass

EULER_GAMMA = 0.57721566490153286061


def digamma_half_integer(two_z: int) -> float:
    """``Psi(two_z / 2)`` from the harmonic closed forms, summed in ascending order."""
    if int(two_z) != two_z or two_z < 1:
        raise ValueError(f"two_z must be a positive integer, got {two_z!r}")
    two_z = int(two_z)
    if two_z % 2 == 0:
        m = two_z // 2
        s = 0.0
        for k in range(1, m):
            s += 1.0 / k
        return -EULER_GAMMA + s
    m = two_z // 2
    s = 0.0
    for k in range(1, m + 1):
        s += 1.0 / (2 * k - 1)
    return -EULER_GAMMA - 2.0 * math.log(2.0) + 2.0 * s


@dataclass(frozen=True)
class SphereResult:
    d: int
    exact_value: float
    asymptotic_value: float


def sphere_lyapunov(d: int) -> SphereResult:
    """Exponent of ``u u^T`` with ``u`` uniform on the unit sphere of ``R^d``."""
    if int(d) != d or d < 2:
        raise ValueError(f"dimension must be an integer >= 2, got {d!r}")
    d = int(d)
    exact = -(digamma_half_integer(d) + EULER_GAMMA + math.log(4.0)) / 2.0
    asym = -0.5 * (math.log(d) + EULER_GAMMA + math.log(2.0))
    return SphereResult(d, exact, asym)


__all__ = ["EULER_GAMMA", "SphereResult", "digamma_half_integer", "sphere_lyapunov"]
