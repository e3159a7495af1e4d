"""Heisenberg group arithmetic in exponential coordinates and the box distance.

Scalar functions operate on :class:`HPoint`; the ``*_many`` variants take
``(n, 3)`` arrays and are used by the sampling-heavy checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np


class _Coords(NamedTuple):
    x: float
    y: float
    z: float


class HPoint(_Coords):
    """Immutable group element ``(x, y, z)``; coordinates must be finite."""

    __slots__ = ()

    def __new__(cls, x: float, y: float, z: float) -> "HPoint":
        x, y, z = float(x), float(y), float(z)
        if not (math.isfinite(x) and math.isfinite(y) and math.isfinite(z)):
            raise ValueError(f"non-finite coordinates: {(x, y, z)}")
        return super().__new__(cls, x, y, z)

    def __mul__(self, other):  # type: ignore[override]
        if isinstance(other, HPoint):
            return mul(self, other)
        return NotImplemented

    def __rmul__(self, other):  # type: ignore[override]
        return NotImplemented


ORIGIN = HPoint(0.0, 0.0, 0.0)


@dataclass(frozen=True)
class VerticalNorm:
    """Normalization ``v(s) = kappa * sqrt(s)`` of the vertical sub-Riemannian length."""

    kappa: float = 1.0

    def __post_init__(self) -> None:
        if not (self.kappa > 0 and math.isfinite(self.kappa)):
            raise ValueError("kappa must be a positive finite number")


CC_KAPPA = 2.0 / math.sqrt(math.pi)


def mul(p: HPoint, q: HPoint) -> HPoint:
    return HPoint(p.x + q.x, p.y + q.y, p.z + q.z + 0.5 * (p.x * q.y - p.y * q.x))


def inv(p: HPoint) -> HPoint:
    return HPoint(-p.x, -p.y, -p.z)


def dilate(lam: float, p: HPoint) -> HPoint:
    if not lam > 0:
        raise ValueError("dilation factor must be positive")
    return HPoint(lam * p.x, lam * p.y, lam * lam * p.z)


def box_distance(p: HPoint, q: HPoint) -> float:
    """Norm of ``q^-1 * p``: ``max(|dx|, |dy|, sqrt|z1 - z2 + (x1 y2 - x2 y1)/2|)``.

    The bracket sign is the one that makes the distance invariant under left
    translations for the group law of :func:`mul`.
    """
    dz = p.z - q.z + 0.5 * (p.x * q.y - q.x * p.y)
    return max(abs(p.x - q.x), abs(p.y - q.y), math.sqrt(abs(dz)))


def box_norm(p: HPoint) -> float:
    return max(abs(p.x), abs(p.y), math.sqrt(abs(p.z)))


def projection(p: HPoint) -> tuple[float, float]:
    return (p.x, p.y)


def is_central(p: HPoint) -> bool:
    return p.x == 0.0 and p.y == 0.0


def vertical_cc(s: float, norm: VerticalNorm = VerticalNorm()) -> float:
    """Sub-Riemannian length from 0 to ``(0, 0, s)``."""
    if s < 0:
        raise ValueError("vertical height must be nonnegative")
    return norm.kappa * math.sqrt(s)


# -- vectorized helpers -----------------------------------------------------

def as_array(points) -> np.ndarray:
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(1, 3)
    if arr.shape[-1] != 3:
        raise ValueError("expected points with three coordinates")
    return arr


def mul_many(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    p, q = as_array(p), as_array(q)
    out = p + q
    out[..., 2] += 0.5 * (p[..., 0] * q[..., 1] - p[..., 1] * q[..., 0])
    return out


def box_distance_many(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Elementwise box distance with numpy broadcasting over leading axes."""
    p, q = np.asarray(p, dtype=float), np.asarray(q, dtype=float)
    dz = p[..., 2] - q[..., 2] + 0.5 * (p[..., 0] * q[..., 1] - q[..., 0] * p[..., 1])
    return np.maximum(
        np.maximum(np.abs(p[..., 0] - q[..., 0]), np.abs(p[..., 1] - q[..., 1])),
        np.sqrt(np.abs(dz)),
    )


def box_distance_matrix(p: np.ndarray, q: np.ndarray | None = None) -> np.ndarray:
    p = as_array(p)
    q = p if q is None else as_array(q)
    return box_distance_many(p[:, None, :], q[None, :, :])
