"""Points of the torus R^2/Z^2 and of its universal cover."""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np


class PlanePoint(NamedTuple):
    x: float
    y: float


class TorusPoint(NamedTuple):
    x: float
    y: float


def reduce_mod1(value: float) -> float:
    r = value - math.floor(value)
    # floor-based remainder can round up to exactly 1.0 for tiny negatives
    return 0.0 if r >= 1.0 else r


def reduce_mod1_array(values: np.ndarray) -> np.ndarray:
    r = values - np.floor(values)
    r[r >= 1.0] = 0.0
    return r


def project(p) -> TorusPoint:
    x, y = p
    if not (math.isfinite(x) and math.isfinite(y)):
        raise ValueError(f"cannot project non-finite point {p!r}")
    return TorusPoint(reduce_mod1(x), reduce_mod1(y))


def deck_translate(p, v) -> PlanePoint:
    return PlanePoint(p[0] + v[0], p[1] + v[1])


def torus_displacement(p, q) -> tuple[float, float]:
    """Minimal-image difference ``q - p``, each component in [-1/2, 1/2]."""
    dx = q[0] - p[0]
    dy = q[1] - p[1]
    return dx - round(dx), dy - round(dy)


def torus_distance(p, q) -> float:
    dx, dy = torus_displacement(p, q)
    return math.hypot(dx, dy)
