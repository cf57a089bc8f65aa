"""Closed polygonal loops on the torus and in the plane.

A loop is stored through one lift: vertices ``v_0, ..., v_m`` in the plane with
``v_m = v_0 + h`` for an integer vector ``h``, its homotopy class.  All
incidence tests run in exact rational arithmetic; floats are converted to
``Fraction`` without rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .linear import IntVec

CLOSE_TOL = 1e-9


def _frac(v) -> Fraction:
    if isinstance(v, Fraction):
        return v
    if isinstance(v, float) and not math.isfinite(v):
        raise ValueError("non-finite coordinate")
    return Fraction(v)


@dataclass(frozen=True)
class PolyLoop:
    vertices: tuple[tuple[Fraction, Fraction], ...]
    klass: IntVec

    @classmethod
    def from_vertices(cls, vertices: Sequence) -> "PolyLoop":
        pts = tuple((_frac(x), _frac(y)) for x, y in vertices)
        if not pts:
            raise ValueError("a loop needs at least one vertex")
        hx = pts[-1][0] - pts[0][0]
        hy = pts[-1][1] - pts[0][1]
        rx, ry = round(hx), round(hy)
        if abs(hx - rx) > CLOSE_TOL or abs(hy - ry) > CLOSE_TOL:
            raise ValueError(f"loop is not closed mod Z^2: displacement ({float(hx)}, {float(hy)})")
        if len(pts) > 1:
            # snap the last vertex so the closure is exact
            pts = pts[:-1] + ((pts[0][0] + rx, pts[0][1] + ry),)
        for a, b in zip(pts, pts[1:]):
            if a == b:
                raise ValueError("consecutive vertices must be distinct")
        return cls(pts, IntVec(int(rx), int(ry)))

    @classmethod
    def straight(cls, start, h) -> "PolyLoop":
        return cls.from_vertices([start, (_frac(start[0]) + h[0], _frac(start[1]) + h[1])])

    def segments(self):
        return list(zip(self.vertices, self.vertices[1:]))

    def translated(self, v) -> "PolyLoop":
        dx, dy = _frac(v[0]), _frac(v[1])
        return PolyLoop(tuple((x + dx, y + dy) for x, y in self.vertices), self.klass)

    def to_json(self) -> dict:
        return {"vertices": [[float(x), float(y)] for x, y in self.vertices], "class": list(self.klass)}

    @classmethod
    def from_json(cls, doc) -> "PolyLoop":
        verts = doc["vertices"] if isinstance(doc, dict) else doc
        return cls.from_vertices(verts)


def homotopy_class(loop: PolyLoop) -> IntVec:
    return loop.klass


def concatenate(gamma: PolyLoop, sigma: PolyLoop) -> PolyLoop:
    """``gamma`` followed by ``sigma``; their base points must agree mod Z^2."""
    end = gamma.vertices[-1]
    start = sigma.vertices[0]
    dx, dy = end[0] - start[0], end[1] - start[1]
    if dx.denominator != 1 or dy.denominator != 1:
        raise ValueError("loops do not share a base point on the torus")
    tail = sigma.translated((dx, dy)).vertices[1:]
    return PolyLoop.from_vertices(gamma.vertices + tail)


# -------------------------------------------------------------- geometry


def _orient(a, b, c) -> int:
    v = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    return (v > 0) - (v < 0)


def _on_segment(a, b, p) -> bool:
    return min(a[0], b[0]) <= p[0] <= max(a[0], b[0]) and min(a[1], b[1]) <= p[1] <= max(a[1], b[1])


def segments_intersect(p1, p2, q1, q2) -> bool:
    """Closed segments ``[p1, p2]`` and ``[q1, q2]`` share a point."""
    if p1 == p2 or q1 == q2:
        raise ValueError("degenerate segment")
    o1, o2 = _orient(p1, p2, q1), _orient(p1, p2, q2)
    o3, o4 = _orient(q1, q2, p1), _orient(q1, q2, p2)
    if o1 != o2 and o3 != o4:
        return True
    return (
        (o1 == 0 and _on_segment(p1, p2, q1))
        or (o2 == 0 and _on_segment(p1, p2, q2))
        or (o3 == 0 and _on_segment(q1, q2, p1))
        or (o4 == 0 and _on_segment(q1, q2, p2))
    )


def loops_intersect(gamma: PolyLoop, sigma: PolyLoop) -> bool:
    """Whether the images of the two loops on the torus meet.

    Each segment of the lift of ``gamma`` is tested against every deck
    translate of every segment of the lift of ``sigma`` whose bounding box can
    reach it; the set of candidate translates is finite, so the answer is
    conclusive.
    """
    gs, ss = gamma.segments(), sigma.segments()
    if not gs or not ss:
        raise ValueError("constant loops have no segments")
    for a, b in gs:
        ax0, ax1 = min(a[0], b[0]), max(a[0], b[0])
        ay0, ay1 = min(a[1], b[1]), max(a[1], b[1])
        for c, d in ss:
            cx0, cx1 = min(c[0], d[0]), max(c[0], d[0])
            cy0, cy1 = min(c[1], d[1]), max(c[1], d[1])
            for vx in range(math.ceil(ax0 - cx1), math.floor(ax1 - cx0) + 1):
                for vy in range(math.ceil(ay0 - cy1), math.floor(ay1 - cy0) + 1):
                    if segments_intersect(a, b, (c[0] + vx, c[1] + vy), (d[0] + vx, d[1] + vy)):
                        return True
    return False


def _quadrant(dx, dy) -> int:
    if dx > 0 and dy >= 0:
        return 0
    if dx <= 0 and dy > 0:
        return 1
    if dx < 0 and dy <= 0:
        return 2
    return 3


def winding_number(loop, p) -> int:
    """Winding number of a closed plane polygon around ``p`` by quadrant counting.

    ``loop`` is a :class:`PolyLoop` of class (0, 0) or a vertex sequence, which
    is closed implicitly.
    """
    if isinstance(loop, PolyLoop):
        if not loop.klass.is_zero():
            raise ValueError("winding number needs a loop closed in the plane")
        verts = list(loop.vertices)
    else:
        verts = [(_frac(x), _frac(y)) for x, y in loop]
    if verts[0] != verts[-1]:
        verts.append(verts[0])
    px, py = _frac(p[0]), _frac(p[1])
    for a, b in zip(verts, verts[1:]):
        if a != b and _orient(a, b, (px, py)) == 0 and _on_segment(a, b, (px, py)):
            raise ValueError("point lies on the loop")
        if a == b == (px, py):
            raise ValueError("point lies on the loop")
    total = 0
    for a, b in zip(verts, verts[1:]):
        qa = _quadrant(a[0] - px, a[1] - py)
        qb = _quadrant(b[0] - px, b[1] - py)
        delta = (qb - qa) % 4
        if delta == 3:
            delta = -1
        elif delta == 2:
            # opposite quadrants: the side of p decides the sense
            delta = 2 if _orient(a, b, (px, py)) > 0 else -2
        total += delta
    return total // 4


# ------------------------------------------------------------ generators


def random_loop(rng: np.random.Generator, klass, n_vertices: int = 5, jitter: float = 0.15,
                start=None, denominator: int = 1024) -> PolyLoop:
    """Polygonal loop of the given class with rational vertices near the straight lift."""
    hx, hy = int(klass[0]), int(klass[1])
    if start is None:
        start = rng.random(2)
    x0 = Fraction(int(start[0] * denominator), denominator)
    y0 = Fraction(int(start[1] * denominator), denominator)
    verts = [(x0, y0)]
    for k in range(1, n_vertices - 1):
        t = Fraction(k, n_vertices - 1)
        jx, jy = (rng.random(2) * 2 - 1) * jitter
        verts.append((x0 + t * hx + Fraction(int(jx * denominator), denominator),
                      y0 + t * hy + Fraction(int(jy * denominator), denominator)))
    verts.append((x0 + hx, y0 + hy))
    cleaned = [verts[0]]
    for v in verts[1:]:
        if v != cleaned[-1]:
            cleaned.append(v)
    return PolyLoop.from_vertices(cleaned)


def _random_class(rng: np.random.Generator, bound: int) -> IntVec:
    while True:
        h = IntVec(*(int(v) for v in rng.integers(-bound, bound + 1, 2)))
        if not h.is_zero():
            return h


def independent_pair(rng: np.random.Generator, bound: int = 3, n_vertices: int = 5):
    """Two random loops whose classes are linearly independent."""
    while True:
        h1, h2 = _random_class(rng, bound), _random_class(rng, bound)
        if h1.p * h2.q - h1.q * h2.p != 0:
            break
    return random_loop(rng, h1, n_vertices), random_loop(rng, h2, n_vertices)


def parallel_pair(rng: np.random.Generator, bound: int = 2, n_vertices: int = 4, jitter: float = 0.05):
    """A random loop and a translate of it; both have the same class."""
    h = _random_class(rng, bound)
    gamma = random_loop(rng, h, n_vertices, jitter=jitter)
    offset = rng.random(2)
    offset = (Fraction(int(offset[0] * 1024), 1024), Fraction(int(offset[1] * 1024), 1024))
    return gamma, gamma.translated(offset)
