from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from toruslab.loops import (
    PolyLoop,
    concatenate,
    homotopy_class,
    independent_pair,
    loops_intersect,
    parallel_pair,
    random_loop,
    segments_intersect,
    winding_number,
)

SQUARE = [(0, 0), (1, 0), (1, 1), (0, 1), (0, 0)]
classes = st.tuples(st.integers(-3, 3), st.integers(-3, 3))


def test_homotopy_class_examples():
    assert homotopy_class(PolyLoop.straight((0, 0), (1, 0))) == (1, 0)
    assert homotopy_class(PolyLoop.from_vertices([(0.3, 0.4)])) == (0, 0)
    assert homotopy_class(PolyLoop.straight((0, 0), (2, 3))) == (2, 3)


def test_vertex_insertion_keeps_class():
    loop = PolyLoop.from_vertices([(0, 0), (Fraction(1, 3), Fraction(1, 7)), (1, 0)])
    assert homotopy_class(loop) == (1, 0)


def test_rejects_open_and_degenerate():
    with pytest.raises(ValueError):
        PolyLoop.from_vertices([(0, 0), (0.5, 0.2)])
    with pytest.raises(ValueError):
        PolyLoop.from_vertices([(0, 0), (0, 0), (1, 0)])
    with pytest.raises(ValueError):
        segments_intersect((0, 0), (0, 0), (1, 1), (2, 2))


def test_float_closure_is_snapped():
    loop = PolyLoop.from_vertices([(0.1, 0.2), (0.6, 0.4), (1.1 + 1e-12, 0.2)])
    assert loop.klass == (1, 0)
    assert loop.vertices[-1][0] - loop.vertices[0][0] == 1


def test_intersection_examples():
    h = PolyLoop.straight((0, 0), (1, 0))
    assert loops_intersect(h, PolyLoop.straight((0, 0), (0, 1)))
    assert not loops_intersect(PolyLoop.straight((0, 0.2), (1, 0)), PolyLoop.straight((0, 0.7), (1, 0)))
    assert loops_intersect(h, PolyLoop.straight((0, 0), (1, 1)))


def test_intersection_needs_deck_translates():
    a = PolyLoop.straight((Fraction(1, 2), Fraction(1, 2)), (0, 1))
    b = PolyLoop.straight((Fraction(5, 2), Fraction(-7, 3)), (1, 0))
    assert loops_intersect(a, b)


def test_winding_number_examples():
    assert winding_number(SQUARE, (0.5, 0.5)) == 1
    assert winding_number(SQUARE, (2, 2)) == 0
    assert winding_number(SQUARE + SQUARE[1:], (0.5, 0.5)) == 2
    assert winding_number(list(reversed(SQUARE)), (0.5, 0.5)) == -1
    with pytest.raises(ValueError):
        winding_number(SQUARE, (0.5, 0.0))


@given(st.floats(-3, 3), st.floats(-3, 3))
def test_winding_number_of_triangle(px, py):
    tri = [(0, 0), (2, 0), (0, 2)]
    inside = px > 0 and py > 0 and px + py < 2
    on_edge = (px == 0 and 0 <= py <= 2) or (py == 0 and 0 <= px <= 2) or (px + py == 2 and 0 <= px <= 2)
    if on_edge:
        return
    assert winding_number(tri, (px, py)) == int(inside)


@given(classes, classes, st.integers(0, 2**32 - 1))
def test_class_additive_under_concatenation(h1, h2, seed):
    rng = np.random.default_rng(seed)
    g = random_loop(rng, h1, 4) if h1 != (0, 0) else PolyLoop.from_vertices([(0, 0), (0.5, 0.25), (0, 0)])
    s = random_loop(rng, h2, 4, start=(float(g.vertices[0][0]), float(g.vertices[0][1])))
    s = s.translated((g.vertices[0][0] - s.vertices[0][0], g.vertices[0][1] - s.vertices[0][1]))
    assert homotopy_class(concatenate(g, s)) == (h1[0] + h2[0], h1[1] + h2[1])


@given(st.integers(0, 2**32 - 1))
def test_independent_classes_intersect(seed):
    g, s = independent_pair(np.random.default_rng(seed))
    assert g.klass.p * s.klass.q != g.klass.q * s.klass.p
    assert loops_intersect(g, s)


def test_parallel_pairs_share_class():
    g, s = parallel_pair(np.random.default_rng(1))
    assert g.klass == s.klass


def test_json_roundtrip():
    loop = random_loop(np.random.default_rng(3), (2, -1))
    assert PolyLoop.from_json(loop.to_json()).klass == (2, -1)
