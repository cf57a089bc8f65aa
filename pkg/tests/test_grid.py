import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import canonical_lattice, lattice_contains, lift_subgroup_oracle
from toruslab.grid import (
    GridOpenSet,
    compare,
    components,
    is_connected,
    is_regular,
    lattice_basis,
    perp,
    primitive,
    regularize,
    simply_connected_lift_check,
    winding_class,
)


@st.composite
def grid_sets(draw, sizes=(8, 16, 32)):
    N = draw(st.sampled_from(sizes))
    density = draw(st.floats(0.05, 0.95))
    seed = draw(st.integers(0, 2**32 - 1))
    return GridOpenSet(N, np.random.default_rng(seed).random((N, N)) < density)


def block(N, i0, i1, j0, j1):
    return GridOpenSet.from_cells(N, [(i, j) for i in range(i0, i1) for j in range(j0, j1)])


class TestBasics:
    def test_measure_and_membership(self):
        U = GridOpenSet.from_rows(8, [0, 1])
        assert U.measure == pytest.approx(0.25) and len(U) == 16
        assert (3, 1) in U and (3, 2) not in U
        assert U.contains_point((0.99, 0.2)) and not U.contains_point((0.5, 0.3))

    def test_out_of_range_cell(self):
        with pytest.raises(ValueError):
            GridOpenSet.from_cells(4, [(4, 0)])

    def test_resolution_mismatch(self):
        with pytest.raises(ValueError):
            GridOpenSet.empty(4) | GridOpenSet.empty(8)

    @given(grid_sets())
    def test_json_and_pgm_roundtrip(self, U):
        assert GridOpenSet.from_json(U.to_json()) == U
        assert GridOpenSet.from_pgm(U.to_pgm()) == U

    def test_pgm_header(self):
        data = GridOpenSet.from_cells(4, [(0, 3)]).to_pgm()
        assert data.startswith(b"P5\n4 4\n255\n")
        assert data[len(b"P5\n4 4\n255\n")] == 255  # top-left pixel is (0, N-1)


class TestPerp:
    def test_examples(self):
        assert perp(GridOpenSet.full(8)) == GridOpenSet.empty(8)
        assert perp(GridOpenSet.empty(8)) == GridOpenSet.full(8)
        assert len(perp(GridOpenSet.from_cells(8, [(0, 0)]))) == 55
        assert (1, 1) not in perp(GridOpenSet.from_cells(8, [(0, 0)]))
        assert (7, 7) not in perp(GridOpenSet.from_cells(8, [(0, 0)]))

    @given(grid_sets())
    def test_triple_perp(self, U):
        assert perp(perp(perp(U))) == perp(U)

    @given(grid_sets(), st.integers(0, 2**32 - 1))
    def test_antitone(self, U, seed):
        V = U | GridOpenSet(U.N, np.random.default_rng(seed).random((U.N, U.N)) < 0.2)
        assert perp(V) <= perp(U)

    @given(grid_sets())
    def test_disjoint_from_set(self, U):
        assert not (perp(U) & U)


class TestRegularize:
    def test_examples(self):
        strip = GridOpenSet.from_rows(8, [2, 3])
        assert regularize(strip) == strip
        holed = block(8, 1, 6, 1, 6) - GridOpenSet.from_cells(8, [(3, 3)])
        assert regularize(holed) == block(8, 1, 6, 1, 6)
        assert regularize(GridOpenSet.empty(8)) == GridOpenSet.empty(8)

    @given(grid_sets())
    def test_idempotent_and_extensive(self, U):
        R = regularize(U)
        assert regularize(R) == R
        assert U <= R
        assert is_regular(R)

    def test_compare_boundary_layer(self):
        U = GridOpenSet.from_rows(16, [4, 5, 6, 7])
        assert compare(U, U) == "equal"
        assert compare(U, GridOpenSet.from_rows(16, [4, 5, 6, 7, 8])) == "boundary"
        assert compare(U, GridOpenSet.from_rows(16, [12])) == "different"


class TestComponents:
    def test_examples(self):
        two = GridOpenSet.from_rows(8, [0, 1, 4, 5])
        comps = components(two)
        assert len(comps) == 2
        assert comps[0] == GridOpenSet.from_rows(8, [0, 1])
        assert components(GridOpenSet.empty(8)) == []

    def test_wraparound_glues(self):
        U = GridOpenSet.from_cells(8, [(0, 3), (7, 3)])
        assert len(components(U)) == 1

    def test_corner_contact_is_not_connected(self):
        U = GridOpenSet.from_cells(8, [(2, 2), (3, 3)])
        assert len(components(U)) == 2

    @given(grid_sets(sizes=(8, 16)))
    def test_partition(self, U):
        comps = components(U)
        total = GridOpenSet.empty(U.N)
        for C in comps:
            assert is_connected(C)
            assert not (total & C)
            total = total | C
        assert total == U
        mins = [C.sorted_cells()[0] for C in comps]
        assert mins == sorted(mins)


class TestWinding:
    def test_examples(self):
        strip = GridOpenSet.from_rows(8, [2])
        assert winding_class(strip).kind == "winding"
        assert winding_class(strip).directions == ((1, 0),)
        assert winding_class(GridOpenSet.from_cells(8, [(3, 3)])).kind == "elementary"
        stairs = GridOpenSet.from_cells(8, [c for k in range(8) for c in ((k, k), ((k + 1) % 8, k))])
        assert is_connected(stairs)
        wc = winding_class(stairs)
        assert wc.kind == "winding" and wc.directions == ((1, 1),)

    def test_vertical_and_full(self):
        assert winding_class(GridOpenSet.from_columns(8, [5])).directions == ((0, 1),)
        full = winding_class(GridOpenSet.full(4))
        assert set(full.directions) == {(0, 1), (1, 0)}

    def test_undetermined_when_generator_leaves_window(self):
        # a staircase of class (3, 1) cannot close up inside a window of radius 2
        N = 12
        cells = set()
        for j in range(N):
            for i in range(3 * j, 3 * j + 4):
                cells.add((i % N, j))
        C = GridOpenSet.from_cells(N, cells)
        assert is_connected(C)
        assert winding_class(C, window=2).kind == "winding-undetermined"
        assert winding_class(C, window=3).directions == ((3, 1),)

    def test_rejects_disconnected(self):
        with pytest.raises(ValueError):
            winding_class(GridOpenSet.from_rows(8, [0, 4]))

    @given(grid_sets(sizes=(6, 8)))
    def test_agrees_with_voltage_oracle(self, U):
        for C in components(U):
            basis = lift_subgroup_oracle(C.mask)
            wc = winding_class(C, window=2)
            if wc.kind == "elementary":
                assert basis == ()
            elif wc.kind == "winding":
                for g in wc.generators:
                    assert lattice_contains(basis, g)
                if all(max(abs(x) for x in b) <= 2 for b in basis):
                    assert canonical_lattice(wc.generators) == basis
            else:
                assert basis != ()
                assert any(max(abs(x) for x in b) > 2 for b in basis)

    def test_lattice_basis(self):
        assert lattice_basis([(2, 0), (0, 2), (1, 1)]) == sorted([(1, 1), (2, 0)])
        assert lattice_basis([(0, 0)]) == []
        assert primitive((-4, -2)) == (2, 1)


class TestSimplyConnected:
    def test_strip(self):
        assert simply_connected_lift_check(GridOpenSet.from_rows(8, [0, 1]))

    def test_annulus(self):
        ring = block(8, 2, 5, 2, 5) - GridOpenSet.from_cells(8, [(3, 3)])
        assert is_connected(ring)
        assert not simply_connected_lift_check(ring)

    def test_invariant_strips_lift_without_holes(self):
        for C in components(GridOpenSet.from_rows(8, [0, 1, 4, 5])):
            assert simply_connected_lift_check(C)
