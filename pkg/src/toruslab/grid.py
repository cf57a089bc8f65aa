"""Open subsets of the torus at finite grid resolution.

A :class:`GridOpenSet` at resolution ``N`` is a set of cells ``(i, j)``, cell
``(i, j)`` being the open square ``(i/N, (i+1)/N) x (j/N, (j+1)/N)``; ``i``
indexes x and ``j`` indexes y.  The closure of a set is its 8-neighbour
dilation on the toroidal grid, so ``perp`` (complement of the closure) and
``regularize`` (``perp`` twice) are purely combinatorial.  Connectivity of the
open set itself is 4-connectivity: two open squares that share only a corner
do not form a connected set.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np
from scipy import ndimage
from scipy.cluster.hierarchy import DisjointSet

from .linear import IntVec

_FOUR = ndimage.generate_binary_structure(2, 1)
_EIGHT = ndimage.generate_binary_structure(2, 2)


class GridOpenSet:
    """Immutable set of open grid cells at resolution ``N``."""

    __slots__ = ("N", "_mask", "_hash")

    def __init__(self, N: int, mask: np.ndarray):
        if N < 1:
            raise ValueError("resolution must be positive")
        mask = np.array(mask, dtype=bool)
        if mask.shape != (N, N):
            raise ValueError(f"mask shape {mask.shape} does not match resolution {N}")
        mask.setflags(write=False)
        self.N = N
        self._mask = mask
        self._hash = None

    # construction
    @classmethod
    def empty(cls, N: int) -> "GridOpenSet":
        return cls(N, np.zeros((N, N), dtype=bool))

    @classmethod
    def full(cls, N: int) -> "GridOpenSet":
        return cls(N, np.ones((N, N), dtype=bool))

    @classmethod
    def from_cells(cls, N: int, cells: Iterable[tuple[int, int]]) -> "GridOpenSet":
        mask = np.zeros((N, N), dtype=bool)
        for i, j in cells:
            if not (0 <= i < N and 0 <= j < N):
                raise ValueError(f"cell {(i, j)} out of range for N={N}")
            mask[i, j] = True
        return cls(N, mask)

    @classmethod
    def from_rows(cls, N: int, rows: Iterable[int]) -> "GridOpenSet":
        """Full horizontal strips: every cell whose y-index is in ``rows``."""
        mask = np.zeros((N, N), dtype=bool)
        mask[:, [j % N for j in rows]] = True
        return cls(N, mask)

    @classmethod
    def from_columns(cls, N: int, cols: Iterable[int]) -> "GridOpenSet":
        mask = np.zeros((N, N), dtype=bool)
        mask[[i % N for i in cols], :] = True
        return cls(N, mask)

    # access
    @property
    def mask(self) -> np.ndarray:
        return self._mask

    @property
    def cells(self) -> frozenset[tuple[int, int]]:
        return frozenset((int(i), int(j)) for i, j in np.argwhere(self._mask))

    def sorted_cells(self) -> list[tuple[int, int]]:
        return [(int(i), int(j)) for i, j in np.argwhere(self._mask)]

    @property
    def measure(self) -> float:
        return float(self._mask.sum()) / self.N**2

    def __len__(self) -> int:
        return int(self._mask.sum())

    def __bool__(self) -> bool:
        return bool(self._mask.any())

    def __contains__(self, cell) -> bool:
        i, j = cell
        return bool(self._mask[i, j])

    def __eq__(self, other) -> bool:
        if not isinstance(other, GridOpenSet):
            return NotImplemented
        return self.N == other.N and np.array_equal(self._mask, other._mask)

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.N, np.packbits(self._mask).tobytes()))
        return self._hash

    def __repr__(self) -> str:
        return f"GridOpenSet(N={self.N}, cells={len(self)})"

    def _check(self, other: "GridOpenSet"):
        if other.N != self.N:
            raise ValueError(f"resolution mismatch: {self.N} vs {other.N}")

    def __or__(self, other: "GridOpenSet") -> "GridOpenSet":
        self._check(other)
        return GridOpenSet(self.N, self._mask | other._mask)

    def __and__(self, other: "GridOpenSet") -> "GridOpenSet":
        self._check(other)
        return GridOpenSet(self.N, self._mask & other._mask)

    def __sub__(self, other: "GridOpenSet") -> "GridOpenSet":
        self._check(other)
        return GridOpenSet(self.N, self._mask & ~other._mask)

    def __le__(self, other: "GridOpenSet") -> bool:
        self._check(other)
        return not (self._mask & ~other._mask).any()

    def complement(self) -> "GridOpenSet":
        return GridOpenSet(self.N, ~self._mask)

    def is_full(self) -> bool:
        return bool(self._mask.all())

    def contains_point(self, p) -> bool:
        i = int(math.floor(p[0] * self.N)) % self.N
        j = int(math.floor(p[1] * self.N)) % self.N
        return bool(self._mask[i, j])

    # serialisation
    def to_json(self) -> dict:
        """Run-length encoding: ``rows[j]`` lists ``[start, length]`` runs of member ``i``."""
        rows = []
        for j in range(self.N):
            col = self._mask[:, j]
            runs, i = [], 0
            while i < self.N:
                if col[i]:
                    start = i
                    while i < self.N and col[i]:
                        i += 1
                    runs.append([start, i - start])
                else:
                    i += 1
            rows.append(runs)
        return {"N": self.N, "rows": rows}

    @classmethod
    def from_json(cls, doc) -> "GridOpenSet":
        if isinstance(doc, str):
            doc = json.loads(doc)
        N = int(doc["N"])
        if len(doc["rows"]) != N:
            raise ValueError("RLE must contain exactly N rows")
        mask = np.zeros((N, N), dtype=bool)
        for j, runs in enumerate(doc["rows"]):
            for start, length in runs:
                if start < 0 or length < 0 or start + length > N:
                    raise ValueError(f"run {(start, length)} out of range in row {j}")
                mask[start : start + length, j] = True
        return cls(N, mask)

    def to_pgm(self) -> bytes:
        """Binary P5 image, one pixel per cell, 255 = member; top image row is j = N-1."""
        pixels = np.where(self._mask.T[::-1], 255, 0).astype(np.uint8)
        return f"P5\n{self.N} {self.N}\n255\n".encode("ascii") + pixels.tobytes()

    @classmethod
    def from_pgm(cls, data: bytes) -> "GridOpenSet":
        tokens, pos = [], 0
        while len(tokens) < 4:
            while data[pos : pos + 1].isspace():
                pos += 1
            start = pos
            while not data[pos : pos + 1].isspace():
                pos += 1
            tokens.append(data[start:pos].decode("ascii"))
        pos += 1
        magic, w, h, maxval = tokens
        if magic != "P5" or w != h or int(maxval) != 255:
            raise ValueError("expected a square 8-bit P5 image")
        N = int(w)
        pixels = np.frombuffer(data[pos : pos + N * N], dtype=np.uint8).reshape(N, N)
        return cls(N, pixels[::-1].T > 127)


# ------------------------------------------------------------- morphology


def dilate8(mask: np.ndarray) -> np.ndarray:
    out = mask.copy()
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di or dj:
                out |= np.roll(mask, (di, dj), axis=(0, 1))
    return out


def closure_cells(U: GridOpenSet) -> GridOpenSet:
    return GridOpenSet(U.N, dilate8(U.mask))


def perp(U: GridOpenSet) -> GridOpenSet:
    """Complement of the closure."""
    return GridOpenSet(U.N, ~dilate8(U.mask))


def regularize(U: GridOpenSet) -> GridOpenSet:
    return perp(perp(U))


def is_regular(U: GridOpenSet) -> bool:
    return regularize(U) == U


def boundary_layer(U: GridOpenSet) -> np.ndarray:
    """Cells adjacent (8-neighbourhood) to the boundary of ``U``, on either side."""
    m = U.mask
    return dilate8(m) & dilate8(~m)


def compare(A: GridOpenSet, B: GridOpenSet) -> str:
    """``"equal"``, ``"boundary"`` (differ only next to either boundary) or ``"different"``."""
    A._check(B)
    diff = A.mask ^ B.mask
    if not diff.any():
        return "equal"
    if not (diff & ~(boundary_layer(A) | boundary_layer(B))).any():
        return "boundary"
    return "different"


# ------------------------------------------------------------- components


def _periodic_labels(mask: np.ndarray, structure=_FOUR) -> tuple[np.ndarray, int]:
    """Connected-component labels on the torus, 1-based and ordered by minimal cell."""
    labels, n = ndimage.label(mask, structure=structure)
    if n == 0:
        return labels, 0
    ds = DisjointSet(range(1, n + 1))
    N0, N1 = mask.shape
    # glue across the two wrap seams (and the corner seams for 8-connectivity)
    pairs = [(labels[-1, :], labels[0, :]), (labels[:, -1], labels[:, 0])]
    if structure is _EIGHT:
        pairs += [
            (labels[-1, :], np.roll(labels[0, :], 1)),
            (labels[-1, :], np.roll(labels[0, :], -1)),
            (labels[:, -1], np.roll(labels[:, 0], 1)),
            (labels[:, -1], np.roll(labels[:, 0], -1)),
        ]
    for a, b in pairs:
        both = (a > 0) & (b > 0)
        for la, lb in zip(a[both], b[both]):
            ds.merge(int(la), int(lb))
    # canonical relabel by first cell in row-major (i, j) order
    remap, out = {}, np.zeros_like(labels)
    flat = labels.ravel()
    for idx in np.flatnonzero(flat):
        root = ds[int(flat[idx])]
        if root not in remap:
            remap[root] = len(remap) + 1
    lut = np.zeros(n + 1, dtype=labels.dtype)
    for lab in range(1, n + 1):
        lut[lab] = remap[ds[lab]]
    out = lut[labels]
    return out, len(remap)


def components(U: GridOpenSet) -> list[GridOpenSet]:
    labels, n = _periodic_labels(U.mask)
    return [GridOpenSet(U.N, labels == k) for k in range(1, n + 1)]


def is_connected(U: GridOpenSet) -> bool:
    return _periodic_labels(U.mask)[1] == 1


# -------------------------------------------------------- lattice helpers


def lattice_basis(vectors: Iterable) -> list[IntVec]:
    """Triangular basis of the subgroup of Z^2 generated by ``vectors``."""
    # row reduction on (p, q) pairs: first vector with minimal |q|, then q = 0 part
    vs = [(int(p), int(q)) for p, q in vectors if (p, q) != (0, 0)]
    if not vs:
        return []
    top = None
    rest_p = 0
    for p, q in vs:
        if top is None:
            if q == 0:
                rest_p = math.gcd(rest_p, p)
                continue
            top = (p, q)
            continue
        # euclid on the q-coordinates of top and (p, q)
        a, b = top, (p, q)
        while b[1] != 0:
            k = a[1] // b[1]
            a, b = b, (a[0] - k * b[0], a[1] - k * b[1])
        rest_p = math.gcd(rest_p, b[0])
        top = a
    basis = []
    if top is not None:
        p, q = top
        if q < 0:
            p, q = -p, -q
        if rest_p:
            p %= rest_p
        basis.append(IntVec(p, q))
    if rest_p:
        basis.append(IntVec(abs(rest_p), 0))
    return sorted(basis)


def primitive(v) -> IntVec:
    p, q = v
    g = math.gcd(p, q)
    p, q = p // g, q // g
    if p < 0 or (p == 0 and q < 0):
        p, q = -p, -q
    return IntVec(p, q)


# ------------------------------------------------------------- lift window


@dataclass(frozen=True)
class WindingClass:
    """``kind`` is ``"elementary"``, ``"winding"`` or ``"winding-undetermined"``."""

    kind: str
    directions: tuple[IntVec, ...] = ()
    generators: tuple[IntVec, ...] = ()

    @property
    def is_winding(self) -> bool:
        return self.kind == "winding"

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "directions": [list(d) for d in self.directions],
            "generators": [list(g) for g in self.generators],
        }


def _lift_window(C: GridOpenSet, w: int):
    """Tile ``C`` over ``(2w+1)^2`` fundamental domains and label the central lift."""
    N = C.N
    if not C:
        raise ValueError("empty set has no lift")
    reps = 2 * w + 1
    tiled = np.tile(C.mask, (reps, reps))
    labels, _ = ndimage.label(tiled, structure=_FOUR)
    i0, j0 = C.sorted_cells()[0]
    central = labels[i0 + w * N, j0 + w * N]
    return tiled, labels, central, (i0, j0)


def _touches_border(mask: np.ndarray) -> bool:
    return bool(mask[0, :].any() or mask[-1, :].any() or mask[:, 0].any() or mask[:, -1].any())


def winding_class(C: GridOpenSet, window: int = 2) -> WindingClass:
    """Elementary/winding verdict for a connected grid set from its lift.

    Translations ``v`` with ``max(|v_x|, |v_y|) <= window`` whose deck copy of
    the base cell lies in the same lifted component generate the subgroup; a
    trivial subgroup with a lifted component that reaches the window border is
    reported as undetermined.
    """
    if not is_connected(C):
        raise ValueError("winding_class expects a connected set")
    N = C.N
    _, labels, central, (i0, j0) = _lift_window(C, window)
    found = []
    for vx in range(-window, window + 1):
        for vy in range(-window, window + 1):
            if (vx, vy) != (0, 0) and labels[i0 + (window + vx) * N, j0 + (window + vy) * N] == central:
                found.append((vx, vy))
    basis = lattice_basis(found)
    if not basis:
        if _touches_border(labels == central):
            return WindingClass("winding-undetermined")
        return WindingClass("elementary")
    directions = tuple(sorted({primitive(b) for b in basis}))
    return WindingClass("winding", directions, tuple(basis))


def simply_connected_lift_check(C: GridOpenSet, window: int = 2) -> bool:
    """True when the central lifted component of ``C`` encloses no hole in the window.

    The complement is taken with 8-connectivity, the dual of the 4-connectivity
    used for the open set.
    """
    _, labels, central, _ = _lift_window(C, window)
    lifted = labels == central
    holes, n = ndimage.label(~lifted, structure=_EIGHT)
    if n == 0:
        return True
    border = np.unique(np.concatenate([holes[0, :], holes[-1, :], holes[:, 0], holes[:, -1]]))
    return set(range(1, n + 1)) <= set(int(b) for b in border)
