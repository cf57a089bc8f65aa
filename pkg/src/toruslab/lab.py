"""Grid-scale transitivity experiments.

The central object is the symbolic image of ``f`` at resolution ``N``: an edge
``a -> b`` whenever the image of cell ``a`` may overlap the open cell ``b``.
Images are sampled on a centred sub-grid and padded by a certified bound on
``|Df|``, so every true overlap produces an edge.  Grid preimages, the search
for complementary strictly invariant pairs and component periods are all read
off this graph.

Verdicts are evidence, not proofs: strong connectivity of the symbolic image is
consistent with transitivity but does not certify a dense orbit.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components

from . import grid as G
from .endo import Endomorphism, HShear, VShear, all_preimages, lift_xy
from .grid import GridOpenSet
from .torus import TorusPoint

OVERLAP_EPS = 1e-9  # in units of cell width
# odd prime just below 2**40: fixed-point modulus for exact orbit arithmetic
ORBIT_MODULUS = 1099511627689


# ----------------------------------------------------------- symbolic image


@dataclass(frozen=True)
class SymbolicImageGraph:
    N: int
    adjacency: sparse.csr_matrix  # (N*N, N*N) boolean, node id = i*N + j
    samples_per_cell: int

    @property
    def edge_count(self) -> int:
        return int(self.adjacency.nnz)

    def successors(self, cell) -> list[tuple[int, int]]:
        i, j = cell
        row = self.adjacency.indices[self.adjacency.indptr[i * self.N + j] : self.adjacency.indptr[i * self.N + j + 1]]
        return sorted((int(k) // self.N, int(k) % self.N) for k in row)

    def predecessors_of(self, U: GridOpenSet) -> GridOpenSet:
        if U.N != self.N:
            raise ValueError("resolution mismatch")
        hit = self.adjacency @ U.mask.ravel().astype(np.int8)
        return GridOpenSet(self.N, (hit > 0).reshape(self.N, self.N))

    def successors_of(self, U: GridOpenSet) -> GridOpenSet:
        hit = self.adjacency.T @ U.mask.ravel().astype(np.int8)
        return GridOpenSet(self.N, (hit > 0).reshape(self.N, self.N))


def _cell_span(lo: np.ndarray, hi: np.ndarray, N: int):
    """First cell index and number of open cells met by ``[lo, hi]``."""
    first = np.floor(lo * N + OVERLAP_EPS).astype(np.int64)
    last = np.ceil(hi * N - OVERLAP_EPS).astype(np.int64) - 1
    span = np.maximum(last - first + 1, 1)
    return first, np.minimum(span, N)


@functools.lru_cache(maxsize=64)
def _adjacency(f: Endomorphism, N: int, s: int) -> sparse.csr_matrix:
    h = 1.0 / (N * s)
    pad = f.abs_jacobian_bound() @ np.array([h / 2, h / 2])
    offs = (np.arange(N * s) + 0.5) * h
    X, Y = np.meshgrid(offs, offs, indexing="ij")
    fx, fy = lift_xy(f, X, Y)
    fx = np.asarray(fx, dtype=float) * np.ones_like(X)
    fy = np.asarray(fy, dtype=float) * np.ones_like(Y)
    ix0, nx = _cell_span(fx - pad[0], fx + pad[0], N)
    iy0, ny = _cell_span(fy - pad[1], fy + pad[1], N)
    src_i = (np.arange(N * s) // s)[:, None] * np.ones((1, N * s), dtype=np.int64)
    src_j = (np.arange(N * s) // s)[None, :] * np.ones((N * s, 1), dtype=np.int64)
    src = (src_i * N + src_j).ravel()
    ix0, nx, iy0, ny = ix0.ravel(), nx.ravel(), iy0.ravel(), ny.ravel()
    rows, cols = [], []
    for dx in range(int(nx.max())):
        for dy in range(int(ny.max())):
            m = (dx < nx) & (dy < ny)
            rows.append(src[m])
            cols.append(((ix0[m] + dx) % N) * N + (iy0[m] + dy) % N)
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    adj = sparse.csr_matrix((np.ones(rows.size, dtype=np.int8), (rows, cols)), shape=(N * N, N * N))
    adj.data[:] = 1
    adj.sort_indices()
    return adj


def build_symbolic_image(f: Endomorphism, N: int, samples_per_cell: int = 4) -> SymbolicImageGraph:
    if N < 2:
        raise ValueError("resolution must be at least 2")
    if samples_per_cell < 4:
        raise ValueError("need at least 4 samples per cell side")
    if f.degree < 2:
        raise ValueError(f"degree {f.degree} < 2: symbolic-image transitivity tests need a non-invertible map")
    bound = f.abs_jacobian_bound()
    if not np.all(np.isfinite(bound)):
        raise ValueError("map has no certified derivative bound")
    return SymbolicImageGraph(N, _adjacency(f, N, samples_per_cell), samples_per_cell)


@dataclass(frozen=True)
class SCCResult:
    strongly_connected: bool
    scc_count: int


def scc_transitivity(g: SymbolicImageGraph) -> SCCResult:
    n, _ = connected_components(g.adjacency, directed=True, connection="strong")
    return SCCResult(n == 1, int(n))


def _graph(f, N, samples_per_cell):
    return SymbolicImageGraph(N, _adjacency(f, N, samples_per_cell), samples_per_cell)


# ----------------------------------------------------------- orbit coverage


def _fixed_point_step(f: Endomorphism, X: np.ndarray, Y: np.ndarray):
    """One step of ``f`` on points ``(X/Q, Y/Q)`` kept on the lattice ``Z^2/Q``.

    The linear part is exact modulo the odd prime ``Q``; each nonlinear term is
    rounded to the nearest multiple of ``1/Q``.  Unlike binary floating point,
    multiplication by an even integer does not shift information out of the
    representation, so orbits of expanding maps do not collapse onto 0.
    """
    Q = ORBIT_MODULUS
    if f.product is not None:
        f1, f2 = f.product.f1, f.product.f2
        X = (f1.degree * X + np.rint(f1.profile(X / Q) * Q).astype(np.int64)) % Q
        Y = (f2.degree * Y + np.rint(f2.profile(Y / Q) * Q).astype(np.int64)) % Q
        return X, Y
    A = f.linear
    X, Y = (A.a * X + A.b * Y) % Q, (A.c * X + A.d * Y) % Q
    for prim in f.chain:
        if isinstance(prim, HShear):
            X = (X + np.rint(prim.profile(Y / Q) * Q).astype(np.int64)) % Q
        elif isinstance(prim, VShear):
            Y = (Y + np.rint(prim.profile(X / Q) * Q).astype(np.int64)) % Q
        else:
            X = (X + int(round(prim.s * Q))) % Q
            Y = (Y + int(round(prim.t * Q))) % Q
    return X, Y


def orbit_coverages(f: Endomorphism, starts, steps: int, N: int) -> np.ndarray:
    """Fraction of the ``N^2`` cells visited by ``f^k(start)``, ``k = 0..steps``, per start."""
    if steps < 0:
        raise ValueError("steps must be non-negative")
    Q = ORBIT_MODULUS
    if max(abs(e) for e in (f.linear.a, f.linear.b, f.linear.c, f.linear.d)) >= 2**22:
        raise OverflowError("matrix entries too large for 64-bit fixed-point orbits")
    starts = np.atleast_2d(np.asarray(starts, dtype=float))
    X = np.rint((starts[:, 0] % 1.0) * Q).astype(np.int64) % Q
    Y = np.rint((starts[:, 1] % 1.0) * Q).astype(np.int64) % Q
    m = len(X)
    visited = np.zeros((m, N * N), dtype=bool)
    rows = np.arange(m)
    block = 4096
    buf = np.empty((block, m), dtype=np.int64)
    k = 0
    for step in range(steps + 1):
        buf[k] = (X * N // Q) * N + (Y * N // Q)
        k += 1
        if k == block:
            visited[rows[None, :].repeat(k, 0), buf[:k]] = True
            k = 0
        if step < steps:
            X, Y = _fixed_point_step(f, X, Y)
    if k:
        visited[rows[None, :].repeat(k, 0), buf[:k]] = True
    return visited.sum(axis=1) / float(N * N)


def orbit_coverage(f: Endomorphism, start, steps: int, N: int) -> float:
    return float(orbit_coverages(f, [tuple(start)], steps, N)[0])


# -------------------------------------------------------- grid preimages


def grid_preimage(f: Endomorphism, U: GridOpenSet, samples_per_cell: int = 4) -> GridOpenSet:
    """Outer approximation of ``f^{-1}(U)``: cells whose padded image meets ``U``."""
    return _graph(f, U.N, samples_per_cell).predecessors_of(U)


def grid_image(f: Endomorphism, U: GridOpenSet, samples_per_cell: int = 4) -> GridOpenSet:
    """Outer approximation of ``f(U)``."""
    return _graph(f, U.N, samples_per_cell).successors_of(U)


def verify_strict_invariance(f: Endomorphism, U: GridOpenSet, samples_per_cell: int = 4,
                             allow_boundary: bool = False) -> bool:
    """``grid_preimage(f, U) == U``.

    With ``allow_boundary`` a mismatch confined to the boundary layer of either
    set also counts as invariance.
    """
    verdict = G.compare(grid_preimage(f, U, samples_per_cell), U)
    return verdict == "equal" or (allow_boundary and verdict == "boundary")


# -------------------------------------------------------- invariant pairs


@dataclass
class PairSearch:
    """Outcome of :func:`find_invariant_pair`.

    ``status`` is ``"found"`` (verified complementary pair), ``"absent"`` (every
    seed's backward orbit filled the torus) or ``"inconclusive"`` (some seed hit
    ``max_iter`` or produced a pair that failed exact verification).
    """

    status: str
    U: GridOpenSet | None = None
    V: GridOpenSet | None = None
    seed: tuple[int, int] | None = None
    iterations: int = 0
    details: list = field(default_factory=list)

    @property
    def pair(self):
        return (self.U, self.V) if self.status == "found" else None

    def to_json(self) -> dict:
        doc = {"status": self.status, "seed": list(self.seed) if self.seed else None,
               "iterations": self.iterations, "seeds": self.details}
        if self.U is not None:
            doc["U"] = self.U.to_json()
            doc["V"] = self.V.to_json()
        return doc


def default_seeds(N: int, per_side: int = 4) -> list[tuple[int, int]]:
    step = max(N // per_side, 1)
    return [(i, j) for i in range(0, N, step) for j in range(0, N, step)]


def backward_closure(g: SymbolicImageGraph, seed_set: GridOpenSet, max_iter: int):
    """Iterate ``U <- U | pre(U)``; returns ``(U, growth_steps, stabilised)``."""
    U = seed_set.mask.copy()
    frontier = U.copy()
    adj = g.adjacency
    for it in range(max_iter + 1):
        hit = adj @ frontier.ravel().astype(np.int8)
        new = (hit > 0).reshape(g.N, g.N) & ~U
        if not new.any():
            return GridOpenSet(g.N, U), it, True
        if it == max_iter:
            break
        U |= new
        frontier = new
    return GridOpenSet(g.N, U), max_iter, False


def find_invariant_pair(f: Endomorphism, N: int, seeds=None, max_iter: int = 1000,
                        samples_per_cell: int = 4) -> PairSearch:
    """Search for a complementary pair of strictly invariant grid sets.

    Each seed cell is grown backwards to a fixed point of ``U <- U | pre(U)``;
    a fixed point whose closure is not the whole torus yields the candidate
    ``(perp(perp(U)), perp(U))``, which is kept only if both sets pass
    :func:`verify_strict_invariance` exactly.
    """
    if N < 4:
        raise ValueError("resolution must be at least 4")
    g = build_symbolic_image(f, N, samples_per_cell)
    seeds = default_seeds(N) if seeds is None else [(int(i) % N, int(j) % N) for i, j in seeds]
    details, inconclusive = [], False
    for seed in seeds:
        U, its, stable = backward_closure(g, GridOpenSet.from_cells(N, [seed]), max_iter)
        if not stable:
            details.append({"seed": list(seed), "outcome": "max-iter", "iterations": its})
            inconclusive = True
            continue
        V = G.perp(U)
        if not V:
            details.append({"seed": list(seed), "outcome": "saturated", "iterations": its})
            continue
        Ureg = G.perp(V)
        ok_u = g.predecessors_of(Ureg) == Ureg
        ok_v = g.predecessors_of(V) == V
        if ok_u and ok_v:
            details.append({"seed": list(seed), "outcome": "pair", "iterations": its})
            return PairSearch("found", Ureg, V, seed, its, details)
        details.append({"seed": list(seed), "outcome": "unverified", "iterations": its})
        inconclusive = True
    return PairSearch("inconclusive" if inconclusive else "absent", details=details)


# ------------------------------------------------------ component periods


def component_period(f: Endomorphism, U: GridOpenSet, C: GridOpenSet, max_n: int = 16,
                     samples_per_cell: int = 4) -> int | None:
    """Smallest ``n <= max_n`` with ``pre^n(C) == C``, or None if none is found."""
    if not verify_strict_invariance(f, U, samples_per_cell):
        raise ValueError("U is not strictly invariant at grid scale")
    if not C <= U:
        raise ValueError("C is not contained in U")
    g = _graph(f, U.N, samples_per_cell)
    X = C
    for n in range(1, max_n + 1):
        X = g.predecessors_of(X)
        if X == C:
            return n
    return None


class AmbiguousPoint(ValueError):
    """A preimage branch fell too close to the boundary of the component."""


def _near_boundary(C: GridOpenSet, p, margin: float) -> bool:
    N = C.N
    xs = {int(math.floor((p[0] + d) * N)) % N for d in (-margin, 0.0, margin)}
    ys = {int(math.floor((p[1] + d) * N)) % N for d in (-margin, 0.0, margin)}
    states = {bool(C.mask[i, j]) for i in xs for j in ys}
    return len(states) > 1


def iterated_preimages(f: Endomorphism, q, n: int) -> list[TorusPoint]:
    pts = [TorusPoint(*q)]
    for _ in range(n):
        pts = [z for p in pts for z in all_preimages(f, p)]
    return pts


def sheet_count_on_component(f: Endomorphism, C: GridOpenSet, n: int, point=None, seed: int = 0,
                             margin: float = 0.25, samples_per_cell: int = 4) -> int:
    """Number of ``f^n``-preimages of a point of ``C`` that lie in ``C``.

    ``margin`` (in cell widths) is the distance from the boundary of ``C``
    below which a point or preimage is considered ambiguous.
    """
    if n < 1:
        raise ValueError("n must be positive")
    g = _graph(f, C.N, samples_per_cell)
    X = C
    for _ in range(n):
        X = g.predecessors_of(X)
    if X != C:
        raise ValueError(f"C is not strictly invariant under f^{n} at grid scale")
    eps = margin / C.N
    if point is None:
        point = sample_generic_point(C, np.random.default_rng(seed), margin)
    if _near_boundary(C, point, eps) or not C.contains_point(point):
        raise AmbiguousPoint(f"point {tuple(point)} is not well inside C")
    count = 0
    for z in iterated_preimages(f, point, n):
        if _near_boundary(C, z, eps):
            raise AmbiguousPoint(f"preimage {tuple(z)} lies within {margin} cells of the boundary")
        count += C.contains_point(z)
    return count


def sample_generic_point(C: GridOpenSet, rng: np.random.Generator, margin: float = 0.25,
                         attempts: int = 1000) -> TorusPoint:
    cells = C.sorted_cells()
    if not cells:
        raise ValueError("empty set")
    eps = margin / C.N
    for _ in range(attempts):
        i, j = cells[int(rng.integers(len(cells)))]
        p = TorusPoint((i + rng.random()) / C.N, (j + rng.random()) / C.N)
        if not _near_boundary(C, p, eps):
            return p
    raise AmbiguousPoint("could not find a point away from the boundary")


# --------------------------------------------------------------- reports


@dataclass
class TransitivityReport:
    """``verdict``: ``transitive-evidence``, ``non-transitive-witness`` or ``undetermined``."""

    verdict: str
    scc_count: int
    coverage: float
    witness: tuple[GridOpenSet, GridOpenSet] | None = None
    witness_resolution: int | None = None
    per_resolution: list = field(default_factory=list)

    def to_json(self) -> dict:
        doc = {
            "verdict": self.verdict,
            "scc_count": self.scc_count,
            "coverage": self.coverage,
            "witness_resolution": self.witness_resolution,
            "resolutions": self.per_resolution,
            "witness": None,
        }
        if self.witness is not None:
            doc["witness"] = {"U": self.witness[0].to_json(), "V": self.witness[1].to_json()}
        return doc


def transitivity_report(f: Endomorphism, resolutions=(16, 32, 64), samples_per_cell: int = 4,
                        max_iter: int = 1000, steps: int = 100_000, start=None) -> TransitivityReport:
    """Run the resolution ladder.

    A pair found at ``N`` is reported only after it is found again at ``2N``.
    Strong connectivity at every rung with no witness gives
    ``transitive-evidence``.
    """
    rows, all_sc, witness = [], True, None
    scc_count = 0
    for N in resolutions:
        g = build_symbolic_image(f, N, samples_per_cell)
        scc = scc_transitivity(g)
        search = find_invariant_pair(f, N, max_iter=max_iter, samples_per_cell=samples_per_cell)
        row = {"N": N, "strongly_connected": scc.strongly_connected, "scc_count": scc.scc_count,
               "pair": search.status, "confirmed_at": None}
        if search.status == "found" and witness is None:
            again = find_invariant_pair(f, 2 * N, max_iter=max_iter, samples_per_cell=samples_per_cell)
            if again.status == "found":
                witness = (search.U, search.V, N)
                row["confirmed_at"] = 2 * N
        all_sc = all_sc and scc.strongly_connected and search.status == "absent"
        scc_count = scc.scc_count
        rows.append(row)
    finest = resolutions[-1]
    start = start if start is not None else (math.sqrt(2) - 1, math.pi - 3)
    coverage = orbit_coverage(f, start, steps, finest)
    if witness is not None:
        verdict = "non-transitive-witness"
    elif all_sc:
        verdict = "transitive-evidence"
    else:
        verdict = "undetermined"
    for row in rows:
        row["coverage"] = coverage if row["N"] == finest else None
    return TransitivityReport(
        verdict, scc_count, coverage,
        None if witness is None else (witness[0], witness[1]),
        None if witness is None else witness[2],
        rows,
    )
