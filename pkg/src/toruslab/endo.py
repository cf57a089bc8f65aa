"""Toral endomorphisms: linear maps followed by area-preserving primitives.

A conservative map is built as ``f = P_m o ... o P_1 o A`` where ``A`` is an
integer matrix and every ``P_k`` is a shear or a translation.  Shears have unit
Jacobian, so such an ``f`` preserves area and lies in the homotopy class of
``A``.  Product maps ``(x, y) -> (f1(x), f2(y))`` of circle maps are supported
separately; they are generally not conservative.

All evaluation helpers accept floats or numpy arrays.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

import numpy as np

from .linear import IntMatrix2, coset_representatives
from .torus import PlanePoint, TorusPoint, project, reduce_mod1

MAX_HARMONICS = 8
TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class TrigProfile:
    """1-periodic trigonometric polynomial without constant term.

    ``coeffs[k-1] = (a_k, b_k)`` gives the term ``a_k cos(2 pi k s) + b_k sin(2 pi k s)``.
    """

    coeffs: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        coeffs = tuple((float(a), float(b)) for a, b in self.coeffs)
        if len(coeffs) > MAX_HARMONICS:
            raise ValueError(f"at most {MAX_HARMONICS} harmonics allowed, got {len(coeffs)}")
        if not all(math.isfinite(a) and math.isfinite(b) for a, b in coeffs):
            raise ValueError("profile coefficients must be finite")
        object.__setattr__(self, "coeffs", coeffs)

    @classmethod
    def sine(cls, amplitude: float, harmonic: int = 1) -> "TrigProfile":
        coeffs = [(0.0, 0.0)] * (harmonic - 1) + [(0.0, amplitude)]
        return cls(tuple(coeffs))

    def __call__(self, s):
        total = np.zeros_like(s, dtype=float) if isinstance(s, np.ndarray) else 0.0
        for k, (a, b) in enumerate(self.coeffs, start=1):
            w = TWO_PI * k * s
            total = total + a * np.cos(w) + b * np.sin(w)
        return total

    def derivative(self, s):
        total = np.zeros_like(s, dtype=float) if isinstance(s, np.ndarray) else 0.0
        for k, (a, b) in enumerate(self.coeffs, start=1):
            w = TWO_PI * k * s
            total = total + TWO_PI * k * (b * np.cos(w) - a * np.sin(w))
        return total

    def lipschitz(self) -> float:
        """Certified bound on ``sup |profile'|`` from the coefficients."""
        return sum(TWO_PI * k * math.hypot(a, b) for k, (a, b) in enumerate(self.coeffs, start=1))

    def to_json(self) -> list:
        return [list(c) for c in self.coeffs]


# ----------------------------------------------------------------- primitives


@dataclass(frozen=True)
class HShear:
    """``(x, y) -> (x + profile(y), y)``."""

    profile: TrigProfile

    def apply(self, x, y):
        return x + self.profile(y), y

    def inverse(self, x, y):
        return x - self.profile(y), y

    def jacobian(self, x, y) -> np.ndarray:
        return np.array([[1.0, float(self.profile.derivative(y))], [0.0, 1.0]])

    def abs_bound(self) -> np.ndarray:
        return np.array([[1.0, self.profile.lipschitz()], [0.0, 1.0]])

    def to_json(self) -> dict:
        return {"type": "hshear", "coeffs": self.profile.to_json()}


@dataclass(frozen=True)
class VShear:
    """``(x, y) -> (x, y + profile(x))``."""

    profile: TrigProfile

    def apply(self, x, y):
        return x, y + self.profile(x)

    def inverse(self, x, y):
        return x, y - self.profile(x)

    def jacobian(self, x, y) -> np.ndarray:
        return np.array([[1.0, 0.0], [float(self.profile.derivative(x)), 1.0]])

    def abs_bound(self) -> np.ndarray:
        return np.array([[1.0, 0.0], [self.profile.lipschitz(), 1.0]])

    def to_json(self) -> dict:
        return {"type": "vshear", "coeffs": self.profile.to_json()}


@dataclass(frozen=True)
class Translate:
    s: float
    t: float

    def apply(self, x, y):
        return x + self.s, y + self.t

    def inverse(self, x, y):
        return x - self.s, y - self.t

    def jacobian(self, x, y) -> np.ndarray:
        return np.eye(2)

    def abs_bound(self) -> np.ndarray:
        return np.eye(2)

    def to_json(self) -> dict:
        return {"type": "translate", "s": self.s, "t": self.t}


Primitive = Union[HShear, VShear, Translate]


# ------------------------------------------------------------ circle / product


@dataclass(frozen=True)
class CircleMap:
    """Degree-``k`` circle map with lift ``F(x) = k x + profile(x)``."""

    degree: int
    profile: TrigProfile = field(default_factory=TrigProfile)

    def __post_init__(self):
        if self.degree == 0:
            raise ValueError("circle map of degree 0 is not a covering")
        if self.profile.lipschitz() >= abs(self.degree):
            raise ValueError("perturbation too large: lift is not certified strictly monotone")

    def lift(self, x):
        return self.degree * x + self.profile(x)

    def derivative(self, x):
        return self.degree + self.profile.derivative(x)

    def derivative_bounds(self) -> tuple[float, float]:
        """Certified ``(min, max)`` of ``F'``."""
        L = self.profile.lipschitz()
        return self.degree - L, self.degree + L

    def preimages(self, y: float, tol: float = 1e-12) -> list[float]:
        """All ``x`` in [0, 1) with ``F(x) = y mod 1``, by bisection on monotone branches."""
        k = self.degree
        F0 = self.lift(0.0)
        if k > 0:
            first = F0 + reduce_mod1(y - F0)
            targets = [first + m for m in range(k)]
        else:
            first = F0 - reduce_mod1(F0 - y)
            targets = [first - m for m in range(-k)]
        roots = []
        for target in targets:
            lo, hi = 0.0, 1.0
            g_lo = self.lift(lo) - target
            while hi - lo > tol:
                mid = 0.5 * (lo + hi)
                g_mid = self.lift(mid) - target
                if (g_mid > 0) == (g_lo > 0):
                    lo, g_lo = mid, g_mid
                else:
                    hi = mid
            roots.append(reduce_mod1(0.5 * (lo + hi)))
        return roots

    def to_json(self) -> dict:
        return {"degree": self.degree, "coeffs": self.profile.to_json()}


@dataclass(frozen=True)
class ProductMap:
    f1: CircleMap
    f2: CircleMap

    @property
    def degree(self) -> int:
        return abs(self.f1.degree * self.f2.degree)

    def to_json(self) -> dict:
        return {"f1": self.f1.to_json(), "f2": self.f2.to_json()}


# -------------------------------------------------------------- endomorphism


@dataclass(frozen=True)
class Endomorphism:
    """Either ``chain o linear`` (chain form) or a product of circle maps."""

    linear: IntMatrix2
    chain: tuple[Primitive, ...] = ()
    product: ProductMap | None = None
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "chain", tuple(self.chain))
        if self.linear.det == 0:
            raise ValueError("homotopy class must be non-singular")
        if self.product is not None:
            if self.chain:
                raise ValueError("product maps carry no primitive chain")
            expected = IntMatrix2.diag(self.product.f1.degree, self.product.f2.degree)
            if self.linear != expected:
                raise ValueError(f"product map lies in class {expected}, not {self.linear}")

    @classmethod
    def from_product(cls, product: ProductMap, name: str = "") -> "Endomorphism":
        return cls(IntMatrix2.diag(product.f1.degree, product.f2.degree), (), product, name)

    @property
    def conservative(self) -> bool:
        return self.product is None

    @property
    def degree(self) -> int:
        return abs(self.linear.det)

    def abs_jacobian_bound(self) -> np.ndarray:
        """Entrywise bound ``B >= |Df(p)|`` valid at every point."""
        if self.product is not None:
            lo1, hi1 = self.product.f1.derivative_bounds()
            lo2, hi2 = self.product.f2.derivative_bounds()
            return np.diag([max(abs(lo1), abs(hi1)), max(abs(lo2), abs(hi2))])
        A = self.linear
        B = np.abs(np.array(A.rows(), dtype=float))
        for prim in self.chain:
            B = prim.abs_bound() @ B
        return B

    def to_json(self) -> dict:
        if self.product is not None:
            return {"product": self.product.to_json()}
        return {"linear": self.linear.rows(), "chain": [p.to_json() for p in self.chain]}


def lift_xy(f: Endomorphism, x, y):
    """Lift of ``f`` to the plane, vectorised over numpy arrays."""
    if f.product is not None:
        return f.product.f1.lift(x), f.product.f2.lift(y)
    A = f.linear
    x, y = A.a * x + A.b * y, A.c * x + A.d * y
    for prim in f.chain:
        x, y = prim.apply(x, y)
    return x, y


def lift_eval(f: Endomorphism, p) -> PlanePoint:
    x, y = float(p[0]), float(p[1])
    if not (math.isfinite(x) and math.isfinite(y)):
        raise ValueError(f"non-finite point {p!r}")
    fx, fy = lift_xy(f, x, y)
    return PlanePoint(float(fx), float(fy))


def evaluate(f: Endomorphism, p) -> TorusPoint:
    """``f`` on the torus: the projection of the lift."""
    return project(lift_eval(f, p))


def iterate(f: Endomorphism, p, n: int) -> TorusPoint:
    for _ in range(n):
        p = evaluate(f, p)
    return TorusPoint(*p)


def preimages(f: Endomorphism, q) -> list[TorusPoint]:
    """The ``|det A|`` preimages of ``q`` for a chain-form map, in closed form."""
    if f.product is not None:
        raise ValueError("preimages() needs chain form; use product_preimages() for product maps")
    x, y = project(q)
    for prim in reversed(f.chain):
        x, y = prim.inverse(x, y)
    A = f.linear
    det = A.det
    out = []
    for v in coset_representatives(A):
        zx, zy = x + v.p, y + v.q
        # A^{-1} = adj(A) / det
        out.append(project(((A.d * zx - A.b * zy) / det, (-A.c * zx + A.a * zy) / det)))
    return out


def product_preimages(f: Endomorphism, q) -> list[TorusPoint]:
    if f.product is None:
        raise ValueError("not a product map")
    qx, qy = project(q)
    xs = f.product.f1.preimages(qx)
    ys = f.product.f2.preimages(qy)
    return [TorusPoint(x, y) for x in xs for y in ys]


def all_preimages(f: Endomorphism, q) -> list[TorusPoint]:
    return product_preimages(f, q) if f.product is not None else preimages(f, q)


def jacobian_matrix(f: Endomorphism, p) -> np.ndarray:
    x, y = float(p[0]), float(p[1])
    if f.product is not None:
        return np.diag([float(f.product.f1.derivative(x)), float(f.product.f2.derivative(y))])
    A = f.linear
    J = np.array(A.rows(), dtype=float)
    x, y = A.a * x + A.b * y, A.c * x + A.d * y
    for prim in f.chain:
        J = prim.jacobian(x, y) @ J
        x, y = prim.apply(x, y)
    return J


def jacobian_det(f: Endomorphism, p) -> float:
    """Signed ``det Df(p)``.

    For chain form the chain rule gives ``det A`` times the primitives' unit
    determinants, so the result is exact.
    """
    if f.product is not None:
        x, y = float(p[0]), float(p[1])
        return float(f.product.f1.derivative(x) * f.product.f2.derivative(y))
    return float(f.linear.det)


def min_abs_jacobian(f: Endomorphism) -> float:
    """Certified lower bound on ``|det Df|`` over the whole torus."""
    if f.product is None:
        return float(abs(f.linear.det))
    lo1, hi1 = f.product.f1.derivative_bounds()
    lo2, hi2 = f.product.f2.derivative_bounds()
    m1 = lo1 if f.product.f1.degree > 0 else -hi1
    m2 = lo2 if f.product.f2.degree > 0 else -hi2
    return m1 * m2


@dataclass(frozen=True)
class ConservativityReport:
    max_deviation: float
    passed: bool
    samples: int

    def to_json(self) -> dict:
        return {"max_deviation": self.max_deviation, "pass": self.passed, "samples": self.samples}


def preimage_density_sum(f: Endomorphism, q) -> float:
    """``sum over f^{-1}(q) of 1 / |det Df|``; equals 1 for conservative maps."""
    return sum(1.0 / abs(jacobian_det(f, z)) for z in all_preimages(f, q))


def check_conservative(f: Endomorphism, samples: int = 100, seed: int = 0, tol: float = 1e-6):
    rng = np.random.default_rng(seed)
    pts = rng.random((samples, 2))
    worst = max(abs(preimage_density_sum(f, p) - 1.0) for p in pts)
    return ConservativityReport(float(worst), bool(worst < tol), samples)


# --------------------------------------------------------------- constructors


def linear_map(A: IntMatrix2, name: str = "") -> Endomorphism:
    return Endomorphism(A, (), None, name)


def chain_map(A: IntMatrix2, *chain: Primitive, name: str = "") -> Endomorphism:
    return Endomorphism(A, tuple(chain), None, name)


def make_counterexample(eps: float, degree: int = 1) -> Endomorphism:
    """Area-expanding, non-transitive product map ``(2x, f2(y))``.

    ``degree=1``: ``f2(y) = y - eps sin(2 pi y)`` with ``0 < eps < 1/(4 pi)``,
    class ``diag(2, 1)``.  ``degree=2``: ``f2(y) = 2y - eps sin(2 pi y)`` with
    ``1/(2 pi) < eps < 3/(4 pi)``, class ``diag(2, 2)``; there ``f2'(0) < 1`` is
    what makes the origin attracting while ``f2' > 1/2`` everywhere.
    """
    if degree == 1:
        lo, hi = 0.0, 1.0 / (4.0 * math.pi)
    elif degree == 2:
        lo, hi = 1.0 / (2.0 * math.pi), 3.0 / (4.0 * math.pi)
    else:
        raise ValueError("degree must be 1 or 2")
    if not lo < eps < hi:
        raise ValueError(f"eps must lie in the open interval ({lo:.6g}, {hi:.6g}), got {eps}")
    f1 = CircleMap(2)
    f2 = CircleMap(degree, TrigProfile.sine(-eps))
    return Endomorphism.from_product(ProductMap(f1, f2), name=f"counterexample(eps={eps}, deg={degree})")


# ----------------------------------------------------------- serialisation


def _profile_from_json(coeffs) -> TrigProfile:
    if coeffs is None:
        return TrigProfile()
    return TrigProfile(tuple((float(a), float(b)) for a, b in coeffs))


def _primitive_from_json(doc: dict) -> Primitive:
    kind = doc.get("type")
    if kind == "hshear":
        return HShear(_profile_from_json(doc.get("coeffs")))
    if kind == "vshear":
        return VShear(_profile_from_json(doc.get("coeffs")))
    if kind == "translate":
        return Translate(float(doc.get("s", 0.0)), float(doc.get("t", 0.0)))
    raise ValueError(f"unknown primitive type {kind!r}")


def endomorphism_from_json(doc: dict, name: str = "") -> Endomorphism:
    if "product" in doc:
        prod = doc["product"]
        factors = [
            CircleMap(int(prod[k]["degree"]), _profile_from_json(prod[k].get("coeffs")))
            for k in ("f1", "f2")
        ]
        return Endomorphism.from_product(ProductMap(*factors), name=name)
    if "linear" not in doc:
        raise ValueError("endomorphism JSON needs a 'linear' or a 'product' key")
    A = IntMatrix2.from_rows(doc["linear"])
    chain = tuple(_primitive_from_json(p) for p in doc.get("chain", []))
    return Endomorphism(A, chain, None, name)


def endomorphism_to_json(f: Endomorphism) -> dict:
    return f.to_json()


def _presets() -> dict:
    return {
        "example-2x-halfshift": lambda: chain_map(
            IntMatrix2.diag(2, 1), Translate(0.0, 0.5), name="example-2x-halfshift"
        ),
        "counterexample": lambda: make_counterexample(0.05),
        "counterexample-deg2": lambda: make_counterexample(0.2, degree=2),
        "expanding-shear": lambda: chain_map(
            IntMatrix2.diag(2, 2),
            HShear(TrigProfile.sine(0.1)),
            VShear(TrigProfile(((0.05, 0.08),))),
            name="expanding-shear",
        ),
        "hyperbolic-shear": lambda: chain_map(
            IntMatrix2(3, 1, 1, 1),
            VShear(TrigProfile.sine(0.07)),
            Translate(0.25, 0.0),
            name="hyperbolic-shear",
        ),
    }


PRESET_NAMES = tuple(_presets())


def preset(name: str) -> Endomorphism:
    try:
        return _presets()[name]()
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {', '.join(PRESET_NAMES)}") from None


def load_endomorphism(source: str) -> Endomorphism:
    """A preset name or a path to a JSON description."""
    if source in PRESET_NAMES:
        return preset(source)
    path = Path(source)
    if not path.exists():
        raise ValueError(f"{source!r} is neither a preset nor an existing file")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ValueError(f"malformed endomorphism file {source}: {exc}") from None
    return endomorphism_from_json(doc, name=path.stem)


def random_chain_map(rng: np.random.Generator, A: IntMatrix2, max_primitives: int = 3,
                     max_harmonics: int = 3, slope: float = 0.25) -> Endomorphism:
    """Random conservative map in the class of ``A``.

    Each shear profile has certified Lipschitz constant at most ``slope``.
    """
    chain = []
    for _ in range(int(rng.integers(1, max_primitives + 1))):
        K = int(rng.integers(1, max_harmonics + 1))
        coeffs = tuple(
            tuple(rng.uniform(-1.0, 1.0, 2) * slope / (math.sqrt(2) * TWO_PI * k * K)) for k in range(1, K + 1)
        )
        kind = int(rng.integers(3))
        if kind == 0:
            chain.append(HShear(TrigProfile(coeffs)))
        elif kind == 1:
            chain.append(VShear(TrigProfile(coeffs)))
        else:
            chain.append(Translate(*map(float, rng.random(2))))
    return Endomorphism(A, tuple(chain), None, f"random[{A}]")
