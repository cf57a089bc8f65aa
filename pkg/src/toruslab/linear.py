"""Exact algebra of 2x2 integer matrices acting on the torus.

Everything here is integer arithmetic. Spectral cases are decided without
square roots: the discriminant is tested for being a perfect square, and the
position of irrational roots relative to +-1 is read off the sign of the
characteristic polynomial at +1 and -1.
"""

from __future__ import annotations

import enum
import json
import math
import re
from dataclasses import dataclass
from typing import NamedTuple

INT64_MAX = 2**63 - 1


class IntVec(NamedTuple):
    p: int
    q: int

    def __add__(self, other):  # type: ignore[override]
        return IntVec(self.p + other[0], self.q + other[1])

    def __sub__(self, other):
        return IntVec(self.p - other[0], self.q - other[1])

    def __neg__(self):
        return IntVec(-self.p, -self.q)

    def scale(self, n: int) -> "IntVec":
        return IntVec(n * self.p, n * self.q)

    def is_zero(self) -> bool:
        return self.p == 0 and self.q == 0


def _check_int64(value: int, what: str) -> int:
    if not isinstance(value, int) or isinstance(value, bool):
        raise TypeError(f"{what} must be an integer, got {value!r}")
    if abs(value) > INT64_MAX:
        raise OverflowError(f"{what} = {value} does not fit in 64 bits")
    return value


@dataclass(frozen=True)
class IntMatrix2:
    """Row-major 2x2 integer matrix ``[[a, b], [c, d]]``."""

    a: int
    b: int
    c: int
    d: int

    def __post_init__(self):
        for name in "abcd":
            _check_int64(getattr(self, name), f"entry {name}")

    @classmethod
    def from_rows(cls, rows) -> "IntMatrix2":
        (a, b), (c, d) = rows
        return cls(int(a), int(b), int(c), int(d))

    @classmethod
    def diag(cls, k: int, l: int) -> "IntMatrix2":
        return cls(k, 0, 0, l)

    @property
    def det(self) -> int:
        return self.a * self.d - self.b * self.c

    @property
    def trace(self) -> int:
        return self.a + self.d

    @property
    def discriminant(self) -> int:
        disc = self.trace**2 - 4 * self.det
        if abs(disc) > INT64_MAX:
            raise OverflowError(f"discriminant {disc} overflows 64 bits")
        return disc

    def rows(self) -> list[list[int]]:
        return [[self.a, self.b], [self.c, self.d]]

    def apply(self, v) -> IntVec:
        p, q = v
        return IntVec(self.a * p + self.b * q, self.c * p + self.d * q)

    def adjugate(self) -> "IntMatrix2":
        return IntMatrix2(self.d, -self.b, -self.c, self.a)

    def __matmul__(self, other: "IntMatrix2") -> "IntMatrix2":
        return IntMatrix2(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
        )

    def power(self, n: int) -> "IntMatrix2":
        if n < 0:
            raise ValueError("negative powers are not integer matrices in general")
        result = IntMatrix2(1, 0, 0, 1)
        for _ in range(n):
            result = result @ self
        return result

    def __str__(self) -> str:
        return f"{self.a} {self.b}; {self.c} {self.d}"


_TEXT_FORM = re.compile(r"^\s*(-?\d+)\s+(-?\d+)\s*;\s*(-?\d+)\s+(-?\d+)\s*$")


def parse_matrix(text: str) -> IntMatrix2:
    """Parse ``"a b ; c d"`` or a JSON ``[[a, b], [c, d]]``."""
    text = text.strip()
    m = _TEXT_FORM.match(text)
    if m:
        return IntMatrix2(*(int(g) for g in m.groups()))
    try:
        rows = json.loads(text)
    except json.JSONDecodeError:
        raise ValueError(f"cannot parse matrix {text!r}") from None
    if (
        not isinstance(rows, list)
        or len(rows) != 2
        or any(not isinstance(r, list) or len(r) != 2 for r in rows)
        or any(not isinstance(x, int) or isinstance(x, bool) for r in rows for x in r)
    ):
        raise ValueError(f"matrix JSON must be [[a,b],[c,d]] with integers, got {text!r}")
    return IntMatrix2.from_rows(rows)


class Case(enum.Enum):
    UNIT_EIGENVALUE = "1"
    INTEGER_EXPANDING = "2"
    IRRATIONAL_HYPERBOLIC = "3"
    IRRATIONAL_EXPANDING = "4"
    COMPLEX_EXPANDING = "5"
    INVERTIBLE = "invertible"
    SINGULAR = "singular"

    @property
    def number(self) -> int | None:
        return int(self.value) if self.value.isdigit() else None


@dataclass(frozen=True)
class SpectralClass:
    """Spectral case of an integer matrix plus exact eigenvalue data.

    ``eigen_data`` is ``("integer", (lam, mu))`` with ``|lam| <= |mu|`` when the
    eigenvalues are integers, ``("surd", (t, D))`` for real irrational roots
    ``(t +- sqrt(D)) / 2`` and ``("complex", (t, D))`` when ``D < 0``.
    """

    case: Case
    trace: int
    det: int
    discriminant: int
    eigen_data: tuple

    @property
    def degree(self) -> int:
        return abs(self.det)

    def to_json(self) -> dict:
        kind, payload = self.eigen_data
        return {
            "case": self.case.value,
            "degree": self.degree,
            "trace": self.trace,
            "det": self.det,
            "discriminant": self.discriminant,
            "eigen_data": {"kind": kind, "values": list(payload)},
        }


def integer_eigenvalues(M: IntMatrix2) -> tuple[int, int] | None:
    """Both eigenvalues ordered by modulus if they are integers, else None."""
    disc = M.discriminant
    if disc < 0:
        return None
    s = math.isqrt(disc)
    if s * s != disc:
        return None
    # t and s share parity because disc = t^2 - 4 det
    lam, mu = (M.trace - s) // 2, (M.trace + s) // 2
    return tuple(sorted((lam, mu), key=lambda r: (abs(r), r)))  # type: ignore[return-value]


def classify(M: IntMatrix2) -> SpectralClass:
    t, det, disc = M.trace, M.det, M.discriminant
    roots = integer_eigenvalues(M)
    if roots is not None:
        data = ("integer", roots)
    elif disc < 0:
        data = ("complex", (t, disc))
    else:
        data = ("surd", (t, disc))

    if det == 0:
        case = Case.SINGULAR
    elif abs(det) == 1:
        case = Case.INVERTIBLE
    elif roots is not None:
        case = Case.UNIT_EIGENVALUE if abs(roots[0]) == 1 else Case.INTEGER_EXPANDING
    elif disc < 0:
        # |lambda|^2 = det >= 2
        case = Case.COMPLEX_EXPANDING
    else:
        # neither root equals +-1 (irrational), so an odd number of roots
        # lies in (-1, 1) exactly when p(1) p(-1) < 0
        p_plus = 1 - t + det
        p_minus = 1 + t + det
        case = Case.IRRATIONAL_HYPERBOLIC if p_plus * p_minus < 0 else Case.IRRATIONAL_EXPANDING
    return SpectralClass(case, t, det, disc, data)


def is_all_transitive_class(M: IntMatrix2) -> bool:
    """True when every conservative map homotopic to ``M`` is transitive."""
    if abs(M.det) <= 1:
        raise ValueError(f"degree |det| = {abs(M.det)} < 2: the classification does not apply")
    return classify(M).case is not Case.UNIT_EIGENVALUE


def _xgcd(a: int, b: int) -> tuple[int, int, int]:
    x0, y0, x1, y1 = 1, 0, 0, 1
    while b:
        k, r = divmod(a, b)
        a, b = b, r
        x0, x1 = x1, x0 - k * x1
        y0, y1 = y1, y0 - k * y1
    if a < 0:
        a, x0, y0 = -a, -x0, -y0
    return a, x0, y0


def lattice_box(M: IntMatrix2) -> tuple[int, int]:
    """Side lengths ``(h_p, h_q)`` of the box of residues of Z^2 / M Z^2.

    The image lattice has a triangular basis ``(h_p, 0), (s, h_q)`` with
    ``h_q = gcd(c, d)`` and ``h_p = |det| / h_q``.
    """
    if M.det == 0:
        raise ValueError("singular matrix has infinite cokernel")
    h_q = math.gcd(M.c, M.d)
    return abs(M.det) // h_q, h_q


def coset_representatives(M: IntMatrix2) -> list[IntVec]:
    h_p, h_q = lattice_box(M)
    return [IntVec(p, q) for q in range(h_q) for p in range(h_p)]


def reduce_mod_lattice(M: IntMatrix2, v) -> IntVec:
    """Canonical representative of ``v`` in the box of :func:`coset_representatives`."""
    h_p, h_q = lattice_box(M)
    g, x, y = _xgcd(M.c, M.d)
    # u = x*col1 + y*col2 has second coordinate g = h_q
    u = IntVec(M.a * x + M.b * y, g)
    p, q = v
    k = q // h_q
    p, q = p - k * u.p, q - k * u.q
    return IntVec(p % h_p, q)


def in_image_lattice(M: IntMatrix2, v) -> bool:
    return reduce_mod_lattice(M, v).is_zero()


def solve_lattice_multiple(M: IntMatrix2, w) -> tuple[int, IntVec]:
    """Smallest ``n >= 1`` with ``M v = n w`` solvable over the integers, and that ``v``."""
    if M.det == 0:
        raise ValueError("singular matrix")
    w = IntVec(*w)
    if w.is_zero():
        raise ValueError("w must be non-zero")
    det = abs(M.det)
    adj_w = M.adjugate().apply(w)
    # v = n adj(M) w / det is integral iff det | n * gcd(adj w)
    n = det // math.gcd(det, math.gcd(*adj_w))
    v = IntVec(n * adj_w.p // M.det, n * adj_w.q // M.det)
    return n, v
