"""Arithmetic over R, C, H and O with exact or floating coordinates.

Exact coordinates are ``Fraction`` values, or ``Surd`` values when a
square root of an integer is needed (sqrt 2 in the projective embedding,
the Rosen constants, Eisenstein and Bianchi integers).  Float coordinates
are plain Python floats.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence, Union

__all__ = [
    "AlgebraKind", "R", "C", "H", "O", "KINDS", "Surd", "sqrt_exact", "Scalar",
    "mul", "conjugate", "norm", "norm_sq", "invert", "Matrix", "mat_mul",
    "j_form", "j_unitary_check", "exact_sqrt_or_float", "to_exact",
    "BackendMismatch", "KindMismatch",
]


class KindMismatch(ValueError):
    pass


class BackendMismatch(ValueError):
    pass


@dataclass(frozen=True)
class AlgebraKind:
    tag: str
    dim: int

    @property
    def associative(self) -> bool:
        return self.tag != "O"

    def __repr__(self) -> str:
        return f"AlgebraKind({self.tag})"


R = AlgebraKind("R", 1)
C = AlgebraKind("C", 2)
H = AlgebraKind("H", 4)
O = AlgebraKind("O", 8)
KINDS = {"R": R, "C": C, "H": H, "O": O}


# ---------------------------------------------------------------------------
# exact real numbers in a multiquadratic field Q(sqrt p1, sqrt p2, ...)

@lru_cache(maxsize=4096)
def _squarefree_split(n: int) -> tuple[int, int]:
    """Return (s, m) with n = s*s*m and m squarefree."""
    s, m, p = 1, 1, 2
    while p * p <= n:
        while n % (p * p) == 0:
            n //= p * p
            s *= p
        if n % p == 0:
            n //= p
            m *= p
        p += 1
    return s, m * n


@lru_cache(maxsize=4096)
def _primes_of(m: int) -> tuple[int, ...]:
    out, p = [], 2
    while p * p <= m:
        if m % p == 0:
            out.append(p)
            m //= p
        p += 1
    if m > 1:
        out.append(m)
    return tuple(out)


def _coerce_rational(x):
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    return None


class Surd:
    """Exact real number sum(c_m * sqrt(m)) with rational c_m, squarefree m.

    Arithmetic results collapse back to ``Fraction`` whenever only the
    rational part survives, so rational code paths stay fast.
    """

    __slots__ = ("terms", "_hash")

    def __init__(self, terms: dict[int, Fraction]):
        self.terms = terms
        self._hash = None

    @staticmethod
    def make(terms: dict[int, Fraction]):
        terms = {m: c for m, c in terms.items() if c != 0}
        if not terms:
            return Fraction(0)
        if len(terms) == 1 and 1 in terms:
            return terms[1]
        return Surd(terms)

    @staticmethod
    def lift(x) -> "Surd":
        if isinstance(x, Surd):
            return x
        q = _coerce_rational(x)
        if q is None:
            raise TypeError(f"cannot lift {type(x).__name__} into Surd")
        return Surd({1: q} if q else {})

    # arithmetic ---------------------------------------------------------
    def __add__(self, other):
        if isinstance(other, float):
            return float(self) + other
        o = Surd.lift(other)
        terms = dict(self.terms)
        for m, c in o.terms.items():
            terms[m] = terms.get(m, 0) + c
        return Surd.make(terms)

    __radd__ = __add__

    def __neg__(self):
        return Surd({m: -c for m, c in self.terms.items()})

    def __pos__(self):
        return self

    def __sub__(self, other):
        if isinstance(other, float):
            return float(self) - other
        return self + (-Surd.lift(other))

    def __rsub__(self, other):
        if isinstance(other, float):
            return other - float(self)
        return Surd.lift(other) + (-self)

    def __mul__(self, other):
        if isinstance(other, float):
            return float(self) * other
        q = _coerce_rational(other)
        if q is not None:
            return Surd.make({m: c * q for m, c in self.terms.items()})
        if not isinstance(other, Surd):
            return NotImplemented
        terms: dict[int, Fraction] = {}
        for a, ca in self.terms.items():
            for b, cb in other.terms.items():
                g = math.gcd(a, b)
                m = (a // g) * (b // g)
                terms[m] = terms.get(m, 0) + ca * cb * g
        return Surd.make(terms)

    __rmul__ = __mul__

    def _conj_at(self, p: int) -> "Surd":
        return Surd({m: (-c if m % p == 0 else c) for m, c in self.terms.items()})

    def inverse(self):
        num = Fraction(1)
        cur = self
        while isinstance(cur, Surd):
            p = _primes_of(max(cur.terms))[-1]
            c = cur._conj_at(p)
            num = num * c
            cur = cur * c
        if cur == 0:
            raise ZeroDivisionError("Surd division by zero")
        return num * (1 / cur)

    def __truediv__(self, other):
        if isinstance(other, float):
            return float(self) / other
        q = _coerce_rational(other)
        if q is not None:
            return Surd.make({m: c / q for m, c in self.terms.items()})
        if isinstance(other, Surd):
            return self * other.inverse()
        return NotImplemented

    def __rtruediv__(self, other):
        if isinstance(other, float):
            return other / float(self)
        return Surd.lift(other) * self.inverse()

    def __pow__(self, k: int):
        if not isinstance(k, int):
            return float(self) ** k
        if k < 0:
            return self.inverse() ** (-k)
        out = Fraction(1)
        for _ in range(k):
            out = out * self
        return out

    # comparison ---------------------------------------------------------
    def sign(self) -> int:
        if not self.terms:
            return 0
        approx = float(self)
        scale = sum(abs(float(c)) * math.sqrt(m) for m, c in self.terms.items())
        if abs(approx) > 1e-9 * scale:
            return 1 if approx > 0 else -1
        bits = 64
        while True:
            lo = hi = Fraction(0)
            den = 1 << bits
            for m, c in self.terms.items():
                r = math.isqrt(m * den * den)
                a, b = Fraction(r, den), Fraction(r + (r * r != m * den * den), den)
                if c > 0:
                    lo += c * a
                    hi += c * b
                else:
                    lo += c * b
                    hi += c * a
            if lo > 0:
                return 1
            if hi < 0:
                return -1
            bits *= 2

    def _cmp(self, other) -> int:
        if isinstance(other, float):
            f = float(self)
            return (f > other) - (f < other)
        d = self - other
        if isinstance(d, Surd):
            return d.sign()
        return (d > 0) - (d < 0)

    def __eq__(self, other):
        if isinstance(other, Surd):
            return self.terms == other.terms
        if isinstance(other, (int, Fraction)):
            return False  # a Surd always carries an irrational term
        if isinstance(other, float):
            return float(self) == other
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(tuple(sorted(self.terms.items())))
        return self._hash

    def __lt__(self, other):
        return self._cmp(other) < 0

    def __le__(self, other):
        return self._cmp(other) <= 0

    def __gt__(self, other):
        return self._cmp(other) > 0

    def __ge__(self, other):
        return self._cmp(other) >= 0

    def __abs__(self):
        return -self if self.sign() < 0 else self

    def __float__(self):
        return float(sum(float(c) * math.sqrt(m) for m, c in self.terms.items()))

    def __floor__(self):
        f = math.floor(float(self))
        while self < f:
            f -= 1
        while self >= f + 1:
            f += 1
        return f

    def __ceil__(self):
        return -math.floor(-self)

    def __bool__(self):
        return bool(self.terms)

    def __repr__(self):
        parts = []
        for m in sorted(self.terms):
            c = self.terms[m]
            parts.append(str(c) if m == 1 else f"{c}*sqrt({m})")
        return "Surd(" + " + ".join(parts) + ")"


def sqrt_exact(n: int | Fraction):
    """Exact square root of a nonnegative rational as a Fraction or Surd."""
    q = Fraction(n)
    if q < 0:
        raise ValueError("sqrt of a negative number")
    if q == 0:
        return Fraction(0)
    # sqrt(a/b) = sqrt(a*b)/b
    s, m = _squarefree_split(q.numerator * q.denominator)
    coeff = Fraction(s, q.denominator)
    if m == 1:
        return coeff
    return Surd({m: coeff})


def exact_sqrt_or_float(x):
    """sqrt(x), exact when x is the square of a rational, else a float."""
    if isinstance(x, Fraction) or isinstance(x, int):
        q = Fraction(x)
        if q >= 0:
            a, b = math.isqrt(q.numerator), math.isqrt(q.denominator)
            if a * a == q.numerator and b * b == q.denominator:
                return Fraction(a, b)
    return math.sqrt(float(x))


def to_exact(x):
    """Coerce an int/str/Fraction/Surd into an exact coordinate."""
    if isinstance(x, (Fraction, Surd)):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(x)
    raise TypeError(f"cannot make {x!r} exact")


def _is_float_coord(x) -> bool:
    return isinstance(x, float)


# ---------------------------------------------------------------------------
# multiplication tables

def _mul_coords(dim: int, a: Sequence, b: Sequence) -> tuple:
    if dim == 1:
        return (a[0] * b[0],)
    if dim == 2:
        return (a[0] * b[0] - a[1] * b[1], a[0] * b[1] + a[1] * b[0])
    if dim == 4:
        a0, a1, a2, a3 = a
        b0, b1, b2, b3 = b
        return (
            a0 * b0 - a1 * b1 - a2 * b2 - a3 * b3,
            a0 * b1 + a1 * b0 + a2 * b3 - a3 * b2,
            a0 * b2 - a1 * b3 + a2 * b0 + a3 * b1,
            a0 * b3 + a1 * b2 - a2 * b1 + a3 * b0,
        )
    # Cayley-Dickson doubling: (p,q)(r,s) = (pr - s*q, sp + qr*)
    h = dim // 2
    p, q, r, s = a[:h], a[h:], b[:h], b[h:]
    rc = _conj_coords(r)
    sc = _conj_coords(s)
    left = _sub(_mul_coords(h, p, r), _mul_coords(h, sc, q))
    right = _add(_mul_coords(h, s, p), _mul_coords(h, q, rc))
    return left + right


def _conj_coords(a: Sequence) -> tuple:
    return (a[0],) + tuple(-x for x in a[1:])


def _add(a, b):
    return tuple(x + y for x, y in zip(a, b))


def _sub(a, b):
    return tuple(x - y for x, y in zip(a, b))


class Scalar:
    """Element of R, C, H or O stored as real coordinates (1, i, j, k, ...)."""

    __slots__ = ("kind", "coords", "_hash")

    def __init__(self, kind: AlgebraKind, coords: Iterable):
        coords = tuple(coords)
        if len(coords) != kind.dim:
            raise ValueError(f"{kind.tag} needs {kind.dim} coordinates, got {len(coords)}")
        if any(_is_float_coord(c) for c in coords):
            coords = tuple(float(c) for c in coords)
        else:
            coords = tuple(to_exact(c) for c in coords)
        self.kind = kind
        self.coords = coords
        self._hash = None

    @classmethod
    def _raw(cls, kind, coords):
        s = object.__new__(cls)
        s.kind = kind
        s.coords = coords
        s._hash = None
        return s

    # constructors --------------------------------------------------------
    @classmethod
    def real(cls, kind: AlgebraKind, x) -> "Scalar":
        zero = 0.0 if isinstance(x, float) else Fraction(0)
        return cls(kind, (x,) + (zero,) * (kind.dim - 1))

    @classmethod
    def zero(cls, kind: AlgebraKind, backend: str = "exact") -> "Scalar":
        z = 0.0 if backend == "float" else Fraction(0)
        return cls._raw(kind, (z,) * kind.dim)

    @classmethod
    def one(cls, kind: AlgebraKind, backend: str = "exact") -> "Scalar":
        return cls.unit(kind, 0, backend)

    @classmethod
    def unit(cls, kind: AlgebraKind, index: int, backend: str = "exact") -> "Scalar":
        z, o = (0.0, 1.0) if backend == "float" else (Fraction(0), Fraction(1))
        return cls._raw(kind, tuple(o if i == index else z for i in range(kind.dim)))

    # properties ----------------------------------------------------------
    @property
    def backend(self) -> str:
        return "float" if isinstance(self.coords[0], float) else "exact"

    @property
    def re(self):
        return self.coords[0]

    def im(self) -> "Scalar":
        return Scalar._raw(self.kind, (self.coords[0] * 0,) + self.coords[1:])

    def real_part(self) -> "Scalar":
        return Scalar._raw(self.kind, (self.coords[0],) + tuple(c * 0 for c in self.coords[1:]))

    def is_zero(self) -> bool:
        return all(c == 0 for c in self.coords)

    def is_real(self) -> bool:
        return all(c == 0 for c in self.coords[1:])

    def to_float(self) -> "Scalar":
        return Scalar._raw(self.kind, tuple(float(c) for c in self.coords))

    def with_kind(self, kind: AlgebraKind) -> "Scalar":
        """Embed into a larger algebra (R < C < H < O) by padding with zeros."""
        if kind.dim < self.kind.dim:
            raise KindMismatch("cannot embed into a smaller algebra")
        z = self.coords[0] * 0
        return Scalar._raw(kind, self.coords + (z,) * (kind.dim - self.kind.dim))

    def _check(self, other: "Scalar"):
        if other.kind != self.kind:
            raise KindMismatch(f"{self.kind.tag} vs {other.kind.tag}")
        if other.backend != self.backend:
            raise BackendMismatch(f"{self.backend} vs {other.backend}")

    # arithmetic ----------------------------------------------------------
    def __add__(self, other):
        if not isinstance(other, Scalar):
            return NotImplemented
        self._check(other)
        return Scalar._raw(self.kind, _add(self.coords, other.coords))

    def __sub__(self, other):
        if not isinstance(other, Scalar):
            return NotImplemented
        self._check(other)
        return Scalar._raw(self.kind, _sub(self.coords, other.coords))

    def __neg__(self):
        return Scalar._raw(self.kind, tuple(-c for c in self.coords))

    def __mul__(self, other):
        if isinstance(other, Scalar):
            return mul(self, other)
        if isinstance(other, (int, Fraction, Surd, float)):
            return self.scale(other)
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, (int, Fraction, Surd, float)):
            return self.scale(other)
        return NotImplemented

    def __truediv__(self, other):
        if isinstance(other, Scalar):
            return mul(self, invert(other))
        if isinstance(other, (int, Fraction, Surd, float)):
            if isinstance(other, int):
                other = Fraction(other)
            return Scalar._raw(self.kind, tuple(c / other for c in self.coords))
        return NotImplemented

    def scale(self, r) -> "Scalar":
        if isinstance(r, float) and self.backend == "exact":
            return Scalar._raw(self.kind, tuple(float(c) * r for c in self.coords))
        return Scalar._raw(self.kind, tuple(c * r for c in self.coords))

    def conj(self) -> "Scalar":
        return conjugate(self)

    def norm_sq(self):
        return norm_sq(self)

    def norm(self):
        return norm(self)

    def __eq__(self, other):
        if not isinstance(other, Scalar):
            return NotImplemented
        return self.kind == other.kind and self.coords == other.coords

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.kind.tag, self.coords))
        return self._hash

    def __repr__(self):
        return f"Scalar({self.kind.tag}, {format_scalar(self)})"


_UNIT_NAMES = {
    1: ("",),
    2: ("", "i"),
    4: ("", "i", "j", "k"),
    8: ("", "e1", "e2", "e3", "e4", "e5", "e6", "e7"),
}


def _fmt_coord(c) -> str:
    if isinstance(c, Fraction):
        return str(c)
    if isinstance(c, Surd):
        return repr(c)
    return repr(c)


def format_scalar(a: Scalar) -> str:
    """Human-readable literal like ``2/5+1/5i`` (parsable by the CLI)."""
    names = _UNIT_NAMES[a.kind.dim]
    parts = []
    for c, name in zip(a.coords, names):
        if c == 0:
            continue
        s = _fmt_coord(c)
        if parts and not s.startswith("-"):
            s = "+" + s
        parts.append(s + name)
    return "".join(parts) if parts else "0"


# ---------------------------------------------------------------------------
# the operations

def mul(a: Scalar, b: Scalar) -> Scalar:
    a._check(b)
    return Scalar._raw(a.kind, _mul_coords(a.kind.dim, a.coords, b.coords))


def conjugate(a: Scalar) -> Scalar:
    return Scalar._raw(a.kind, _conj_coords(a.coords))


def norm_sq(a: Scalar):
    s = a.coords[0] * a.coords[0]
    for c in a.coords[1:]:
        s = s + c * c
    return s


def norm(a: Scalar):
    """Euclidean norm; exact when the squared norm is a rational square."""
    return exact_sqrt_or_float(norm_sq(a))


def invert(a: Scalar) -> Scalar:
    n2 = norm_sq(a)
    if n2 == 0:
        raise ZeroDivisionError("inverse of zero")
    if isinstance(n2, int):
        n2 = Fraction(n2)
    return Scalar._raw(a.kind, tuple(c / n2 for c in _conj_coords(a.coords)))


# ---------------------------------------------------------------------------
# matrices over R, C, H

class Matrix:
    """Square matrix over R, C or H.  Octonion matrices are rejected."""

    __slots__ = ("rows", "_hash")

    def __init__(self, rows: Sequence[Sequence[Scalar]]):
        rows = tuple(tuple(r) for r in rows)
        size = len(rows)
        if size == 0 or any(len(r) != size for r in rows):
            raise ValueError("matrix must be square and nonempty")
        kind, backend = rows[0][0].kind, rows[0][0].backend
        if kind == O:
            raise KindMismatch("octonion matrices are not supported; use generator words")
        for r in rows:
            for e in r:
                if e.kind != kind:
                    raise KindMismatch("mixed kinds in matrix")
                if e.backend != backend:
                    raise BackendMismatch("mixed backends in matrix")
        self.rows = rows
        self._hash = None

    @property
    def size(self) -> int:
        return len(self.rows)

    @property
    def kind(self) -> AlgebraKind:
        return self.rows[0][0].kind

    @property
    def backend(self) -> str:
        return self.rows[0][0].backend

    def __getitem__(self, ij):
        i, j = ij
        return self.rows[i][j]

    @classmethod
    def identity(cls, size: int, kind: AlgebraKind, backend: str = "exact") -> "Matrix":
        z, o = Scalar.zero(kind, backend), Scalar.one(kind, backend)
        return cls([[o if i == j else z for j in range(size)] for i in range(size)])

    @classmethod
    def diag(cls, entries: Sequence[Scalar]) -> "Matrix":
        z = Scalar.zero(entries[0].kind, entries[0].backend)
        n = len(entries)
        return cls([[entries[i] if i == j else z for j in range(n)] for i in range(n)])

    def dagger(self) -> "Matrix":
        n = self.size
        return Matrix([[conjugate(self.rows[j][i]) for j in range(n)] for i in range(n)])

    def __matmul__(self, other: "Matrix") -> "Matrix":
        return mat_mul(self, other)

    def apply(self, v: Sequence[Scalar]) -> tuple[Scalar, ...]:
        """Left action on a column vector."""
        out = []
        for row in self.rows:
            acc = mul(row[0], v[0])
            for a, x in zip(row[1:], v[1:]):
                acc = acc + mul(a, x)
            out.append(acc)
        return tuple(out)

    def scale_right(self, s: Scalar) -> "Matrix":
        return Matrix([[mul(e, s) for e in r] for r in self.rows])

    def scale_left(self, s: Scalar) -> "Matrix":
        return Matrix([[mul(s, e) for e in r] for r in self.rows])

    def to_float(self) -> "Matrix":
        return Matrix([[e.to_float() for e in r] for r in self.rows])

    def max_abs_diff(self, other: "Matrix") -> float:
        return max(
            float(abs(float(x) - float(y)))
            for ra, rb in zip(self.rows, other.rows)
            for a, b in zip(ra, rb)
            for x, y in zip(a.coords, b.coords)
        )

    def is_diagonal(self) -> bool:
        return all(self.rows[i][j].is_zero() for i in range(self.size) for j in range(self.size) if i != j)

    def __eq__(self, other):
        return isinstance(other, Matrix) and self.rows == other.rows

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(self.rows)
        return self._hash

    def __repr__(self):
        body = "; ".join(", ".join(format_scalar(e) for e in r) for r in self.rows)
        return f"Matrix[{self.kind.tag}]({body})"


def mat_mul(A: Matrix, B: Matrix) -> Matrix:
    if A.size != B.size:
        raise ValueError("size mismatch")
    if A.kind != B.kind:
        raise KindMismatch("kind mismatch")
    n = A.size
    cols = [[B.rows[k][j] for k in range(n)] for j in range(n)]
    rows = []
    for r in A.rows:
        row = []
        for col in cols:
            acc = mul(r[0], col[0])
            for a, b in zip(r[1:], col[1:]):
                acc = acc + mul(a, b)
            row.append(acc)
        rows.append(row)
    return Matrix(rows)


def j_form(n: int, kind: AlgebraKind, backend: str = "exact") -> Matrix:
    """The Hermitian form of signature (n+1, 1) with -1 in the corners."""
    size = n + 2
    z, o = Scalar.zero(kind, backend), Scalar.one(kind, backend)
    rows = [[z] * size for _ in range(size)]
    rows[0][size - 1] = -o
    rows[size - 1][0] = -o
    for i in range(1, size - 1):
        rows[i][i] = o
    return Matrix(rows)


def j_unitary_check(A: Matrix, n: int, tol: float = 1e-9) -> bool:
    """True when A^dagger J A == J (exactly, or within tol for floats)."""
    if A.size != n + 2:
        raise ValueError("matrix size must be n+2")
    J = j_form(n, A.kind, A.backend)
    lhs = mat_mul(mat_mul(A.dagger(), J), A)
    if A.backend == "exact":
        return lhs == J
    return lhs.max_abs_diff(J) <= tol
