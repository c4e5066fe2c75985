"""Iwasawa inversion spaces and their upper half-spaces.

Points of the boundary space are pairs ``(z, t)`` with ``z`` a vector of
``n`` scalars and ``t`` a purely imaginary scalar.  Points of the closed
upper half-space are pairs ``(z, w)`` with ``Re(w) >= 0``.  The point at
infinity is the atom ``INF``.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
import math
from typing import Sequence, Union

from .algebra import (
    AlgebraKind, Matrix, R, Scalar, conjugate, exact_sqrt_or_float, format_scalar,
    invert, j_form, j_unitary_check, mat_mul, mul, norm_sq, sqrt_exact,
)

__all__ = [
    "SpaceParams", "IwasawaPoint", "HalfSpacePoint", "INF", "Infinity",
    "InversionKind", "MINUS", "PLUS", "CONJ", "group_mul", "group_inv", "gauge",
    "gauge4", "gauge_sq", "cygan_distance", "cygan_distance4", "dilate", "invert_point",
    "embed_phi", "from_phi", "j_pairing", "mobius_apply", "horoheight",
    "translation_matrix", "inversion_matrix", "rotation_matrix", "MoebiusMap",
    "sqrt2", "inner", "vec_norm_sq", "apply_rotation", "matrix_inverse_j",
]


@dataclass(frozen=True)
class SpaceParams:
    kind: AlgebraKind
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")

    @property
    def real_dim(self) -> int:
        return self.n * self.kind.dim + self.kind.dim - 1


class Infinity:
    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self):
        return "INF"

    def __reduce__(self):
        return (Infinity, ())


INF = Infinity()


def _as_scalar(kind: AlgebraKind, x) -> Scalar:
    if isinstance(x, Scalar):
        return x
    if isinstance(x, (tuple, list)):
        return Scalar(kind, x)
    return Scalar.real(kind, x)


class IwasawaPoint:
    """Boundary point (z, t) of the upper half-space."""

    __slots__ = ("z", "t", "_hash")

    def __init__(self, z: Sequence[Scalar], t: Scalar, check: bool = True):
        z = tuple(z)
        if check:
            if not z:
                raise ValueError("z must have at least one coordinate")
            if t.coords[0] != 0:
                raise ValueError("t must be purely imaginary")
            for c in z:
                if c.kind != t.kind:
                    raise ValueError("mixed kinds")
        self.z = z
        self.t = t
        self._hash = None

    @classmethod
    def make(cls, kind: AlgebraKind, z: Sequence, t=None) -> "IwasawaPoint":
        zs = tuple(_as_scalar(kind, c) for c in z)
        backend = zs[0].backend
        if any(c.backend != backend for c in zs):
            zs = tuple(c.to_float() for c in zs)
            backend = "float"
        if t is None:
            ts = Scalar.zero(kind, backend)
        else:
            ts = _as_scalar(kind, t)
            if ts.backend != backend:
                if backend == "float":
                    ts = ts.to_float()
                else:
                    zs = tuple(c.to_float() for c in zs)
        return cls(zs, ts)

    @classmethod
    def origin(cls, params: SpaceParams, backend: str = "exact") -> "IwasawaPoint":
        z = Scalar.zero(params.kind, backend)
        return cls((z,) * params.n, z, check=False)

    @property
    def w(self) -> Scalar:
        return self.t

    @property
    def kind(self) -> AlgebraKind:
        return self.t.kind

    @property
    def n(self) -> int:
        return len(self.z)

    @property
    def backend(self) -> str:
        return self.t.backend

    def is_origin(self) -> bool:
        return self.t.is_zero() and all(c.is_zero() for c in self.z)

    def to_float(self) -> "IwasawaPoint":
        return IwasawaPoint(tuple(c.to_float() for c in self.z), self.t.to_float(), check=False)

    def to_half(self) -> "HalfSpacePoint":
        return HalfSpacePoint(self.z, self.t, check=False)

    def real_coords(self) -> tuple:
        """Flattened real coordinates of z followed by the imaginary part of t."""
        out = []
        for c in self.z:
            out.extend(c.coords)
        out.extend(self.t.coords[1:])
        return tuple(out)

    def __eq__(self, other):
        return isinstance(other, IwasawaPoint) and self.z == other.z and self.t == other.t

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(("P", self.z, self.t))
        return self._hash

    def __repr__(self):
        zs = ", ".join(format_scalar(c) for c in self.z)
        if self.kind.dim == 1:
            return f"({zs})"
        return f"({zs}; t={format_scalar(self.t)})"


class HalfSpacePoint:
    """Point (z, w) of the closed upper half-space, Re(w) >= 0."""

    __slots__ = ("z", "w", "_hash")

    def __init__(self, z: Sequence[Scalar], w: Scalar, check: bool = True):
        z = tuple(z)
        if check and w.coords[0] < 0:
            raise ValueError("Re(w) must be nonnegative")
        self.z = z
        self.w = w
        self._hash = None

    @classmethod
    def make(cls, kind: AlgebraKind, z: Sequence, w) -> "HalfSpacePoint":
        zs = tuple(_as_scalar(kind, c) for c in z)
        ws = _as_scalar(kind, w)
        if ws.backend == "float" or any(c.backend == "float" for c in zs):
            zs = tuple(c.to_float() for c in zs)
            ws = ws.to_float()
        return cls(zs, ws)

    @property
    def kind(self) -> AlgebraKind:
        return self.w.kind

    @property
    def n(self) -> int:
        return len(self.z)

    @property
    def backend(self) -> str:
        return self.w.backend

    @property
    def t(self) -> Scalar:
        return self.w.im()

    def on_boundary(self) -> bool:
        return self.w.coords[0] == 0

    def to_boundary(self) -> IwasawaPoint:
        if not self.on_boundary():
            raise ValueError("point is not on the boundary")
        return IwasawaPoint(self.z, self.w, check=False)

    def to_float(self) -> "HalfSpacePoint":
        return HalfSpacePoint(tuple(c.to_float() for c in self.z), self.w.to_float(), check=False)

    def __eq__(self, other):
        return isinstance(other, HalfSpacePoint) and self.z == other.z and self.w == other.w

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(("H", self.z, self.w))
        return self._hash

    def __repr__(self):
        zs = ", ".join(format_scalar(c) for c in self.z)
        return f"({zs}; w={format_scalar(self.w)})"


Point = Union[IwasawaPoint, HalfSpacePoint]


def _w(p: Point) -> Scalar:
    return p.t if isinstance(p, IwasawaPoint) else p.w


def _rebuild(p: Point, z, w) -> Point:
    if isinstance(p, IwasawaPoint):
        return IwasawaPoint(z, w, check=False)
    return HalfSpacePoint(z, w, check=False)


# ---------------------------------------------------------------------------
# group structure and gauge

def inner(z: Sequence[Scalar], zp: Sequence[Scalar]) -> Scalar:
    acc = mul(conjugate(z[0]), zp[0])
    for a, b in zip(z[1:], zp[1:]):
        acc = acc + mul(conjugate(a), b)
    return acc


def vec_norm_sq(z: Sequence[Scalar]):
    s = norm_sq(z[0])
    for c in z[1:]:
        s = s + norm_sq(c)
    return s


def group_mul(p: Point, q: Point) -> Point:
    """(z,t)*(z',t') = (z+z', t+t'+2 Im<z,z'>); also on half-space points."""
    if p.n != q.n or p.kind != q.kind:
        raise ValueError("points live in different spaces")
    z = tuple(a + b for a, b in zip(p.z, q.z))
    twist = inner(p.z, q.z).im().scale(2)
    w = _w(p) + _w(q) + twist
    if isinstance(p, IwasawaPoint) and isinstance(q, IwasawaPoint):
        return IwasawaPoint(z, w, check=False)
    return HalfSpacePoint(z, w, check=False)


def group_inv(p: Point) -> Point:
    return _rebuild(p, tuple(-c for c in p.z), -_w(p))


def _gauge_scalar(p: Point) -> Scalar:
    """The scalar ||z||^2 + |Re w| + Im w whose norm is the squared gauge."""
    w = _w(p)
    re = w.coords[0]
    base = vec_norm_sq(p.z) + (re if re >= 0 else -re)
    return Scalar._raw(w.kind, (base,) + w.coords[1:])


def gauge4(p: Point):
    """Fourth power of the gauge (exact in the rational backend)."""
    if p is INF:
        raise ValueError("gauge of infinity")
    return norm_sq(_gauge_scalar(p))


def gauge_sq(p: Point):
    return exact_sqrt_or_float(gauge4(p))


def gauge(p: Point):
    """||(z,t)|| = | ||z||^2 + t |^(1/2), extended to half-space points."""
    g2 = gauge_sq(p)
    return exact_sqrt_or_float(g2)


def cygan_distance4(p: Point, q: Point):
    return gauge4(group_mul(group_inv(p), q))


def cygan_distance(p: Point, q: Point):
    """d(p, q) = gauge(p^-1 * q)."""
    return gauge(group_mul(group_inv(p), q))


def dilate(r, p: Point) -> Point:
    if r <= 0:
        raise ValueError("dilation factor must be positive")
    if isinstance(r, int):
        r = Fraction(r)
    return _rebuild(p, tuple(c.scale(r) for c in p.z), _w(p).scale(r * r))


# ---------------------------------------------------------------------------
# inversions

@dataclass(frozen=True)
class InversionKind:
    """minus: Koranyi inversion; plus: A = -I; conj: A = diag(-1,1,...,1);
    general: an explicit unitary n x n matrix A (rows of scalars)."""

    tag: str
    A: tuple | None = None

    def __post_init__(self):
        if self.tag not in ("minus", "plus", "conj", "general"):
            raise ValueError(f"unknown inversion kind {self.tag}")
        if self.tag == "general":
            if self.A is None:
                raise ValueError("general inversion needs a matrix")
            m = Matrix(self.A)
            prod = mat_mul(m.dagger(), m)
            ident = Matrix.identity(m.size, m.kind, m.backend)
            ok = prod == ident if m.backend == "exact" else prod.max_abs_diff(ident) < 1e-12
            if not ok:
                raise ValueError("inversion matrix A must be unitary")

    def rotation(self, n: int, kind: AlgebraKind, backend: str = "exact") -> tuple:
        """The unitary A as rows of scalars."""
        one, zero = Scalar.one(kind, backend), Scalar.zero(kind, backend)
        if self.tag == "general":
            rows = self.A
            if backend == "float":
                rows = tuple(tuple(e.to_float() for e in r) for r in rows)
            return rows
        diag = [one] * n
        if self.tag == "plus":
            diag = [-one] * n
        elif self.tag == "conj":
            diag = [-one] + [one] * (n - 1)
        return tuple(tuple(diag[i] if i == j else zero for j in range(n)) for i in range(n))

    def __repr__(self):
        return f"InversionKind({self.tag})"


MINUS = InversionKind("minus")
PLUS = InversionKind("plus")
CONJ = InversionKind("conj")


def apply_rotation(rows: tuple, z: Sequence[Scalar]) -> tuple:
    out = []
    for r in rows:
        acc = mul(r[0], z[0])
        for a, b in zip(r[1:], z[1:]):
            acc = acc + mul(a, b)
        out.append(acc)
    return tuple(out)


def _signed_rotation(kind_inv: InversionKind, z: Sequence[Scalar]) -> tuple:
    # fast paths for the diagonal kinds
    if kind_inv.tag == "minus":
        return tuple(z)
    if kind_inv.tag == "plus":
        return tuple(-c for c in z)
    if kind_inv.tag == "conj":
        return (-z[0],) + tuple(z[1:])
    return apply_rotation(kind_inv.rotation(len(z), z[0].kind, z[0].backend), z)


def invert_point(kind_inv: InversionKind, p, params: SpaceParams | None = None, backend: str | None = None):
    """Apply the inversion f_A o (Koranyi inversion), total on extended points.

    ``params`` is needed only to build the origin when ``p`` is INF.
    """
    if p is INF:
        if params is None:
            raise ValueError("space parameters needed to invert infinity")
        return IwasawaPoint.origin(params, backend or "exact")
    w = _w(p)
    b = Scalar._raw(w.kind, (vec_norm_sq(p.z) + w.coords[0],) + w.coords[1:])
    nb = norm_sq(b)
    if nb == 0:
        return INF
    binv = invert(b)
    z = tuple(-mul(c, binv) for c in p.z)
    nw = conjugate(w) / nb
    z = _signed_rotation(kind_inv, z)
    return _rebuild(p, z, nw)


# ---------------------------------------------------------------------------
# projective model

def sqrt2(backend: str):
    return math.sqrt(2.0) if backend == "float" else sqrt_exact(2)


def embed_phi(p, params: SpaceParams | None = None, backend: str | None = None) -> tuple:
    """phi(z, w) = (1, sqrt2 z, w + ||z||^2); phi(INF) = (0, ..., 0, 1)."""
    if p is INF:
        if params is None:
            raise ValueError("space parameters needed to embed infinity")
        bk = backend or "exact"
        zero, one = Scalar.zero(params.kind, bk), Scalar.one(params.kind, bk)
        return (zero,) * (params.n + 1) + (one,)
    w = _w(p)
    s2 = sqrt2(w.backend)
    one = Scalar.one(w.kind, w.backend)
    last = Scalar._raw(w.kind, (w.coords[0] + vec_norm_sq(p.z),) + w.coords[1:])
    return (one,) + tuple(c.scale(s2) for c in p.z) + (last,)


def _is_zero_scalar(s: Scalar, ref: float) -> bool:
    if s.backend == "exact":
        return s.is_zero()
    return math.sqrt(norm_sq(s)) <= 1e-13 * max(ref, 1e-300)


def from_phi(v: Sequence[Scalar], boundary: bool | None = None):
    """Inverse of embed_phi on projective vectors; first coordinate 0 is INF.

    Normalization divides on the right by the first coordinate.  When
    ``boundary`` is true the real part of w is set to exactly zero.
    """
    ref = max(math.sqrt(float(norm_sq(c))) for c in v)
    if _is_zero_scalar(v[0], ref):
        return INF
    inv0 = invert(v[0])
    u = [mul(c, inv0) for c in v]
    s2 = sqrt2(u[0].backend)
    z = tuple(c / s2 for c in u[1:-1])
    last = u[-1]
    w = Scalar._raw(last.kind, (last.coords[0] - vec_norm_sq(z),) + last.coords[1:])
    if boundary is None:
        boundary = w.coords[0] == 0
    if boundary:
        w = Scalar._raw(w.kind, (w.coords[0] * 0,) + w.coords[1:])
        return IwasawaPoint(z, w, check=False)
    if w.backend == "float" and w.coords[0] < 0:
        w = Scalar._raw(w.kind, (0.0,) + w.coords[1:])
    return HalfSpacePoint(z, w, check=False)


def j_pairing(u: Sequence[Scalar], v: Sequence[Scalar]) -> Scalar:
    """<u, v>_J = -conj(u_1) v_last + sum conj(u_i) v_i - conj(u_last) v_1."""
    if len(u) != len(v):
        raise ValueError("length mismatch")
    acc = -(mul(conjugate(u[0]), v[-1]) + mul(conjugate(u[-1]), v[0]))
    for a, b in zip(u[1:-1], v[1:-1]):
        acc = acc + mul(conjugate(a), b)
    return acc


# ---------------------------------------------------------------------------
# Moebius maps

def translation_matrix(p: IwasawaPoint) -> Matrix:
    """Lower block-triangular matrix of left translation by p = (z, t)."""
    kind, backend, n = p.kind, p.backend, p.n
    s2 = sqrt2(backend)
    zero, one = Scalar.zero(kind, backend), Scalar.one(kind, backend)
    size = n + 2
    rows = [[zero] * size for _ in range(size)]
    for i in range(size):
        rows[i][i] = one
    for i, c in enumerate(p.z):
        rows[1 + i][0] = c.scale(s2)
        rows[size - 1][1 + i] = conjugate(c).scale(s2)
    rows[size - 1][0] = Scalar._raw(kind, (vec_norm_sq(p.z) + p.t.coords[0],) + p.t.coords[1:])
    return Matrix(rows)


def rotation_matrix(rows_A: tuple) -> Matrix:
    """Block-diagonal diag(1, A, 1) for a unitary A acting on z."""
    n = len(rows_A)
    kind, backend = rows_A[0][0].kind, rows_A[0][0].backend
    zero, one = Scalar.zero(kind, backend), Scalar.one(kind, backend)
    size = n + 2
    rows = [[zero] * size for _ in range(size)]
    rows[0][0] = one
    rows[size - 1][size - 1] = one
    for i in range(n):
        for j in range(n):
            rows[1 + i][1 + j] = rows_A[i][j]
    return Matrix(rows)


def inversion_matrix(kind_inv: InversionKind, params: SpaceParams, backend: str = "exact") -> Matrix:
    """[[0,0,-1],[0,A,0],[-1,0,0]]."""
    A = kind_inv.rotation(params.n, params.kind, backend)
    return mat_mul(rotation_matrix(A), j_form(params.n, params.kind, backend))


def matrix_inverse_j(M: Matrix) -> Matrix:
    """Inverse of a J-unitary matrix: J M^dagger J."""
    J = j_form(M.size - 2, M.kind, M.backend)
    return mat_mul(mat_mul(J, M.dagger()), J)


class MoebiusMap:
    """A J-unitary matrix acting projectively on phi-coordinates."""

    __slots__ = ("matrix",)

    def __init__(self, matrix: Matrix, validate: bool = True):
        if validate and not j_unitary_check(matrix, matrix.size - 2):
            raise ValueError("matrix is not J-unitary")
        self.matrix = matrix

    def __matmul__(self, other: "MoebiusMap") -> "MoebiusMap":
        return MoebiusMap(mat_mul(self.matrix, other.matrix), validate=False)

    def inverse(self) -> "MoebiusMap":
        return MoebiusMap(matrix_inverse_j(self.matrix), validate=False)

    def __call__(self, p):
        return mobius_apply(self, p)

    def __repr__(self):
        return f"MoebiusMap({self.matrix!r})"


def _params_of_matrix(M: Matrix) -> SpaceParams:
    return SpaceParams(M.kind, M.size - 2)


def mobius_apply(M, p):
    """Apply a Moebius map to an extended point via phi-coordinates.

    Boundary points map to boundary points.  A plain ``Matrix`` is checked
    for J-unitarity first; ``MoebiusMap`` values were checked on creation.
    """
    if isinstance(M, Matrix):
        M = MoebiusMap(M)
    mat = M.matrix
    params = _params_of_matrix(mat)
    backend = mat.backend
    if p is not INF and p.backend != backend:
        if backend == "float":
            p = p.to_float()
        else:
            mat = mat.to_float()
            backend = "float"
    v = embed_phi(p, params, backend)
    boundary = p is INF or isinstance(p, IwasawaPoint) or (isinstance(p, HalfSpacePoint) and p.on_boundary())
    out = from_phi(mat.apply(v), boundary=boundary)
    if out is not INF and isinstance(p, HalfSpacePoint) and isinstance(out, IwasawaPoint):
        out = out.to_half()
    return out


def horoheight(h: HalfSpacePoint, M: MoebiusMap | Matrix | None = None):
    """Horoheight of h seen from M(INF): Re(w) of M^-1 h (M = None means INF)."""
    if M is not None:
        if isinstance(M, Matrix):
            M = MoebiusMap(M)
        h = mobius_apply(M.inverse(), h)
        if h is INF:
            return math.inf
    return _w(h).coords[0]
