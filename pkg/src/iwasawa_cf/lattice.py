"""Lattices, fundamental domains, floor maps and the preset catalog.

Every preset stores its translation lattice split into a ``z`` part (a
lattice in R^m, m = n * dim k) and a ``t`` part (a lattice in Im k), each
with its own fundamental domain.  Folded presets add a finite rotation set.

A digit ``g = (r, a)`` acts by ``g(x) = a * r(x)``: rotate first, then
translate.  The floor of ``x`` is the digit ``g`` with ``g^-1(x)`` in K.
"""
from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Iterator, Sequence

from .algebra import (
    C, H, Matrix, O, R, Scalar, Surd, exact_sqrt_or_float, mat_mul, mul, sqrt_exact,
)
from .space import (
    CONJ, MINUS, PLUS, InversionKind, IwasawaPoint, SpaceParams, apply_rotation,
    group_inv, group_mul, inner, rotation_matrix, translation_matrix,
)

__all__ = [
    "ZLattice", "BoxDomain", "DirichletDomain", "ParallelogramDomain", "Rotation",
    "Digit", "Preset", "PRESET_NAMES", "get_preset", "floor_map", "contains", "radius",
    "properness_check", "digit_to_matrix", "all_presets", "cayley_code", "parse_preset_id",
]


# ---------------------------------------------------------------------------
# small exact linear algebra on tuples

def _solve_inverse(B: Sequence[Sequence]) -> tuple:
    """Inverse of a square matrix with Fraction/Surd/float entries."""
    m = len(B)
    A = [list(row) + [Fraction(int(i == j)) for j in range(m)] for i, row in enumerate(B)]
    for col in range(m):
        piv = next(r for r in range(col, m) if A[r][col] != 0)
        A[col], A[piv] = A[piv], A[col]
        p = A[col][col]
        A[col] = [e / p for e in A[col]]
        for r in range(m):
            if r != col and A[r][col] != 0:
                f = A[r][col]
                A[r] = [a - f * b for a, b in zip(A[r], A[col])]
    return tuple(tuple(row[m:]) for row in A)


def _dot(u, v):
    s = u[0] * v[0]
    for a, b in zip(u[1:], v[1:]):
        s = s + a * b
    return s


def _norm2(u):
    return _dot(u, u)


def _to_float_vec(v):
    return tuple(float(c) for c in v)


# ---------------------------------------------------------------------------
# lattices in R^m

class ZLattice:
    """Lattice in R^m spanned by the rows of ``basis`` (exact coordinates).

    ``decoder`` optionally overrides nearest-point candidate generation.
    """

    def __init__(self, basis: Sequence[Sequence], name: str = "", decoder: Callable | None = None,
                 cosets: Sequence[Sequence] = ()):
        self.basis = tuple(tuple(Fraction(c) if isinstance(c, int) else c for c in row) for row in basis)
        self.m = len(self.basis)
        self.name = name
        self.standard = all(
            self.basis[i][j] == (1 if i == j else 0) for i in range(self.m) for j in range(self.m)
        )
        self.inv = _solve_inverse(self.basis)
        self.basis_f = tuple(_to_float_vec(r) for r in self.basis)
        self.inv_f = tuple(_to_float_vec(r) for r in self.inv)
        self.decoder = decoder
        # extra coset shifts: lattice = union over shifts s of (s + span(basis))
        self.cosets = tuple(tuple(Fraction(c) for c in s) for s in cosets) or (tuple(Fraction(0) for _ in range(self.m)),)

    def coords(self, x: Sequence) -> tuple:
        """Coordinates of x in the basis (x = sum c_i b_i)."""
        if self.standard:
            return tuple(x)
        inv = self.inv_f if isinstance(x[0], float) else self.inv
        return tuple(_dot(x, [inv[i][j] for i in range(self.m)]) for j in range(self.m))

    def point(self, c: Sequence) -> tuple:
        if self.standard:
            return tuple(Fraction(v) if isinstance(v, int) else v for v in c)
        out = [Fraction(0)] * self.m
        for ci, b in zip(c, self.basis):
            if ci:
                out = [o + ci * bj for o, bj in zip(out, b)]
        return tuple(out)

    def contains_point(self, x: Sequence) -> bool:
        for s in self.cosets:
            c = self.coords(tuple(a - b for a, b in zip(x, s)))
            if all(isinstance(v, (int, Fraction)) and Fraction(v).denominator == 1 for v in c):
                return True
        return False

    def nearby(self, x: Sequence, radius: int = 1) -> list:
        """Lattice points near x (Babai rounding plus a box of offsets)."""
        out = []
        offsets = list(itertools.product(range(-radius, radius + 1), repeat=self.m))
        if isinstance(x[0], float):
            for s in self.cosets:
                c = self.coords(tuple(a - float(b) for a, b in zip(x, s)))
                base = [math.floor(v + 0.5) for v in c]
                for off in offsets:
                    k = [b + o for b, o in zip(base, off)]
                    p = [float(sv) for sv in s]
                    for ki, row in zip(k, self.basis_f):
                        if ki:
                            p = [pj + ki * bj for pj, bj in zip(p, row)]
                    out.append(tuple(p))
            return out
        for s in self.cosets:
            c = self.coords(tuple(a - b for a, b in zip(x, s)))
            base = [math.floor(v + Fraction(1, 2)) if not isinstance(v, float) else math.floor(v + 0.5) for v in c]
            for off in offsets:
                p = self.point([b + o for b, o in zip(base, off)])
                out.append(tuple(a + b for a, b in zip(p, s)))
        return out

    def enumerate(self, bound: int) -> list:
        """All lattice points with basis coordinates in [-bound, bound]."""
        out = []
        for c in itertools.product(range(-bound, bound + 1), repeat=self.m):
            base = self.point(c)
            for s in self.cosets:
                if any(s) and any(abs(v) == bound for v in c):
                    continue
                out.append(tuple(a + b for a, b in zip(base, s)))
        return out


def _round_choices(v):
    """Nearest integers to v; both neighbours on an exact half tie."""
    if isinstance(v, float):
        return (math.floor(v + 0.5),)
    f = math.floor(v)
    d = v - f
    if d == Fraction(1, 2):
        return (f, f + 1)
    return (f + 1,) if d > Fraction(1, 2) else (f,)


def coset_decoder(shifts: Sequence[Sequence]) -> Callable:
    """Nearest-point candidates for a union of shifted copies of Z^m."""
    shifts = tuple(tuple(Fraction(c) for c in s) for s in shifts)
    shifts_f = tuple(tuple(float(c) for c in s) for s in shifts)

    def decode(x):
        if isinstance(x[0], float):
            out = []
            for sf in shifts_f:
                out.append(tuple(math.floor(a - b + 0.5) + b for a, b in zip(x, sf)))
            return out
        # round in floats; exact rounding only next to a half tie, and exact
        # candidates only for cosets whose float distance is near the best
        xf = [float(a) for a in x]
        found = []
        for s, sf in zip(shifts, shifts_f):
            choices = []
            for a, b, af, bf in zip(x, s, xf, sf):
                v = af - bf
                if abs(v - math.floor(v) - 0.5) > 1e-9:
                    choices.append((math.floor(v + 0.5),))
                else:
                    choices.append(_round_choices(a - b))
            for pick in itertools.product(*choices):
                d = sum((af - p - bf) ** 2 for af, p, bf in zip(xf, pick, sf))
                found.append((d, pick, s))
        lo = min(f[0] for f in found)
        return [tuple(Fraction(p) + b for p, b in zip(pick, s))
                for d, pick, s in found if d <= lo + 1e-9 * (1 + lo)]
    return decode


# ---------------------------------------------------------------------------
# fundamental domains

def _lex_less(a, b) -> bool:
    for x, y in zip(a, b):
        if x != y:
            return x < y
    return False


class BoxDomain:
    """{sum c_i b_i : lo_i <= c_i < hi_i} in lattice coordinates.

    ``closed`` marks coordinates whose upper bound is included.
    """

    kind = "box"

    def __init__(self, lattice: ZLattice, lo: Sequence, hi: Sequence, closed: Sequence[bool] | None = None):
        self.lattice = lattice
        self.lo = tuple(lo)
        self.hi = tuple(hi)
        self.closed = tuple(closed) if closed is not None else (False,) * len(self.lo)
        self.lo_f = _to_float_vec(self.lo)
        self.hi_f = _to_float_vec(self.hi)
        self.is_tile = all(h - l == 1 for l, h in zip(self.lo, self.hi)) and len(lattice.cosets) == 1

    def contains(self, y) -> bool:
        c = self.lattice.coords(y)
        fl = isinstance(c[0], float)
        lo, hi = (self.lo_f, self.hi_f) if fl else (self.lo, self.hi)
        for v, l, h, cl in zip(c, lo, hi, self.closed):
            if v < l or v > h or (v == h and not cl):
                return False
        return True

    def margin(self, y) -> float:
        c = self.lattice.coords(y)
        return min(min(float(v) - l, h - float(v)) for v, l, h in zip(c, self.lo_f, self.hi_f))

    def floor(self, x) -> tuple | None:
        """Lattice point a with x - a in the box, when the box is a tile."""
        if not self.is_tile:
            return None
        c = self.lattice.coords(x)
        if isinstance(c[0], float):
            k = [math.floor(v - l) for v, l in zip(c, self.lo_f)]
        else:
            k = [math.floor(v - l) for v, l in zip(c, self.lo)]
        return self.lattice.point(k)

    def vertices(self) -> list:
        out = []
        for pick in itertools.product(*zip(self.lo, self.hi)):
            out.append(self.lattice.point(pick))
        return out


class DirichletDomain:
    """Points closer to 0 than to any other lattice point.

    Ties go to the translate whose reduced coordinates are
    lexicographically smallest.
    """

    kind = "dirichlet"

    def __init__(self, lattice: ZLattice, radius_sq=None, neighbours: int = 1):
        self.lattice = lattice
        self._radius_sq = radius_sq
        self.neighbours = neighbours
        self._vertices = None

    def candidates(self, x):
        if self.lattice.decoder is not None:
            return self.lattice.decoder(x)
        return self.lattice.nearby(x, self.neighbours)

    def floor(self, x):
        cands = self.candidates(x)
        if len(cands) > 1 and not isinstance(x[0], float):
            # rank in floats; exact comparison only among near-ties
            xf = _to_float_vec(x)
            d = [sum((p - float(q)) ** 2 for p, q in zip(xf, a)) for a in cands]
            lo = min(d)
            cands = [a for a, v in zip(cands, d) if v <= lo + 1e-9 * (1 + lo)]
        best, best_key = None, None
        for a in cands:
            y = tuple(p - q for p, q in zip(x, a))
            key = (_norm2(y), y)
            if best is None or key[0] < best_key[0] or (key[0] == best_key[0] and _lex_less(y, best_key[1])):
                best, best_key = a, key
        return best

    def contains(self, y) -> bool:
        a = self.floor(y)
        return all(c == 0 for c in a)

    def margin(self, y) -> float:
        yf = _to_float_vec(y)
        d = sorted(sum((p - float(q)) ** 2 for p, q in zip(yf, a)) for a in self.candidates(yf))
        return (d[1] - d[0]) if len(d) > 1 else math.inf

    def radius_sq(self):
        if self._radius_sq is None:
            self._radius_sq = max((_norm2(v) for v in self.vertices()), key=float)
        return self._radius_sq

    def vertices(self) -> list:
        if self._vertices is None:
            self._vertices = _voronoi_vertices_2d(self.lattice)
        return self._vertices


def _voronoi_vertices_2d(lat: ZLattice) -> list:
    if lat.m != 2:
        raise ValueError("vertex enumeration is implemented in dimension 2 only")
    vecs = [p for p in lat.enumerate(3) if any(c != 0 for c in p)]
    verts = []
    for u, v in itertools.combinations(vecs, 2):
        # solve y.u = |u|^2/2, y.v = |v|^2/2
        det = u[0] * v[1] - u[1] * v[0]
        if det == 0:
            continue
        bu, bv = _norm2(u) / 2, _norm2(v) / 2
        y = ((bu * v[1] - bv * u[1]) / det, (u[0] * bv - v[0] * bu) / det)
        if all(_dot(y, w) <= _norm2(w) / 2 for w in vecs):
            if y not in verts:
                verts.append(y)
    return verts


class ParallelogramDomain:
    """{o + s e1 + u e2 : 0 <= s, u < 1} for vectors that need not span the lattice."""

    kind = "parallelogram"

    def __init__(self, lattice: ZLattice, origin, e1, e2):
        self.lattice = lattice
        self.origin = tuple(Fraction(c) for c in origin)
        self.e = (tuple(Fraction(c) for c in e1), tuple(Fraction(c) for c in e2))
        self.inv = _solve_inverse(self.e)
        self.inv_f = tuple(_to_float_vec(r) for r in self.inv)

    def _st(self, y):
        d = tuple(a - b for a, b in zip(y, self.origin)) if not isinstance(y[0], float) else \
            tuple(a - float(b) for a, b in zip(y, self.origin))
        inv = self.inv_f if isinstance(y[0], float) else self.inv
        return tuple(_dot(d, [inv[i][j] for i in range(2)]) for j in range(2))

    def contains(self, y) -> bool:
        return all(0 <= v < 1 for v in self._st(y))

    def margin(self, y) -> float:
        return min(min(float(v), 1 - float(v)) for v in self._st(y))

    def floor(self, x):
        for a in self.lattice.nearby(x, 2):
            y = tuple(p - q for p, q in zip(x, a))
            if self.contains(y):
                return a
        raise RuntimeError("no lattice translate lands in the parallelogram")

    def vertices(self):
        o, (e1, e2) = self.origin, self.e
        return [o, tuple(a + b for a, b in zip(o, e1)), tuple(a + b for a, b in zip(o, e2)),
                tuple(a + b + c for a, b, c in zip(o, e1, e2))]


class UnionDomain:
    """A tile made of unit squares of Z^2 (used for the tetris-style figure)."""

    kind = "custom"

    def __init__(self, lattice: ZLattice, cells: Sequence[tuple]):
        self.lattice = lattice
        self.cells = tuple(tuple(Fraction(c) for c in cell) for cell in cells)

    def contains(self, y) -> bool:
        for cx, cy in self.cells:
            if cx <= y[0] < cx + 1 and cy <= y[1] < cy + 1:
                return True
        return False

    def margin(self, y) -> float:
        return min(min(abs(float(y[0]) - float(cx)), abs(float(y[1]) - float(cy)),
                       abs(float(cx) + 1 - float(y[0])), abs(float(cy) + 1 - float(y[1])))
                   for cx, cy in self.cells)

    def floor(self, x):
        for a in self.lattice.nearby(x, 3):
            y = tuple(p - q for p, q in zip(x, a))
            if self.contains(y):
                return a
        raise RuntimeError("no lattice translate lands in the tile")

    def vertices(self):
        out = []
        for cx, cy in self.cells:
            out.extend([(cx, cy), (cx + 1, cy), (cx, cy + 1), (cx + 1, cy + 1)])
        return out


# ---------------------------------------------------------------------------
# rotations and digits

@dataclass(frozen=True)
class Rotation:
    """Unitary map (z, t) -> (U z, t); ``rows`` is U as rows of scalars."""

    name: str
    rows: tuple

    def apply(self, p: IwasawaPoint) -> IwasawaPoint:
        rows = self.rows
        if p.backend == "float" and rows[0][0].backend == "exact":
            rows = tuple(tuple(e.to_float() for e in r) for r in rows)
        return IwasawaPoint(apply_rotation(rows, p.z), p.t, check=False)

    def is_identity(self) -> bool:
        return self.name == "id"


def _identity_rotation(n: int, kind) -> Rotation:
    one, zero = Scalar.one(kind), Scalar.zero(kind)
    return Rotation("id", tuple(tuple(one if i == j else zero for j in range(n)) for i in range(n)))


def _scalar_rotation(name: str, n: int, s: Scalar) -> Rotation:
    zero = Scalar.zero(s.kind)
    return Rotation(name, tuple(tuple(s if i == j else zero for j in range(n)) for i in range(n)))


@dataclass(frozen=True)
class Digit:
    translation: IwasawaPoint
    rotation: Rotation | None = None

    def apply(self, x: IwasawaPoint) -> IwasawaPoint:
        if self.rotation is not None and not self.rotation.is_identity():
            x = self.rotation.apply(x)
        a = self.translation if x.backend == self.translation.backend or x.backend == "exact" \
            else self.translation.to_float()
        return group_mul(a, x)

    def apply_inverse(self, x: IwasawaPoint) -> IwasawaPoint:
        a = self.translation if x.backend == "exact" else self.translation.to_float()
        y = group_mul(group_inv(a), x)
        if self.rotation is not None and not self.rotation.is_identity():
            y = self.rotation_inverse().apply(y)
        return y

    def rotation_inverse(self) -> Rotation:
        rows = self.rotation.rows
        n = len(rows)
        inv = tuple(tuple(rows[j][i].conj() for j in range(n)) for i in range(n))
        return Rotation(self.rotation.name + "^-1", inv)

    def is_identity(self) -> bool:
        return self.translation.is_origin() and (self.rotation is None or self.rotation.is_identity())

    def key(self) -> tuple:
        return (self.rotation.name if self.rotation else "id", self.translation.real_coords())

    def __repr__(self):
        r = "" if self.rotation is None or self.rotation.is_identity() else f"{self.rotation.name}:"
        return f"Digit({r}{self.translation!r})"


# ---------------------------------------------------------------------------
# presets

@dataclass
class Preset:
    """One row of the catalog: space, lattice, domain, inversion, verdicts."""

    name: str
    params: SpaceParams
    algebra: str
    inversion: InversionKind
    zlattice: ZLattice
    zdomain: object
    table_complete: bool
    table_proper: bool
    tlattice: ZLattice | None = None
    tdomain: object | None = None
    rotations: tuple = ()
    zdomain_base: object | None = None
    ring: Callable | None = None
    description: str = ""
    notes: str = ""
    rad4: object = None
    origin_in_K: bool = True

    # -- coordinates ------------------------------------------------------
    @property
    def kind(self):
        return self.params.kind

    @property
    def folded(self) -> bool:
        return bool(self.rotations)

    @property
    def heisenberg(self) -> bool:
        return self.params.kind != R

    @property
    def matrix_ok(self) -> bool:
        # the octonion preset only borrows E8 as a lattice in real 8-space
        return self.params.kind.dim <= 4

    def z_flat(self, p: IwasawaPoint) -> tuple:
        out = []
        for c in p.z:
            out.extend(c.coords)
        return tuple(out)

    def t_flat(self, p: IwasawaPoint) -> tuple:
        return tuple(p.t.coords[1:])

    def make_point(self, zflat: Sequence, tflat: Sequence = ()) -> IwasawaPoint:
        kind, n = self.params.kind, self.params.n
        d = kind.dim
        zs = tuple(Scalar(kind, zflat[i * d:(i + 1) * d]) for i in range(n))
        if d == 1:
            t = Scalar.zero(kind, zs[0].backend)
        else:
            zero = 0.0 if zs[0].backend == "float" else Fraction(0)
            t = Scalar(kind, (zero,) + tuple(tflat))
        return IwasawaPoint(zs, t, check=False)

    def origin(self, backend: str = "exact") -> IwasawaPoint:
        return IwasawaPoint.origin(self.params, backend)

    # -- domain -----------------------------------------------------------
    def contains(self, x: IwasawaPoint) -> bool:
        if not self.zdomain.contains(self.z_flat(x)):
            return False
        if self.tdomain is not None:
            return self.tdomain.contains(self.t_flat(x))
        return True

    def margin(self, x: IwasawaPoint) -> float:
        m = self.zdomain.margin(self.z_flat(x))
        if self.tdomain is not None:
            m = min(m, self.tdomain.margin(self.t_flat(x)))
        return m

    def _translation_floor(self, x: IwasawaPoint, zdom) -> IwasawaPoint | None:
        z = self.z_flat(x)
        az = zdom.floor(z)
        if az is None:
            return None
        if isinstance(z[0], float):
            az = tuple(float(c) for c in az)
        if self.tdomain is None:
            return self.make_point(az)
        a0 = self.make_point(az, tuple(0 for _ in range(self.params.kind.dim - 1)))
        # t coordinate of a0^-1 * x
        s = group_mul(group_inv(a0), x).t
        at = self.tdomain.floor(tuple(s.coords[1:]))
        if isinstance(z[0], float):
            at = tuple(float(c) for c in at)
        return self.make_point(az, at)

    def floor(self, x: IwasawaPoint) -> Digit:
        if not self.folded:
            return Digit(self._translation_floor(x, self.zdomain))
        # folded: find (r, a') with a'^-1 * r^-1(x) in K, digit a = r(a')
        for rot in self.rotations:
            inv = Digit(self.origin(), rot).rotation_inverse()
            y = inv.apply(x)
            base = self._translation_floor(y, self.zdomain_base)
            for a in self._neighbour_translations(base):
                red = group_mul(group_inv(a), y)
                if self.contains(red):
                    return Digit(rot.apply(a), rot)
        raise RuntimeError(f"floor failed for {x!r} in {self.name}")

    def _neighbour_translations(self, base: IwasawaPoint) -> Iterator[IwasawaPoint]:
        yield base
        zb = self.z_flat(base)
        fl = isinstance(zb[0], float)
        steps = [v for v in self.zlattice.basis]
        for sign in (1, -1):
            for v in steps:
                z = tuple(a + (float(b) if fl else b) * sign for a, b in zip(zb, v))
                yield self.make_point(z, self.t_flat(base))

    def sample(self, rng: random.Random, backend: str = "float", denominator: int = 10 ** 6) -> IwasawaPoint:
        """Uniform point of K.

        Low dimensions use rejection from the bounding box.  Dirichlet cells in
        dimension > 2 fill too little of their box, so there a uniform point of
        a basis parallelepiped is pushed into K by the floor map (piecewise an
        isometry, so the image stays uniform).
        """
        if isinstance(self.zdomain, DirichletDomain) and self.zlattice.m > 2:
            return self._sample_reduced(rng, backend, denominator)
        lo, hi = self._bbox()
        while True:
            if backend == "float":
                v = [rng.uniform(float(a), float(b)) for a, b in zip(lo, hi)]
            else:
                den = rng.randint(2, denominator)
                v = [Fraction(rng.randint(math.floor(a * den), math.ceil(b * den)), den) for a, b in zip(lo, hi)]
            m = self.zlattice.m
            p = self.make_point(v[:m], v[m:])
            if self.contains(p):
                return p

    def _sample_reduced(self, rng: random.Random, backend: str, denominator: int) -> IwasawaPoint:
        m = self.zlattice.m
        if backend == "float":
            u = [rng.random() for _ in range(m)]
            z = [sum(c * b[j] for c, b in zip(u, self.zlattice.basis_f)) for j in range(m)]
        else:
            den = rng.randint(2, denominator)
            u = [Fraction(rng.randrange(den), den) for _ in range(m)]
            z = list(self.zlattice.point(u))
        t = []
        if self.tlattice is not None:
            tl = self.tlattice
            if backend == "float":
                u = [rng.random() for _ in range(tl.m)]
                t = [sum(c * b[j] for c, b in zip(u, tl.basis_f)) for j in range(tl.m)]
            else:
                u = [Fraction(rng.randrange(den), den) for _ in range(tl.m)]
                t = list(tl.point(u))
        x = self.make_point(z, t)
        return self.floor(x).apply_inverse(x)

    def _bbox(self):
        if getattr(self, "_bbox_cache", None) is None:
            self._bbox_cache = self._compute_bbox()
        return self._bbox_cache

    def _compute_bbox(self):
        dirichlet_hi = isinstance(self.zdomain, DirichletDomain) and self.zlattice.m > 2
        verts = None if dirichlet_hi else self.zdomain.vertices()
        if verts is None:
            r = math.sqrt(float(self.zrad_sq()))
            lo = [Fraction(-r - 0.01).limit_denominator(1000)] * self.zlattice.m
            hi = [Fraction(r + 0.01).limit_denominator(1000)] * self.zlattice.m
        else:
            lo = [min(float(v[i]) for v in verts) for i in range(self.zlattice.m)]
            hi = [max(float(v[i]) for v in verts) for i in range(self.zlattice.m)]
            lo = [Fraction(a).limit_denominator(10 ** 6) - Fraction(1, 10 ** 6) for a in lo]
            hi = [Fraction(b).limit_denominator(10 ** 6) + Fraction(1, 10 ** 6) for b in hi]
        if self.tdomain is not None:
            tv = self.tdomain.vertices()
            for i in range(len(tv[0])):
                lo.append(Fraction(min(float(v[i]) for v in tv)).limit_denominator(10 ** 6) - Fraction(1, 10 ** 6))
                hi.append(Fraction(max(float(v[i]) for v in tv)).limit_denominator(10 ** 6) + Fraction(1, 10 ** 6))
        return lo, hi

    # -- radius -----------------------------------------------------------
    def zrad_sq(self):
        dom = self.zdomain
        if isinstance(dom, DirichletDomain):
            return dom.radius_sq()
        return max((_norm2(v) for v in dom.vertices()), key=float)

    def trad_sq(self):
        if self.tdomain is None:
            return Fraction(0)
        return max((_norm2(v) for v in self.tdomain.vertices()), key=float)

    def radius4(self):
        """Exact fourth power of sup gauge over K: (sup|z|^2)^2 + sup|t|^2."""
        if self.rad4 is not None:
            return self.rad4
        zs = self.zrad_sq()
        return zs * zs + self.trad_sq()

    def radius(self):
        return _fourth_root(self.radius4())

    # -- digits -----------------------------------------------------------
    def lattice_digits(self, bound: int, include_identity: bool = False) -> list:
        """Digits whose lattice coordinates are bounded by ``bound``."""
        zs = self.zlattice.enumerate(bound)
        if self.tlattice is not None:
            ts = self.tlattice.enumerate(bound)
        else:
            ts = [()]
        out = []
        rots = self.rotations or (None,)
        for rot in rots:
            for z in zs:
                for t in ts:
                    p = self.make_point(z, t)
                    d = Digit(p, rot)
                    if not include_identity and d.is_identity():
                        continue
                    out.append(d)
        return out

    def translation_digit(self, p: IwasawaPoint) -> Digit:
        return Digit(p, None)

    def digit_to_matrix(self, d: Digit) -> Matrix:
        return digit_to_matrix(self, d)

    def inversion_point(self, x):
        from .space import invert_point
        return invert_point(self.inversion, x, self.params)

    def __repr__(self):
        return f"Preset({self.name})"


def _fourth_root(x):
    """x^(1/4): exact when x is a rational square, else a float."""
    if isinstance(x, (int, Fraction)):
        s = exact_sqrt_or_float(x)
        if isinstance(s, Fraction):
            return sqrt_exact(s)
    return float(x) ** 0.25


# ---------------------------------------------------------------------------
# lattice constructors

F = Fraction
HALF = Fraction(1, 2)


def _std(m: int, scale=1) -> ZLattice:
    return ZLattice([[scale if i == j else 0 for j in range(m)] for i in range(m)], name=f"Z^{m}")


def _box(lat: ZLattice, lo, hi, closed=None) -> BoxDomain:
    return BoxDomain(lat, lo, hi, closed)


def _centered_box(lat: ZLattice) -> BoxDomain:
    m = lat.m
    return BoxDomain(lat, [-HALF] * m, [HALF] * m)


def rosen_lambda(q: int):
    """2 cos(pi/q) exactly for q in {3, 4, 5, 6}, as a float otherwise."""
    exact = {3: F(1), 4: sqrt_exact(2), 5: (1 + sqrt_exact(5)) / 2, 6: sqrt_exact(3)}
    if q in exact:
        return exact[q]
    if q < 3:
        raise ValueError("Rosen parameter q must be >= 3")
    return 2 * math.cos(math.pi / q)


def eisenstein_lattice() -> ZLattice:
    s3 = sqrt_exact(3)
    return ZLattice([[F(1), F(0)], [HALF, s3 / 2]], name="Z[rho]")


def bianchi_lattice(d: int) -> ZLattice:
    sd = sqrt_exact(d)
    if d % 4 == 3:
        return ZLattice([[F(1), F(0)], [HALF, sd / 2]], name=f"O_{d}")
    return ZLattice([[F(1), F(0)], [F(0), sd]], name=f"O_{d}")


@lru_cache(maxsize=1)
def cayley_code() -> tuple:
    """Codewords (as 0/1 tuples) of the [8,4,4] code whose half-lattice
    Z^8 + C/2 is closed under octonion multiplication in our basis."""
    from .algebra import Scalar as S, mul as smul

    pts = range(1, 8)
    triples = list(itertools.combinations(pts, 3))

    def is_fano(lines):
        seen = set()
        for ln in lines:
            for pr in itertools.combinations(ln, 2):
                if pr in seen:
                    return False
                seen.add(pr)
        return len(seen) == 21

    def fano_planes():
        # backtracking over 7 lines covering every pair once
        def rec(chosen, covered):
            if len(chosen) == 7:
                yield tuple(chosen)
                return
            pair = next(pr for pr in itertools.combinations(pts, 2) if pr not in covered)
            for ln in triples:
                if pair[0] in ln and pair[1] in ln and all(p not in covered for p in itertools.combinations(ln, 2)):
                    yield from rec(chosen + [ln], covered | set(itertools.combinations(ln, 2)))
        yield from rec([], frozenset())

    def code_of(lines):
        gens = [tuple(1 if (i == 0 or i in ln) else 0 for i in range(8)) for ln in lines]
        words = {tuple([0] * 8)}
        for g in gens:
            words |= {tuple((a + b) % 2 for a, b in zip(w, g)) for w in words}
        return words

    def member(x, code):
        twice = [2 * c for c in x]
        if any(F(v).denominator != 1 for v in twice):
            return False
        return tuple(int(v) % 2 for v in twice) in code

    for lines in fano_planes():
        code = code_of(lines)
        if len(code) != 16:
            continue
        gens = [tuple(F(int(i == j)) for j in range(8)) for i in range(8)]
        gens += [tuple(F(c, 2) for c in w) for w in code if sum(w) == 4]
        ok = True
        for u in gens:
            su = S(O, u)
            for v in gens:
                if not member(smul(su, S(O, v)).coords, code):
                    ok = False
                    break
            if not ok:
                break
        if ok:
            return tuple(sorted(code))
    raise RuntimeError("no multiplicatively closed E8 found")


def cayley_lattice() -> ZLattice:
    code = cayley_code()
    shifts = [tuple(F(c, 2) for c in w) for w in code]
    return ZLattice(_std(8).basis, name="Cayley integers", decoder=coset_decoder(shifts), cosets=shifts)


def hurwitz_quaternion_lattice() -> ZLattice:
    shifts = [(0, 0, 0, 0), (HALF, HALF, HALF, HALF)]
    return ZLattice(_std(4).basis, name="Hurwitz integers", decoder=coset_decoder(shifts), cosets=shifts)


def _int_ring(coords) -> bool:
    return all(isinstance(c, Fraction) and c.denominator == 1 for c in coords)


# ---------------------------------------------------------------------------
# catalog

PRESET_NAMES = (
    "regular", "backwards", "nearest_integer_plus", "nearest_integer_minus", "folded_nearest_integer",
    "nakada_alpha", "even", "rosen", "alpha_rosen", "hurwitz", "folded_hurwitz", "hurwitz_hexagonal",
    "j_hurwitz", "shallit", "skt", "bianchi", "real3d", "quaternionic", "hurwitz_quaternionic",
    "octonionic", "heisenberg", "folded_heisenberg", "heisenberg_hexagonal", "heisenberg_quaternionic",
)


def _real_preset(name, lattice, domain, inversion, C_, P_, n=1, **kw) -> Preset:
    return Preset(name=name, params=SpaceParams(R, n), algebra=kw.pop("algebra", "R"), inversion=inversion,
                  zlattice=lattice, zdomain=domain, table_complete=C_, table_proper=P_, **kw)


def _parse_param(v):
    if isinstance(v, (Fraction, Surd, float)):
        return v
    if isinstance(v, int):
        return F(v)
    return F(str(v))


def parse_preset_id(ident: str) -> tuple[str, tuple]:
    """'rosen(5)' -> ('rosen', ('5',)); 'hurwitz' -> ('hurwitz', ())."""
    ident = ident.strip()
    if "(" in ident:
        if not ident.endswith(")"):
            raise ValueError(f"malformed preset id {ident!r}")
        head, args = ident[:-1].split("(", 1)
        return head.strip(), tuple(a.strip() for a in args.split(",") if a.strip())
    return ident, ()


@lru_cache(maxsize=128)
def get_preset(ident: str, *args) -> Preset:
    """Build a preset by stable name, e.g. ``get_preset('rosen', 5)`` or ``get_preset('rosen(5)')``."""
    if not args and "(" in ident:
        ident, args = parse_preset_id(ident)
    name = ident
    Z1 = _std(1)
    if name == "regular":
        return _real_preset(name, Z1, _box(Z1, [0], [1]), PLUS, False, False,
                            description="regular CF, x -> 1/x on [0,1)")
    if name == "backwards":
        return _real_preset(name, Z1, _box(Z1, [0], [1]), MINUS, True, False,
                            description="backwards CF, x -> -1/x on [0,1)")
    if name == "nearest_integer_plus":
        return _real_preset(name, Z1, _centered_box(Z1), PLUS, False, True, ring=_int_ring,
                            description="nearest-integer CF with x -> 1/x")
    if name == "nearest_integer_minus":
        return _real_preset(name, Z1, _centered_box(Z1), MINUS, True, True, ring=_int_ring,
                            description="nearest-integer CF with x -> -1/x")
    if name == "folded_nearest_integer":
        neg = _scalar_rotation("neg", 1, Scalar.real(R, -1))
        return _real_preset(name, Z1, _box(Z1, [0], [HALF], [True]), PLUS, True, True,
                            rotations=(_identity_rotation(1, R), neg), zdomain_base=_centered_box(Z1),
                            ring=_int_ring, description="folded nearest-integer CF, K = [0, 1/2]")
    if name == "nakada_alpha":
        alpha = _parse_param(args[0]) if args else HALF
        if not (0 < alpha < 1):
            raise ValueError("nakada alpha must lie in (0, 1)")
        return _real_preset(f"nakada_alpha({alpha})", Z1, _box(Z1, [alpha - 1], [alpha]), PLUS, False, True,
                            ring=_int_ring, origin_in_K=True, description="Nakada alpha-CF, K = [alpha-1, alpha)")
    if name == "even":
        Z2 = _std(1, 2)
        return _real_preset(name, Z2, _box(Z2, [-HALF], [HALF]), MINUS, True, False, ring=_int_ring,
                            description="even CF, lattice 2Z, K = [-1, 1)")
    if name == "rosen":
        q = int(args[0]) if args else 5
        lam = rosen_lambda(q)
        lat = ZLattice([[lam]], name=f"lambda_{q} Z")
        return _real_preset(f"rosen({q})", lat, _centered_box(lat), MINUS, True, True,
                            ring=_int_ring if q == 3 else None,
                            description=f"Rosen CF, lambda = 2cos(pi/{q})")
    if name == "alpha_rosen":
        q = int(args[0]) if args else 5
        alpha = _parse_param(args[1]) if len(args) > 1 else F(3, 5)
        lam = rosen_lambda(q)
        if not (HALF <= alpha and alpha * lam < 1):
            raise ValueError("alpha-Rosen needs alpha in [1/2, 1/lambda)")
        lat = ZLattice([[lam]], name=f"lambda_{q} Z")
        return _real_preset(f"alpha_rosen({q},{alpha})", lat, _box(lat, [alpha - 1], [alpha]), MINUS, True, True,
                            description="alpha-Rosen CF, K = [lambda(alpha-1), lambda alpha)")
    if name == "hurwitz":
        Z2 = _std(2)
        return _real_preset(name, Z2, _centered_box(Z2), CONJ, False, True, n=2, algebra="C", ring=_int_ring,
                            description="Hurwitz complex CF, z -> 1/z on [-1/2,1/2)^2")
    if name == "hurwitz_alpha":
        alpha = _parse_param(args[0]) if args else F(3, 10)
        Z2 = _std(2)
        return _real_preset(f"hurwitz_alpha({alpha})", Z2, _box(Z2, [-HALF + alpha, -HALF], [HALF + alpha, HALF]),
                            CONJ, False, abs(alpha) < F(1, 5), n=2, algebra="C", ring=_int_ring,
                            description="shifted Hurwitz CF, K = [-1/2+alpha, 1/2+alpha) x [-1/2, 1/2)")
    if name == "hurwitz_tetris":
        Z2 = _std(2)
        dom = _tetris_domain(Z2)
        return _real_preset("hurwitz_tetris", Z2, dom, CONJ, False, False, n=2, algebra="C", ring=_int_ring,
                            description="Hurwitz CF with a non-convex tile made of four quarter squares")
    if name == "folded_hurwitz":
        Z2 = _std(2)
        alpha = _parse_param(args[0]) if args else F(0)
        neg = _scalar_rotation("neg", 2, Scalar.real(R, -1))
        dom = _box(Z2, [-HALF + alpha, -HALF], [HALF + alpha, F(0)], [False, True])
        nm = name if not args else f"folded_hurwitz({alpha})"
        return _real_preset(nm, Z2, dom, CONJ, True, True, n=2, algebra="C",
                            rotations=(_identity_rotation(2, R), neg),
                            zdomain_base=_box(Z2, [-HALF + alpha, -HALF], [HALF + alpha, HALF]),
                            ring=_int_ring, description="folded Hurwitz CF, K = [-1/2,1/2) x [-1/2,0]")
    if name == "hurwitz_hexagonal":
        lat = eisenstein_lattice()
        return _real_preset(name, lat, DirichletDomain(lat), CONJ, False, True, n=2, algebra="C",
                            description="Eisenstein CF on the hexagonal Dirichlet region")
    if name == "j_hurwitz":
        lat = ZLattice([[F(1), F(1)], [F(1), F(-1)]], name="(1+i)Z[i]")
        return _real_preset(name, lat, DirichletDomain(lat), CONJ, True, False, n=2, algebra="C", ring=_int_ring,
                            description="J. Hurwitz (Tanaka) CF, lattice {a+b even}")
    if name == "shallit":
        Z2 = _std(2)
        dom = ParallelogramDomain(Z2, (HALF, -HALF), (HALF, HALF), (F(-1), F(1)))
        return _real_preset(name, Z2, dom, CONJ, False, False, n=2, algebra="C", ring=_int_ring,
                            description="Shallit CF, rectangle with corners .5-.5i, 1, i, -.5+.5i")
    if name == "skt":
        s3 = sqrt_exact(3)
        lat = ZLattice([[HALF, s3 / 2], [HALF, -s3 / 2]], name="Z[rho]")
        return _real_preset(name, lat, _box(lat, [0, 0], [1, 1]), CONJ, False, False, n=2, algebra="C",
                            description="SKT CF, K = [0,1) rho x [0,1) conj(rho)")
    if name == "bianchi":
        d = int(args[0]) if args else 2
        if d not in (1, 2, 3, 7, 11):
            raise ValueError("Bianchi d must be one of 1, 2, 3, 7, 11")
        lat = bianchi_lattice(d)
        return _real_preset(f"bianchi({d})", lat, DirichletDomain(lat), CONJ, False, True, n=2, algebra="C",
                            ring=_int_ring if d == 1 else None,
                            description=f"CF over the ring of integers of Q(sqrt -{d})")
    if name == "real3d":
        n = int(args[0]) if args else 3
        Zn = _std(n)
        return _real_preset(f"real3d({n})", Zn, _centered_box(Zn), PLUS, False, n <= 3, n=n, ring=_int_ring,
                            description=f"nearest-integer CF on R^{n} with the positive inversion")
    if name == "quaternionic":
        Z4 = _std(4)
        return _real_preset(name, Z4, _centered_box(Z4), CONJ, False, False, n=4, algebra="H", ring=_int_ring,
                            description="Lipschitz quaternion CF on [-1/2,1/2)^4")
    if name == "hurwitz_quaternionic":
        lat = hurwitz_quaternion_lattice()
        return _real_preset(name, lat, DirichletDomain(lat, radius_sq=HALF), CONJ, False, True, n=4, algebra="H",
                            description="Hurwitz quaternion CF on the 24-cell")
    if name == "octonionic":
        lat = cayley_lattice()
        return _real_preset(name, lat, DirichletDomain(lat, radius_sq=HALF), CONJ, False, True, n=8, algebra="O",
                            description="Cayley octonion CF on the E8 Voronoi cell")
    if name in ("heisenberg", "folded_heisenberg"):
        Z2 = _std(2)
        Z1t = _std(1)
        tdom = _centered_box(Z1t)
        gauss = lambda c: _int_ring(c)
        if name == "heisenberg":
            return Preset(name=name, params=SpaceParams(C, 1), algebra="C", inversion=MINUS, zlattice=Z2,
                          zdomain=_centered_box(Z2), tlattice=Z1t, tdomain=tdom, table_complete=False,
                          table_proper=True, ring=gauss, description="Heisenberg CF over Z[i] x iZ")
        i = Scalar(C, (0, 1))
        rots = [_identity_rotation(1, C)]
        u = Scalar.one(C)
        for k in range(1, 4):
            u = mul(u, i)
            rots.append(_scalar_rotation(f"i^{k}", 1, u))
        return Preset(name=name, params=SpaceParams(C, 1), algebra="C", inversion=MINUS, zlattice=Z2,
                      zdomain=_box(Z2, [-HALF, -HALF], [F(0), F(0)], [True, True]), tlattice=Z1t, tdomain=tdom,
                      table_complete=True, table_proper=True, rotations=tuple(rots),
                      zdomain_base=_centered_box(Z2), ring=gauss,
                      description="folded Heisenberg CF, rotations z -> i^k z")
    if name == "heisenberg_hexagonal":
        lat = eisenstein_lattice()
        s3 = sqrt_exact(3)
        tl = ZLattice([[s3]], name="sqrt3 Z")
        return Preset(name=name, params=SpaceParams(C, 1), algebra="C", inversion=MINUS, zlattice=lat,
                      zdomain=DirichletDomain(lat), tlattice=tl, tdomain=_centered_box(tl), table_complete=False,
                      table_proper=True, description="Heisenberg CF over Z[rho] x sqrt3 iZ")
    if name == "heisenberg_quaternionic":
        lat = hurwitz_quaternion_lattice()
        Z3 = _std(3)
        return Preset(name=name, params=SpaceParams(H, 1), algebra="H", inversion=MINUS, zlattice=lat,
                      zdomain=DirichletDomain(lat, radius_sq=HALF), tlattice=Z3, tdomain=_centered_box(Z3),
                      table_complete=False, table_proper=False,
                      description="quaternionic Heisenberg CF, Hurwitz integers x Z^3")
    raise KeyError(f"unknown preset {ident!r}")


def _tetris_domain(Z2: ZLattice) -> UnionDomain:
    # four quarter squares of side 1/2 arranged as an S-tetromino; area 1
    q = HALF
    cells = [(-q - q, -q), (-q, -q), (-q, F(0)), (F(0), F(0))]
    return _QuarterUnion(Z2, cells, q)


class _QuarterUnion(UnionDomain):
    def __init__(self, lattice, cells, side):
        super().__init__(lattice, cells)
        self.side = side

    def contains(self, y) -> bool:
        s = self.side
        for cx, cy in self.cells:
            if cx <= y[0] < cx + s and cy <= y[1] < cy + s:
                return True
        return False

    def margin(self, y) -> float:
        s = float(self.side)
        return min(min(abs(float(y[0]) - float(cx)), abs(float(y[1]) - float(cy)),
                       abs(float(cx) + s - float(y[0])), abs(float(cy) + s - float(y[1])))
                   for cx, cy in self.cells)

    def vertices(self):
        s = self.side
        out = []
        for cx, cy in self.cells:
            out.extend([(cx, cy), (cx + s, cy), (cx, cy + s), (cx + s, cy + s)])
        return out


def all_presets() -> list[Preset]:
    """One instance of every catalog entry (parameterised rows use defaults)."""
    ids = [
        "regular", "backwards", "nearest_integer_plus", "nearest_integer_minus", "folded_nearest_integer",
        "nakada_alpha(1/2)", "even", "rosen(3)", "rosen(4)", "rosen(5)", "rosen(6)", "alpha_rosen(5,3/5)",
        "hurwitz", "folded_hurwitz", "hurwitz_hexagonal", "j_hurwitz", "shallit", "skt",
        "bianchi(1)", "bianchi(2)", "bianchi(3)", "bianchi(7)", "bianchi(11)",
        "real3d(1)", "real3d(2)", "real3d(3)", "real3d(4)", "quaternionic", "hurwitz_quaternionic", "octonionic",
        "heisenberg", "folded_heisenberg", "heisenberg_hexagonal", "heisenberg_quaternionic",
    ]
    return [get_preset(i) for i in ids]


# ---------------------------------------------------------------------------
# module-level operations

def floor_map(preset: Preset, x: IwasawaPoint) -> Digit:
    return preset.floor(x)


def contains(preset: Preset, x: IwasawaPoint) -> bool:
    return preset.contains(x)


def radius(preset: Preset):
    return preset.radius()


def properness_check(preset: Preset) -> tuple[bool, float]:
    """(rad(K) < 1, margin 1 - rad(K))."""
    r4 = preset.radius4()
    return bool(r4 < 1), 1.0 - float(r4) ** 0.25


def digit_to_matrix(preset: Preset, d: Digit, backend: str = "exact") -> Matrix:
    if not preset.matrix_ok:
        raise ValueError("no matrix model over the octonions; use generator words")
    a = d.translation if backend == "exact" else d.translation.to_float()
    M = translation_matrix(a)
    if d.rotation is not None and not d.rotation.is_identity():
        rows = d.rotation.rows
        if backend == "float":
            rows = tuple(tuple(e.to_float() for e in r) for r in rows)
        M = mat_mul(M, rotation_matrix(rows))
    return M
