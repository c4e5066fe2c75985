"""Geodesics in the real hyperbolic plane and the marking of a geodesic.

Coordinates: a point of the upper half-plane is x + i y with y > 0.  The
half-space coordinate w of the rest of the package is w = y^2, so the
horoheight at infinity is y^2 and the extended gauge is |x + i y|.  The unit
sphere is the Euclidean unit semicircle.

Isometries are real 2x2 matrices g acting by z -> g.z when det g > 0 and by
z -> g.conj(z) when det g < 0; this covers x -> -1/x, x -> 1/x and x -> -x.
Since the unit sphere is itself a geodesic here, a geodesic crosses any wall
at most once, so grid sign changes capture every crossing.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .cf import CFAlgorithm, expand
from .lattice import Preset
from .modular import IOTA, IOTA_INV, Rep2, representation

__all__ = [
    "Geodesic", "geodesic_from_endpoints", "hyperbolic_distance", "RealMobius", "sphere_intersections",
    "crossing_analytic", "Horoball", "Wall", "Constants", "Marking", "compute_marking", "verify_marking_properties",
    "calibrate_constants", "random_markable_geodesic", "Unmarkable",
]

INF = math.inf
GRID_STEP = 1e-3
BISECT_TOL = 1e-12


class Unmarkable(ValueError):
    pass


# ---------------------------------------------------------------------------
# geodesics

@dataclass(frozen=True)
class Geodesic:
    """Unit-speed geodesic from ``minus`` to ``plus`` (points of R^n or INF).

    ``offset`` shifts the standard parametrisation, whose time 0 is the top
    of the semicircle (or height 1 on a vertical line).
    """

    minus: tuple | float
    plus: tuple | float
    offset: float = 0.0

    def __post_init__(self):
        m, p = _vec(self.minus), _vec(self.plus)
        if m is None and p is None:
            raise ValueError("both endpoints at infinity")
        if m is not None and p is not None and np.allclose(m, p, rtol=0, atol=0):
            raise ValueError("endpoints coincide")

    @property
    def n(self) -> int:
        v = _vec(self.plus) if _vec(self.plus) is not None else _vec(self.minus)
        return len(v)

    def _frame(self):
        m, p = _vec(self.minus), _vec(self.plus)
        if m is None:
            return "down", p, None, None
        if p is None:
            return "up", m, None, None
        d = p - m
        r = float(np.linalg.norm(d)) / 2
        return "arc", (m + p) / 2, r, d / (2 * r)

    def points(self, ts):
        """(x, y) arrays for an array of times: x has shape (len(ts), n)."""
        ts = np.asarray(ts, dtype=float) + self.offset
        kind, c, r, u = self._frame()
        if kind == "up":
            return np.repeat(c[None, :], len(ts), 0), np.exp(ts)
        if kind == "down":
            return np.repeat(c[None, :], len(ts), 0), np.exp(-ts)
        m, p = _vec(self.minus), _vec(self.plus)
        y = r / np.cosh(ts)
        # stable near each endpoint: 1 - tanh t = 2 / (e^{2t} + 1)
        with np.errstate(over="ignore"):
            near_plus = 2 * r / (np.exp(2 * ts) + 1)
            near_minus = 2 * r / (np.exp(-2 * ts) + 1)
        x = np.where(ts[:, None] >= 0, p[None, :] - near_plus[:, None] * u[None, :],
                     m[None, :] + near_minus[:, None] * u[None, :])
        return x, y

    def point_at(self, t: float):
        x, y = self.points([t])
        return x[0], float(y[0])

    def half_space_point(self, t: float):
        """g(t) as a HalfSpacePoint with w = y^2."""
        from .space import HalfSpacePoint
        from .algebra import Scalar
        from .space import R
        x, y = self.point_at(t)
        return HalfSpacePoint([Scalar(R, (float(c),)) for c in x], Scalar(R, (y * y,)))

    def complex_at(self, ts):
        x, y = self.points(ts)
        return x[:, 0] + 1j * y

    def time_of(self, x, y) -> float:
        """Time at which the geodesic passes through (x, y)."""
        kind, c, r, u = self._frame()
        if kind == "up":
            s = math.log(y)
        elif kind == "down":
            s = -math.log(y)
        else:
            # y = r sech s and the sign of s from the x offset along u
            val = min(1.0, y / r)
            s = math.acosh(1 / val) if val > 0 else INF
            if float(np.dot(np.atleast_1d(x) - c, u)) < 0:
                s = -s
        return s - self.offset

    def shifted(self, dt: float) -> "Geodesic":
        return Geodesic(self.minus, self.plus, self.offset + dt)


def _vec(p):
    if p is None or (isinstance(p, float) and math.isinf(p)):
        return None
    return np.atleast_1d(np.asarray(p, dtype=float))


def geodesic_from_endpoints(p, q) -> Geodesic:
    """Geodesic from p to q (points of R^n as numbers/tuples, or math.inf)."""
    return Geodesic(p if _vec(p) is None else tuple(_vec(p)), q if _vec(q) is None else tuple(_vec(q)))


def hyperbolic_distance(a, b) -> float:
    """Distance between (x, y) points of the upper half-space."""
    xa, ya = np.atleast_1d(a[0]), a[1]
    xb, yb = np.atleast_1d(b[0]), b[1]
    d2 = float(np.sum((xa - xb) ** 2)) + (ya - yb) ** 2
    return math.acosh(1 + d2 / (2 * ya * yb))


# ---------------------------------------------------------------------------
# isometries of the plane

@dataclass(frozen=True)
class RealMobius:
    a: float
    b: float
    c: float
    d: float

    @classmethod
    def from_rep2(cls, M) -> "RealMobius":
        return cls(*(float(e[0]) for e in M))

    @property
    def det(self) -> float:
        return self.a * self.d - self.b * self.c

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        if self.det < 0:
            z = np.conj(z)
        with np.errstate(divide="ignore", invalid="ignore"):
            return (self.a * z + self.b) / (self.c * z + self.d)

    def boundary(self, x):
        """Image of a boundary point (float or INF)."""
        if x is None or (isinstance(x, float) and math.isinf(x)):
            return INF if self.c == 0 else self.a / self.c
        den = self.c * x + self.d
        return INF if den == 0 else (self.a * x + self.b) / den

    def inverse(self) -> "RealMobius":
        det = self.det
        return RealMobius(self.d / det, -self.b / det, -self.c / det, self.a / det)

    def geodesic_image(self, g: Geodesic, t0: float = 0.0) -> Geodesic:
        """The geodesic s -> self(g(t0 + s))."""
        m = self.boundary(_scalar(g.minus))
        p = self.boundary(_scalar(g.plus))
        h = geodesic_from_endpoints(m, p)
        z = complex(self(g.complex_at([t0])[0]))
        return h.shifted(h.time_of(z.real, z.imag))


def _scalar(p):
    v = _vec(p)
    return INF if v is None else float(v[0])


def _exact_to_float_mobius(M) -> RealMobius:
    return RealMobius.from_rep2(M)


# ---------------------------------------------------------------------------
# sphere crossings

def _gauge_along(g: Geodesic, ts, M: RealMobius | None):
    if M is None:
        x, y = g.points(ts)
        return np.sqrt(np.sum(x * x, axis=1) + y * y), y * y
    z = M.inverse()(g.complex_at(ts))
    return np.abs(z), z.imag ** 2


def _window(g: Geodesic, M: RealMobius | None, lo: float | None, hi: float | None):
    """Times outside which no crossing can occur (gauge limits are reached)."""
    lo = -40.0 if lo is None else lo
    hi = 40.0 if hi is None else hi
    return lo, hi


def sphere_intersections(g: Geodesic, M: RealMobius | None = None, t_min: float | None = None,
                         t_max: float | None = None, step: float = GRID_STEP, tol: float = BISECT_TOL) -> list:
    """Times t with gauge(M^-1 g(t)) = 1, by grid sign changes plus bisection.

    The default window [-40, 40] covers every crossing whose height exceeds
    e^-40 times the scale of the geodesic.
    """
    if g.n != 1 and M is not None:
        raise ValueError("maps are supported on the plane only")
    lo, hi = _window(g, M, t_min, t_max)
    ts = np.arange(lo, hi + step, step)
    f = _gauge_along(g, ts, M)[0] - 1.0
    if np.all(np.abs(f) < tol):
        raise ValueError("geodesic lies in the sphere")
    roots = []
    sgn = np.sign(f)
    idx = np.nonzero(sgn[:-1] * sgn[1:] < 0)[0]
    for i in idx:
        a, b = ts[i], ts[i + 1]
        fa = f[i]
        while b - a > tol:
            mid = 0.5 * (a + b)
            fm = _gauge_along(g, [mid], M)[0][0] - 1.0
            if (fm < 0) == (fa < 0):
                a, fa = mid, fm
            else:
                b = mid
        roots.append(0.5 * (a + b))
    roots += [float(t) for t, v in zip(ts, f) if v == 0.0]
    return sorted(roots)


def crossing_analytic(g: Geodesic, M: RealMobius | None = None):
    """Closed-form crossing of g with M(S) on the plane, or None."""
    S = geodesic_from_endpoints(-1.0, 1.0)
    if M is not None:
        S = geodesic_from_endpoints(M.boundary(-1.0), M.boundary(1.0))
    m1, p1 = _scalar(g.minus), _scalar(g.plus)
    m2, p2 = _scalar(S.minus), _scalar(S.plus)

    def inside(x, a, b):
        return min(a, b) < x < max(a, b)

    def arc(a, b):
        return (a + b) / 2, abs(b - a) / 2

    finite1 = not (math.isinf(m1) or math.isinf(p1))
    finite2 = not (math.isinf(m2) or math.isinf(p2))
    if finite1 and finite2:
        # endpoints must interleave
        if inside(m2, m1, p1) == inside(p2, m1, p1):
            return None
        (c1, r1), (c2, r2) = arc(m1, p1), arc(m2, p2)
        x = (r1 * r1 - r2 * r2 + c2 * c2 - c1 * c1) / (2 * (c2 - c1))
    elif finite1:
        x = m2 if math.isinf(p2) else p2
        if not inside(x, m1, p1):
            return None
        c1, r1 = arc(m1, p1)
    elif finite2:
        x = m1 if math.isinf(p1) else p1
        if not inside(x, m2, p2):
            return None
        c1, r1 = arc(m2, p2)
    else:
        return None
    y = math.sqrt(max(r1 * r1 - (x - c1) ** 2, 0.0))
    return g.time_of(np.array([x]), y)


# ---------------------------------------------------------------------------
# constants, walls, markings

@dataclass
class Constants:
    epsilon: float
    h2: float
    h1: float
    h0: float
    C0: float
    h3: float = math.nan
    safety_h2: float = 0.9
    safety_h0: float = 1.1
    ensemble: int = 0


@dataclass(frozen=True)
class Horoball:
    """{ht_{M(inf)} >= C}: the image under M of the horoball at infinity of height C."""

    height: float
    M: RealMobius | None = None

    def __post_init__(self):
        if not self.height > 0:
            raise ValueError("horoball height must be positive")

    @property
    def base(self) -> float:
        return INF if self.M is None else self.M.boundary(INF)

    def horoheight(self, z):
        z = np.asarray(z, dtype=complex)
        if self.M is not None:
            z = self.M.inverse()(z)
        return z.imag ** 2

    def contains(self, z) -> np.ndarray:
        return self.horoheight(z) >= self.height

    def top(self) -> float:
        """Largest horoheight at infinity of a point of the ball."""
        if self.M is None or self.M.c == 0:
            return INF
        # M = [[a, b], [c, d]] up to scale: top is 1 / (C c^4 / det^2)
        return self.M.det ** 2 / (self.height * self.M.c ** 4)


@dataclass(frozen=True)
class Wall:
    h2: float

    def __post_init__(self):
        if not (0 < self.h2 < 1):
            raise ValueError("wall cutoff must lie in (0, 1)")

    def contains(self, z: complex, tol: float = 1e-8) -> bool:
        return abs(abs(z) - 1) <= tol and z.imag ** 2 >= self.h2 * (1 - 1e-9)


@dataclass
class Marking:
    preset: str
    digits: list
    indices: list
    times: list
    maps: list
    constants: Constants
    frames: list = field(default_factory=list)
    crossing_heights: list = field(default_factory=list)
    spotters: list = field(default_factory=list)
    horizon_reached: bool = False
    plus_exact: object = None

    @property
    def gaps(self) -> list:
        return [b - a for a, b in zip(self.times, self.times[1:])]

    def records(self) -> list:
        return [{"j": j, "index": i, "time": t, "height": h}
                for j, (i, t, h) in enumerate(zip(self.indices, self.times, [None] + self.crossing_heights))]


def _check_marking_preset(preset: Preset):
    p = preset.params
    if p.kind.tag != "R" or p.n != 1:
        raise ValueError("marking is implemented for presets on the real line")
    if not preset.table_complete:
        raise ValueError(f"{preset.name} is not complete; marking needs a complete algorithm")


class _Convergents:
    """Exact 2x2 convergent matrices M_i = iota^-1 a_1 ... iota^-1 a_i."""

    def __init__(self, preset: Preset, digits: Sequence):
        self.rep = representation(preset, "2x2")
        self.digits = list(digits)
        iinv = self.rep.letter(IOTA_INV)
        self.steps = [self.rep.mul(iinv, self.rep.digit(d)) for d in self.digits]
        self._cum = [self.rep.identity()]

    def relative(self, start: int, stop: int):
        M = self.rep.identity()
        for k in range(start, stop):
            M = self.rep.mul(M, self.steps[k])
        return M

    def absolute(self, i: int):
        while len(self._cum) <= i:
            self._cum.append(self.rep.mul(self._cum[-1], self.steps[len(self._cum) - 1]))
        return self._cum[i]


def _expand_plus(preset: Preset, plus_exact, max_digits: int):
    alg = CFAlgorithm(preset, "exact")
    x = preset.make_point([plus_exact])
    if not preset.contains(x):
        raise ValueError("forward endpoint must lie in K")
    exp = expand(alg, x, max_digits)
    return exp


def compute_marking(preset: Preset, g: Geodesic, plus_exact, constants: Constants | None,
                    max_blocks: int = 12, max_digits: int = 80, check_start: bool = True) -> Marking:
    """Marking of a geodesic with g(0) in the wall and exact forward endpoint in K.

    Each block finds the least i with gauge(M_i^-1 g(0)) >= 1 + eps, then the
    last crossing of g with M_i W, and renormalises g by M_i^-1.
    """
    _check_marking_preset(preset)
    if constants is None:
        raise ValueError("calibration constants not set; run calibrate_constants first")
    exp = _expand_plus(preset, plus_exact, max_digits)
    if exp.terminated:
        raise Unmarkable("forward endpoint has a terminating expansion (a cusp)")
    conv = _Convergents(preset, exp.digits)
    eps, h2 = constants.epsilon, constants.h2
    z0 = complex(g.complex_at([0.0])[0])
    if check_start and not Wall(h2).contains(z0, tol=1e-8):
        raise ValueError("g(0) is not on the wall")
    mk = Marking(preset.name, list(exp.digits), [0], [0.0], [conv.absolute(0)], constants, frames=[g],
                 plus_exact=plus_exact)
    cur, base, t_total = g, 0, 0.0
    for _ in range(max_blocks):
        found = None
        for i in range(1, len(exp.digits) - base + 1):
            N = RealMobius.from_rep2(conv.relative(base, base + i)).inverse()
            if abs(complex(N(cur.complex_at([0.0])[0]))) >= 1 + eps:
                found = i
                break
        if found is None:
            mk.horizon_reached = True
            break
        M = RealMobius.from_rep2(conv.relative(base, base + found))
        # work on the image geodesic, where the wall is the unit circle; its
        # forward endpoint is the exact iterate x_i, so nothing drifts
        xi = float(exp.iterates[base + found].real_coords()[0])
        img = _repin_plus(M.inverse().geodesic_image(cur, 0.0), xi)
        roots = [t for t in sphere_intersections(img, t_min=0.0) if t > 0]
        walls = [t for t in roots if float(img.point_at(t)[1]) ** 2 >= h2]
        if not walls:
            raise RuntimeError("no wall crossing found where one must exist")
        t1 = max(walls)
        ht = float(img.point_at(t1)[1]) ** 2
        nxt = img.shifted(t1)
        base += found
        t_total += t1
        mk.indices.append(base)
        mk.times.append(t_total)
        mk.maps.append(conv.absolute(base))
        mk.frames.append(nxt)
        mk.crossing_heights.append(ht)
        cur = nxt
    return mk


def _repin_plus(g: Geodesic, x: float) -> Geodesic:
    z = complex(g.complex_at([0.0])[0])
    h = geodesic_from_endpoints(_scalar(g.minus), x)
    return h.shifted(h.time_of(np.array([z.real]), z.imag))


# ---------------------------------------------------------------------------
# verification

def _sup_height_before(h: Geodesic, s: float) -> tuple[float, float]:
    """Largest y^2 along h on (-inf, s] and a time where it is attained."""
    m, p = _scalar(h.minus), _scalar(h.plus)
    if math.isinf(m):
        return INF, -INF
    if math.isinf(p):
        return float(h.point_at(s)[1]) ** 2, s
    top = -h.offset
    if top <= s:
        return float(h.point_at(top)[1]) ** 2, top
    return float(h.point_at(s)[1]) ** 2, s


def _short_words(rep: Rep2, preset: Preset, bound: int = 2):
    from .modular import enumerate_words, _word_matrix
    out = [rep.identity()]
    for w in enumerate_words(preset, 2, bound):
        out.append(_word_matrix(rep, w))
    return out


def verify_marking_properties(mk: Marking, preset: Preset, step: float = 0.01, equivariance: bool = True) -> dict:
    """Check full coverage, wall membership of the marks, cusp detection,
    intersection detection and shifted Gauss equivariance on a marking."""
    c = mk.constants
    conv = _Convergents(preset, mk.digits)
    rep = conv.rep
    report = {"min_gap": min(mk.gaps) if mk.gaps else math.inf, "blocks": len(mk.indices) - 1,
              "wall_violations": 0, "cusp_violations": 0, "intersection_violations": 0,
              "spotter_order_violations": 0, "equivariance_residual": 0.0, "detected_crossings": 0,
              "cusp_checks": 0, "h1_violations": 0}
    # each mark lies on the matching wall
    for j in range(1, len(mk.indices)):
        z = complex(mk.frames[j].complex_at([0.0])[0])
        if abs(abs(z) - 1) > 1e-8 or z.imag ** 2 < 0.99 * c.h2:
            report["wall_violations"] += 1
    words = _short_words(rep, preset)
    plus_iterates = _plus_iterates(preset, mk)
    detected = []
    for j in range(1, len(mk.indices)):
        frame = mk.frames[j - 1]
        base, nxt = mk.indices[j - 1], mk.indices[j]
        length = mk.times[j] - mk.times[j - 1]
        ts = np.arange(0.0, length + step, step)
        target = conv.relative(base, nxt)
        # horoheight stays above h1 along the block
        N = RealMobius.from_rep2(target).inverse()
        hts = (N(frame.complex_at(ts)).imag) ** 2
        if np.min(hts) <= c.h1 * (1 - 1e-9):
            report["h1_violations"] += 1
        # cusp detection: candidate maps with large horoheight must be the block map
        for k in range(1, min(nxt - base + 3, len(mk.digits) - base) + 1):
            Mk = conv.relative(base, base + k)
            for w in words:
                cand = rep.mul(Mk, w)
                Mc = RealMobius.from_rep2(cand)
                Mi = Mc.inverse()
                endpoint = Mi.boundary(plus_iterates[base])
                if math.isinf(endpoint) or not preset.contains(preset.make_point([float(endpoint)])):
                    continue
                h = (Mi(frame.complex_at(ts)).imag) ** 2
                if np.any(h > c.h0):
                    report["cusp_checks"] += 1
                    if rep.canonical(cand) != rep.canonical(target):
                        report["cusp_violations"] += 1
        # intersection detection: crossings of convergent walls that carry a spotter
        for k in range(1, min(nxt - base + 3, len(mk.digits) - base) + 1):
            Mk = RealMobius.from_rep2(conv.relative(base, base + k))
            # intersect in the wall's own frame, where the sphere is the unit circle
            img = Mk.inverse().geodesic_image(frame, 0.0)
            s = crossing_analytic(img)
            if s is None or s <= 1e-9 or s > length + 1e-6:
                continue
            zc = complex(img.complex_at([s])[0])
            if zc.imag ** 2 < c.h2:
                continue
            sup, spot = _sup_height_before(img, s)
            if sup <= c.h0:
                continue
            detected.append((mk.times[j - 1] + s, base + k, mk.times[j - 1] + spot))
            if not (abs(s - length) < 1e-6 and base + k == nxt):
                report["intersection_violations"] += 1
                report.setdefault("intersection_detail", []).append((j, base, nxt, k, s, length, zc, sup))
    report["detected_crossings"] = len(detected)
    # spotter times interleave crossing times
    detected.sort()
    for (ta, _, sa), (tb, _, sb) in zip(detected, detected[1:]):
        if not (sa < ta < sb < tb):
            report["spotter_order_violations"] += 1
    if equivariance and len(mk.indices) > 2:
        report["equivariance_residual"] = _equivariance_residual(mk, preset)
    return report


def _plus_iterates(preset: Preset, mk: Marking) -> list:
    out = []
    for f in mk.frames:
        out.append(_scalar(f.plus))
    # frames are indexed by mark; expand to per-index iterates
    res = {}
    for j, i in enumerate(mk.indices):
        res[i] = out[j]
    return res


def _equivariance_residual(mk: Marking, preset: Preset) -> float:
    """Recompute the marking of the renormalised geodesic and compare."""
    g1 = mk.frames[1]
    i1, t1 = mk.indices[1], mk.times[1]
    exp_plus = _exact_iterate(preset, mk, i1)
    sub = compute_marking(preset, g1, exp_plus, mk.constants, max_blocks=len(mk.indices) - 2,
                          max_digits=len(mk.digits) - i1, check_start=False)
    res = 0.0
    for j in range(1, min(len(sub.times), len(mk.times) - 1)):
        res = max(res, abs(sub.times[j] - (mk.times[j + 1] - t1)))
        if sub.indices[j] != mk.indices[j + 1] - i1:
            res = max(res, math.inf)
    return res


def _exact_iterate(preset: Preset, mk: Marking, i: int):
    alg = CFAlgorithm(preset, "exact")
    x = preset.make_point([mk.plus_exact])
    exp = expand(alg, x, i)
    return exp.iterates[i].real_coords()[0]


# ---------------------------------------------------------------------------
# calibration and sampling

def _random_plus(preset: Preset, rng: random.Random):
    """A random exact quadratic irrational a + b sqrt3 in K.

    sqrt3 lies outside every cusp field of the real presets, so the
    expansion never terminates.
    """
    from .algebra import sqrt_exact
    s3 = sqrt_exact(3)
    lo, hi = preset._bbox()
    lo, hi = float(lo[0]), float(hi[0])
    while True:
        b = Fraction(rng.randrange(1, 1000), 10 ** 5)
        a = Fraction(round(rng.uniform(lo, hi) * 10 ** 6), 10 ** 6) - b * Fraction(1732051, 10 ** 6)
        v = a + b * s3
        if preset.contains(preset.make_point([v])):
            return v


def random_markable_geodesic(preset: Preset, constants: Constants, rng: random.Random, plus=None,
                             edge: bool = False):
    """A geodesic through a random wall point with exact forward endpoint in K.

    ``edge`` puts the start on the rim of the wall, where horoheight is h2.
    """
    plus = _random_plus(preset, rng) if plus is None else plus
    xp = float(plus)
    while True:
        if edge:
            x0 = math.sqrt(1 - constants.h2) * rng.choice((-1, 1))
            theta = math.acos(x0)
        else:
            theta = rng.uniform(0.0, math.pi)
        z = complex(math.cos(theta), math.sin(theta))
        if z.imag ** 2 < constants.h2 * (1 - 1e-12):
            continue
        # geodesic through z ending at xp: circle centred on the real line
        if abs(z.real - xp) < 1e-12:
            g = geodesic_from_endpoints(INF, xp)
        else:
            cx = (abs(z) ** 2 - xp * xp) / (2 * (z.real - xp))
            r = abs(xp - cx)
            minus = cx - r if xp > cx else cx + r
            g = geodesic_from_endpoints(minus, xp)
        g = g.shifted(g.time_of(np.array([z.real]), z.imag))
        return g, plus


def calibrate_constants(preset: Preset, ensemble: int = 10_000, seed: int = 0, c_max: float | None = None,
                        h3_samples: int = 2000) -> Constants:
    """Empirical epsilon, h2, h3, h1, h0 and C0 for a proper real preset."""
    r4 = preset.radius4()
    if not r4 < 1:
        raise ValueError(f"{preset.name} is not proper")
    rad = float(r4) ** 0.25
    eps = (1 / rad - 1) / 2
    rng = random.Random(seed)
    lo_k, hi_k = (float(v) for v in preset._bbox()[0] + preset._bbox()[1])
    # h2: lowest crossing of the unit circle by rays from outside gauge 1+eps into K
    h2 = 1.0
    for _ in range(ensemble):
        xp = float(preset.sample(rng, "float").real_coords()[0])
        u = rng.random()
        if u < 0.05:
            start = INF
        else:
            mag = (1 + eps) / max(rng.random(), 1e-9) ** 0.5
            start = mag if rng.random() < 0.5 else -mag
        g = geodesic_from_endpoints(start, xp)
        s = crossing_analytic(g)
        if s is None:
            continue
        y = float(g.point_at(s)[1])
        h2 = min(h2, y * y)
    h2 *= 0.9
    if c_max is None:
        from .experiments import horoball_constant
        c_max = horoball_constant(preset, max_len=6, digit_bound=3)
    C0 = math.sqrt(c_max)
    pre = Constants(eps, h2, h2, INF, C0)
    # h3: horoheight of the renormalised start of the first block; along the
    # block the height is unimodal, so the start and the wall end bound it
    h3 = INF
    for k in range(h3_samples):
        g, plus = random_markable_geodesic(preset, pre, rng, edge=k % 2 == 0)
        exp = _expand_plus(preset, plus, 8)
        conv = _Convergents(preset, exp.digits)
        z0 = complex(g.complex_at([0.0])[0])
        for i in range(1, len(exp.digits) + 1):
            N = RealMobius.from_rep2(conv.relative(0, i)).inverse()
            zi = complex(N(z0))
            if abs(zi) >= 1 + eps:
                h3 = min(h3, zi.imag ** 2)
                break
    h3 *= 0.9
    h1 = min(h2, h3)
    h0 = max(1.1 * c_max / h1, 1.1)
    return Constants(eps, h2, h1, h0, C0, h3=h3, ensemble=ensemble)
