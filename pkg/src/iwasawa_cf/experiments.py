"""Seeded experiments: digit statistics, convergence, cylinder cells, tails,
skew products and horoballs.

Every experiment takes a seed and returns a StatReport whose contents depend
only on (config, seed).  Per-sample generators are derived from the seed and
the sample index, so splitting work across processes cannot change results.
"""
from __future__ import annotations

import hashlib
import json
import math
import random
from collections import Counter
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import __version__
from .algebra import R, Scalar, sqrt_exact
from .cf import (
    CFAlgorithm, _inverse_inversion_matrix, convergent_word, digit_key, expand, normalize, tail_equal,
)
from .lattice import Digit, Preset, _QuarterUnion, BoxDomain, DirichletDomain, ParallelogramDomain, UnionDomain, get_preset
from .modular import IOTA, IOTA_INV, GroupWord, _involutive, word_apply
from .space import (
    INF, HalfSpacePoint, IwasawaPoint, R, cygan_distance, cygan_distance4, gauge4, group_inv, group_mul,
    horoheight, invert_point, mobius_apply, MoebiusMap,
)

__all__ = [
    "ExperimentConfig", "StatReport", "sample_rng", "digit_frequency", "regular_gauss_digits", "convergence_stats",
    "denominator_gap", "field_point", "CylinderGrid", "cylinder_cells", "tail_experiment", "skew_product_check",
    "horoball_constant", "horoball_disjointness_probe", "inversion_height_check", "GAUSS_KUZMIN_ONE",
]

GAUSS_KUZMIN_ONE = math.log2(4 / 3)


@dataclass
class ExperimentConfig:
    preset: str
    samples: int = 1000
    orbit_length: int = 40
    seed: int = 0
    tolerance: float = 1e-8
    output: str | None = None
    backend: str = "float"
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.samples <= 0 or self.orbit_length <= 0:
            raise ValueError("sample count and orbit length must be positive")
        if self.backend not in ("exact", "float"):
            raise ValueError("backend must be 'exact' or 'float'")

    def digest(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True, default=str)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass
class StatReport:
    experiment: str
    config: dict
    tallies: dict = field(default_factory=dict)
    summary: dict = field(default_factory=dict)
    flags: dict = field(default_factory=dict)
    records: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"experiment": self.experiment, "config": self.config, "version": __version__,
                "tallies": {str(k): v for k, v in self.tallies.items()}, "summary": self.summary,
                "flags": self.flags, "records": self.records}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, default=_json_default, indent=1)


def _json_default(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, Fraction):
        return str(v)
    return str(v)


def _config_record(cfg: ExperimentConfig) -> dict:
    d = asdict(cfg)
    d["digest"] = cfg.digest()
    return d


def sample_rng(seed: int, index: int) -> random.Random:
    """Generator for sample ``index``; independent of how samples are batched."""
    return random.Random(f"{seed}:{index}")


# ---------------------------------------------------------------------------
# digit statistics

def regular_gauss_digits(n_digits: int, seed: int = 0, orbits: int = 100_000, cap: int = 64):
    """Tally of regular CF digits over pooled float orbits of the Gauss map.

    Returns (counts for digits 1..cap-1 with the tail pooled in index cap,
    number of digits, drops).  Orbits hitting 0 are restarted and counted
    as drops.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    steps = -(-n_digits // orbits)
    x = rng.random(orbits)
    counts = np.zeros(cap + 1, dtype=np.int64)
    drops = 0
    total = 0
    for _ in range(steps):
        bad = x < 1e-14
        if bad.any():
            drops += int(bad.sum())
            x[bad] = rng.random(int(bad.sum()))
        y = 1.0 / x
        d = np.floor(y)
        x = y - d
        counts += np.bincount(np.minimum(d, cap).astype(np.int64), minlength=cap + 1)
        total += orbits
    return counts, total, drops


def digit_frequency(cfg: ExperimentConfig) -> StatReport:
    """Empirical digit frequencies over pooled orbits."""
    preset = get_preset(cfg.preset)
    rep = StatReport("digit_frequency", _config_record(cfg))
    if preset.name == "regular" and cfg.backend == "float":
        counts, total, drops = regular_gauss_digits(cfg.samples * cfg.orbit_length, cfg.seed,
                                                    orbits=min(cfg.samples, 100_000))
        rep.tallies = {str(d): int(counts[d]) for d in range(1, len(counts)) if counts[d]}
        f1 = counts[1] / total
        rep.summary = {"total": int(total), "frequency_1": float(f1), "target_1": GAUSS_KUZMIN_ONE,
                       "target_label": "external calibration (Gauss-Kuzmin)",
                       "deviation_1": float(abs(f1 - GAUSS_KUZMIN_ONE)),
                       "sigma_1": float(math.sqrt(GAUSS_KUZMIN_ONE * (1 - GAUSS_KUZMIN_ONE) / total))}
        rep.flags = {"drops": drops, "drop_rate": drops / max(total, 1)}
        return rep
    alg = CFAlgorithm(preset, cfg.backend)
    tally, first, second = Counter(), Counter(), Counter()
    labels = {}
    dropped, total = 0, 0
    rot_ok = True
    names = {r.name for r in preset.rotations}
    half = cfg.orbit_length // 2
    for i in range(cfg.samples):
        rng = sample_rng(cfg.seed, i)
        x = preset.sample(rng, cfg.backend)
        exp = expand(alg, x, cfg.orbit_length)
        if exp.ambiguous:
            dropped += len(exp.digits)
            continue
        for j, d in enumerate(exp.digits):
            k = digit_key(d)
            labels.setdefault(k, _digit_label(d))
            tally[k] += 1
            (first if j < half else second)[k] += 1
            if preset.folded and d.rotation is not None and d.rotation.name not in names:
                rot_ok = False
        total += len(exp.digits)
    rep.tallies = {labels[k]: v for k, v in sorted(tally.items(), key=lambda kv: (-kv[1], kv[0]))}
    rep.summary = {"total": total, "distinct": len(tally), "stationarity_max_z": _two_sample_max_z(first, second)}
    if preset.params.kind == R and preset.params.n == 2:
        rep.summary["conj_max_z"] = _conj_max_z(tally)
    if preset.folded:
        rep.summary["rotations_in_set"] = rot_ok
    rep.flags = {"drops": dropped, "drop_rate": dropped / max(total + dropped, 1)}
    return rep


def _digit_label(d: Digit) -> str:
    rot = "" if d.rotation is None or d.rotation.is_identity() else f"{d.rotation.name}:"
    c = d.translation.real_coords()
    if len(c) == 2:
        return rot + _complex_label(c[0], c[1])
    return rot + "(" + ",".join(str(v) for v in c) + ")"


def _complex_label(a, b) -> str:
    def fmt(v):
        if isinstance(v, float):
            return f"{v + 0.0:g}"
        text = str(v)
        return text[5:-1] if text.startswith("Surd(") else text
    if b == 0:
        return fmt(a)
    sign = "-" if b < 0 else "+"
    mag = -b if b < 0 else b
    return f"{fmt(a)}{sign}{fmt(mag)}i"


def _conj_max_z(tally: Counter, min_count: int = 1000) -> float:
    worst = 0.0
    for (rot, c), n in tally.items():
        if len(c) != 2 or c[1] <= 0:
            continue
        m = tally.get((rot, (c[0], -c[1])), 0)
        if n + m < min_count:
            continue
        worst = max(worst, abs(n - m) / math.sqrt(n + m))
    return worst


def _two_sample_max_z(a: Counter, b: Counter, min_count: int = 1000) -> float:
    na, nb = sum(a.values()), sum(b.values())
    if not na or not nb:
        return 0.0
    worst = 0.0
    for k in set(a) | set(b):
        ca, cb = a.get(k, 0), b.get(k, 0)
        if ca + cb < min_count:
            continue
        p = (ca + cb) / (na + nb)
        s = math.sqrt(p * (1 - p) * (1 / na + 1 / nb))
        if s > 0:
            worst = max(worst, abs(ca / na - cb / nb) / s)
    return worst


# ---------------------------------------------------------------------------
# convergence

def field_point(preset: Preset, rng: random.Random, denominator: int = 30) -> IwasawaPoint:
    """A point of K whose coordinates lie in the preset's number field."""
    while True:
        den = rng.randint(2, denominator)
        cz = [Fraction(rng.randint(-3 * den, 3 * den), den) for _ in preset.zlattice.basis]
        z = _combine(preset.zlattice.basis, cz)
        t = ()
        if preset.tlattice is not None:
            ct = [Fraction(rng.randint(-3 * den, 3 * den), den) for _ in preset.tlattice.basis]
            t = _combine(preset.tlattice.basis, ct)
        x = preset.make_point(z, t)
        _, rep = normalize(CFAlgorithm(preset, "exact"), x)
        return rep


def _combine(basis, coeffs):
    out = [0] * len(basis[0])
    for c, b in zip(coeffs, basis):
        out = [o + c * v for o, v in zip(out, b)]
    return tuple(Fraction(0) + o if isinstance(o, int) else o for o in out)


def _errors_by_inversion(alg: CFAlgorithm, exp) -> list:
    """d(M_i(0), x) for i = 1..len, from d(iota p, iota q) = d(p, q)/(|p||q|).

    Unwinding M_i = g_1 ... g_i with g_k = iota^-1 a_k gives
    d(M_i(0), x) = |x_i| prod_k |x_{k-1}| / |a_k p_k| where p_i = 0 and
    p_{k-1} = g_k(p_k).  Every factor is of order one, so the product keeps
    full relative precision far below the resolution of float coordinates.
    """
    from .space import gauge
    fl = CFAlgorithm(alg.preset, "float")
    g = [float(gauge(it.to_float())) if not it.is_origin() else 0.0 for it in exp.iterates]
    digits = exp.digits
    if alg.space.kind == R and digits:
        fast = _errors_real(fl, digits, g)
        if fast is not None:
            return fast
    origin = alg.preset.origin("float")
    out = []
    for i in range(1, len(digits) + 1):
        err = g[i]
        p = origin
        for k in range(i, 0, -1):
            ap = digits[k - 1].apply(p)
            err *= g[k - 1] / float(gauge(ap))
            p = fl.invert_inverse(ap)
        out.append(err)
    return out


def _real_linear_part(fl: CFAlgorithm, f) -> np.ndarray:
    n = fl.space.n
    cols = []
    for j in range(n):
        e = [0.0] * n
        e[j] = 1.0
        cols.append(f(fl.preset.make_point(e)).real_coords())
    return np.array(cols, dtype=float).T


def _errors_real(fl: CFAlgorithm, digits, g) -> list | None:
    """Vectorised form of the product above for spaces R^n, where t = 0.

    All indices advance together: at step k every chain p_i with i >= k
    takes the letter a_k.  The inverse inversion is v -> B v / |v|^2 with
    B read off the unit vectors, checked on one generic vector.
    """
    preset = fl.preset
    B = _real_linear_part(fl, fl.invert_inverse)
    v = np.array([0.3 + 0.1 * j for j in range(fl.space.n)])
    got = np.array(fl.invert_inverse(preset.make_point(list(v))).real_coords(), dtype=float)
    if not np.allclose(got, B @ v / (v @ v), rtol=1e-12, atol=1e-15):
        return None
    L = len(digits)
    P = np.zeros((L, fl.space.n))
    err = np.array(g[1:L + 1], dtype=float)
    rots = {}
    for k in range(L, 0, -1):
        d = digits[k - 1]
        a = np.array(d.translation.to_float().real_coords(), dtype=float)
        rows = P[k - 1:]
        if d.rotation is not None and not d.rotation.is_identity():
            R = rots.get(d.rotation.name)
            if R is None:
                R = rots[d.rotation.name] = _real_linear_part(fl, d.rotation.apply)
            rows = rows @ R.T
        ap = rows + a
        nn = np.einsum("ij,ij->i", ap, ap)
        with np.errstate(divide="ignore", invalid="ignore"):
            err[k - 1:] *= g[k - 1] / np.sqrt(nn)
            P[k - 1:] = (ap @ B.T) / nn[:, None]
    return [float(e) for e in err]


def _sample_errors(alg: CFAlgorithm, x: IwasawaPoint, length: int):
    """Errors along the exact expansion of the float sample's binary value."""
    xe = _exact_copy(alg.preset, x)
    exp = expand(CFAlgorithm(alg.preset, "exact"), xe, length)
    errs = _errors_by_inversion(alg, exp)
    if exp.terminated:
        errs += [0.0] * (length - len(errs))
    return errs, exp


def _exact_copy(preset: Preset, x: IwasawaPoint) -> IwasawaPoint:
    zf = [Fraction(float(c)) for c in preset.z_flat(x)]
    tf = [Fraction(float(c)) for c in preset.t_flat(x)]
    return preset.make_point(zf, tf)


def convergence_stats(cfg: ExperimentConfig, exact_samples: int | None = None) -> StatReport:
    """Per-index error quantiles, the decay ratio, and exact recovery of field points."""
    preset = get_preset(cfg.preset)
    rep = StatReport("convergence_stats", _config_record(cfg))
    alg = CFAlgorithm(preset, "float")
    L = cfg.orbit_length
    table = []
    ambiguous = 0
    for i in range(cfg.samples):
        rng = sample_rng(cfg.seed, i)
        errs, exp = _sample_errors(alg, preset.sample(rng, "float"), L)
        ambiguous += exp.ambiguous
        table.append(errs[:L] + [math.nan] * (L - len(errs)))
    E = np.array(table, dtype=float)
    final = E[:, L - 1]
    ratios = []
    for row in E:
        for a, b in zip(row, row[1:]):
            if a > 1e-12 and b > 0 and np.isfinite(a) and np.isfinite(b):
                ratios.append(b / a)
    q = {f"q{int(p * 100)}": [float(v) for v in np.nanquantile(E, p, axis=0)] for p in (0.01, 0.5, 0.99)}
    rep.tallies = q
    fit = _decay_fit(np.nanmedian(E, axis=0))
    rep.summary = {"fraction_below_tol": float(np.mean(final < cfg.tolerance)), "tolerance": cfg.tolerance,
                   "median_step_ratio": float(np.median(ratios)) if ratios else 0.0,
                   "decay_exponent": fit, "index": L}
    rep.flags = {"ambiguous": ambiguous}
    n_exact = cfg.samples if exact_samples is None else exact_samples
    if n_exact:
        rep.summary.update(_exact_recovery(preset, n_exact, cfg.seed))
    return rep


def _decay_fit(med) -> float:
    idx = [i for i, v in enumerate(med) if v > 1e-13 and np.isfinite(v)]
    if len(idx) < 2:
        return math.nan
    y = np.log([med[i] for i in idx])
    return float(np.polyfit(np.array(idx, dtype=float), y, 1)[0])


def _exact_recovery(preset: Preset, samples: int, seed: int, max_digits: int = 400) -> dict:
    alg = CFAlgorithm(preset, "exact")
    ok = term = 0
    for i in range(samples):
        rng = sample_rng(seed + 7919, i)
        x = field_point(preset, rng)
        exp = expand(alg, x, max_digits)
        if not exp.terminated:
            continue
        term += 1
        if convergent_word(alg, exp.digits)(preset.origin()) == x:
            ok += 1
    return {"exact_samples": samples, "exact_terminated": term, "exact_recovered": ok}


def denominator_gap(cfg: ExperimentConfig) -> StatReport:
    """Smallest norm of a nonzero denominator q_m (m >= 1) over exact samples."""
    from .algebra import Matrix, mat_mul, norm
    preset = get_preset(cfg.preset)
    rep = StatReport("denominator_gap", _config_record(cfg))
    if not preset.matrix_ok:
        rep.summary = {"min_norm": None, "note": "not representable: no matrix model over the octonions"}
        return rep
    alg = CFAlgorithm(preset, "exact")
    iinv = _inverse_inversion_matrix(alg)
    best = None
    zeros = 0
    for i in range(cfg.samples):
        rng = sample_rng(cfg.seed, i)
        x = field_point(preset, rng)
        exp = expand(alg, x, cfg.orbit_length)
        M = Matrix.identity(alg.space.n + 2, alg.space.kind, "exact")
        for d in exp.digits:
            M = mat_mul(mat_mul(M, iinv), preset.digit_to_matrix(d))
            q = M.rows[0][0]
            if q.is_zero():
                zeros += 1
                continue
            v = norm(q)
            if best is None or v < best:
                best = v
    # q_0 = 1 belongs to the identity map M_0
    rep.summary = {"min_norm": min(1, best) if best is not None else 1, "min_norm_positive_index": best,
                   "min_norm_float": float(best) if best is not None else None, "zero_denominators": zeros}
    return rep


# ---------------------------------------------------------------------------
# cylinder cells

@dataclass
class CylinderGrid:
    """First-digit labels on a pixel grid over K's bounding box.

    labels: -1 outside K, -2 inside K but unlabeled, else an index into legend.
    Row 0 is the top of the picture.
    """

    preset: str
    resolution: int
    extent: tuple
    labels: np.ndarray
    legend: list
    keys: list
    outline: list
    t_slice: float | None = None

    @property
    def inside(self) -> int:
        return int(np.sum(self.labels != -1))

    @property
    def unlabeled_fraction(self) -> float:
        return float(np.sum(self.labels == -2)) / max(self.inside, 1)

    def pixel_center(self, row: int, col: int) -> tuple:
        x0, x1, y0, y1 = self.extent
        n = self.resolution
        return (x0 + (col + 0.5) * (x1 - x0) / n, y1 - (row + 0.5) * (y1 - y0) / n)

    def label_at(self, x: float, y: float) -> str | None:
        x0, x1, y0, y1 = self.extent
        n = self.resolution
        col = int((x - x0) / (x1 - x0) * n)
        row = int((y1 - y) / (y1 - y0) * n)
        v = int(self.labels[row, col])
        return self.legend[v] if v >= 0 else None

    def boundaries(self) -> list:
        """Cell boundaries as axis-parallel polylines along pixel edges."""
        L = self.labels
        segs = []
        # horizontal edges between row r and r+1
        diff = L[:-1, :] != L[1:, :]
        for r in range(diff.shape[0]):
            segs.extend(((c0, r + 1), (c1, r + 1)) for c0, c1 in _runs(diff[r]))
        diff = L[:, :-1] != L[:, 1:]
        for c in range(diff.shape[1]):
            segs.extend(((c + 1, r0), (c + 1, r1)) for r0, r1 in _runs(diff[:, c]))
        return segs


def _runs(mask: np.ndarray):
    idx = np.flatnonzero(np.diff(np.concatenate(([0], mask.astype(np.int8), [0]))))
    return list(zip(idx[0::2].tolist(), idx[1::2].tolist()))


def _domain_contains_many(dom, Y: np.ndarray) -> np.ndarray:
    if isinstance(dom, BoxDomain):
        B = np.array([[float(c) for c in b] for b in dom.lattice.basis])
        C = Y @ np.linalg.inv(B)
        lo, hi = np.array(dom.lo_f), np.array(dom.hi_f)
        return np.all((C >= lo) & (C < hi), axis=1)
    if isinstance(dom, DirichletDomain):
        V = np.array([[float(c) for c in p] for p in dom.lattice.enumerate(2) if any(c != 0 for c in p)])
        return np.all(Y @ V.T <= 0.5 * np.sum(V * V, axis=1), axis=1)
    if isinstance(dom, ParallelogramDomain):
        E = np.array([[float(c) for c in e] for e in dom.e])
        st = (Y - np.array([float(c) for c in dom.origin])) @ np.linalg.inv(E)
        return np.all((st >= 0) & (st < 1), axis=1)
    if isinstance(dom, UnionDomain):
        s = float(dom.side) if isinstance(dom, _QuarterUnion) else 1.0
        out = np.zeros(len(Y), dtype=bool)
        for cx, cy in dom.cells:
            cx, cy = float(cx), float(cy)
            out |= (Y[:, 0] >= cx) & (Y[:, 0] < cx + s) & (Y[:, 1] >= cy) & (Y[:, 1] < cy + s)
        return out
    raise TypeError(f"no vectorised test for {type(dom).__name__}")


def _rotation_matrix_2d(rot) -> np.ndarray:
    return np.array([[float(e.coords[0]) for e in r] for r in rot.rows])


def _domain_outline(preset: Preset) -> list:
    dom = preset.zdomain
    if isinstance(dom, UnionDomain):
        s = dom.side if isinstance(dom, _QuarterUnion) else Fraction(1)
        return [[(float(cx), float(cy)), (float(cx + s), float(cy)), (float(cx + s), float(cy + s)),
                 (float(cx), float(cy + s))] for cx, cy in dom.cells]
    verts = [(float(v[0]), float(v[1])) for v in dom.vertices()]
    cx = sum(v[0] for v in verts) / len(verts)
    cy = sum(v[1] for v in verts) / len(verts)
    uniq = sorted(set((round(a, 12), round(b, 12)) for a, b in verts), key=lambda v: math.atan2(v[1] - cy, v[0] - cx))
    return [uniq]


def cylinder_cells(preset: Preset | str, resolution: int = 512, t_slice: float | None = None,
                   extent: tuple | None = None) -> CylinderGrid:
    """Label each pixel of K with its first digit floor(iota x)."""
    if isinstance(preset, str):
        preset = get_preset(preset)
    p = preset.params
    planar = p.kind == R and p.n == 2
    if not planar:
        if p.kind.dim == 2 and p.n == 1:
            if t_slice is None:
                raise ValueError("Heisenberg presets need a t slice for a planar picture")
            return _cylinder_cells_slow(preset, resolution, t_slice, extent)
        raise ValueError("cylinder pictures need a planar slice: dimension > 2")
    lo, hi = preset._bbox()
    if extent is None:
        x0, y0 = float(lo[0]), float(lo[1])
        x1, y1 = float(hi[0]), float(hi[1])
        side = max(x1 - x0, y1 - y0)
        cx, cy = (x0 + x1) / 2, (y0 + y1) / 2
        extent = (cx - side / 2, cx + side / 2, cy - side / 2, cy + side / 2)
    x0, x1, y0, y1 = extent
    n = resolution
    xs = x0 + (np.arange(n) + 0.5) * (x1 - x0) / n
    ys = y1 - (np.arange(n) + 0.5) * (y1 - y0) / n
    X, Y = np.meshgrid(xs, ys)
    P = np.stack([X.ravel(), Y.ravel()], axis=1)
    inside = _domain_contains_many(preset.zdomain, P)
    labels = np.full(len(P), -1, dtype=np.int64)
    labels[inside] = -2
    idx = np.flatnonzero(inside)
    Q = P[idx]
    r2 = np.sum(Q * Q, axis=1)
    ok = r2 > 0
    A = np.array([[float(e.coords[0]) for e in r] for r in preset.inversion.rotation(2, R, "float")])
    with np.errstate(divide="ignore", invalid="ignore"):
        Z = (-Q / r2[:, None]) @ A.T
    B = np.array([[float(c) for c in b] for b in preset.zlattice.basis])
    Binv = np.linalg.inv(B)
    rots = [r for r in preset.rotations] or [None]
    base_dom = preset.zdomain_base if preset.folded else preset.zdomain
    keys, legend, lookup = [], [], {}
    code = np.full(len(Q), -2, dtype=np.int64)
    pending = ok.copy()
    offsets = [(i, j) for i in range(-2, 3) for j in range(-2, 3)]
    offsets.sort(key=lambda o: (abs(o[0]) + abs(o[1]), o))
    for ri, rot in enumerate(rots):
        Rm = np.eye(2) if rot is None else _rotation_matrix_2d(rot)
        Zr = Z @ Rm  # r^-1 applied to row vectors: (R^T z)^T = z^T R
        k0 = np.rint(Zr @ Binv)
        for off in offsets:
            if not pending.any():
                break
            sel = np.flatnonzero(pending)
            K = k0[sel] + np.array(off)
            Wt = Zr[sel] - K @ B
            hit = _domain_contains_many(preset.zdomain if rot is None else preset.zdomain, Wt)
            if not hit.any():
                continue
            hs = sel[hit]
            Kh = K[hit].astype(np.int64)
            # the digit translation is r(a); store it in lattice coordinates
            trans = Kh @ B @ Rm.T
            kc = np.rint(trans @ Binv).astype(np.int64)
            for row, (k1, k2) in zip(hs, kc):
                key = (ri, int(k1), int(k2))
                c = lookup.get(key)
                if c is None:
                    c = lookup[key] = len(keys)
                    keys.append(key)
                code[row] = c
            pending[hs] = False
    # relabel in sorted key order so the legend is canonical
    order = sorted(range(len(keys)), key=lambda i: keys[i])
    remap = np.empty(len(keys) + 2, dtype=np.int64)
    for new, old in enumerate(order):
        remap[old] = new
    remap[-2], remap[-1] = -2, -1
    code = np.where(code >= 0, remap[np.maximum(code, 0)], code)
    keys = [keys[i] for i in order]
    for ri, k1, k2 in keys:
        v = preset.zlattice.point((k1, k2))
        rot = rots[ri]
        pre = "" if rot is None or rot.is_identity() else f"{rot.name}:"
        legend.append(pre + _complex_label(v[0], v[1]))
    labels[idx] = code
    return CylinderGrid(preset.name, n, tuple(extent), labels.reshape(n, n), legend, keys, _domain_outline(preset))


def _cylinder_cells_slow(preset: Preset, n: int, t_slice: float, extent) -> CylinderGrid:
    alg = CFAlgorithm(preset, "float")
    lo, hi = preset._bbox()
    if extent is None:
        extent = (float(lo[0]), float(hi[0]), float(lo[1]), float(hi[1]))
    x0, x1, y0, y1 = extent
    labels = np.full((n, n), -1, dtype=np.int64)
    keys, lookup = [], {}
    for r in range(n):
        y = y1 - (r + 0.5) * (y1 - y0) / n
        for c in range(n):
            x = x0 + (c + 0.5) * (x1 - x0) / n
            pt = preset.make_point([x, y], [t_slice])
            if not preset.contains(pt):
                continue
            if pt.is_origin():
                labels[r, c] = -2
                continue
            d = preset.floor(alg.invert(pt))
            k = digit_key(d)
            if k not in lookup:
                lookup[k] = len(keys)
                keys.append((k, _digit_label(d)))
            labels[r, c] = lookup[k]
    order = sorted(range(len(keys)), key=lambda i: keys[i][0])
    remap = {old: new for new, old in enumerate(order)}
    labels = np.vectorize(lambda v: remap.get(v, v))(labels) if keys else labels
    return CylinderGrid(preset.name, n, tuple(extent), labels, [keys[i][1] for i in order],
                        [keys[i][0] for i in order], [], t_slice)


# ---------------------------------------------------------------------------
# tails

def exact_irrational_point(preset: Preset, rng: random.Random) -> IwasawaPoint:
    """A point of K with coordinates a + b sqrt3: never a cusp of the catalog."""
    s3 = sqrt_exact(3)
    lo, hi = preset._bbox()
    m = preset.zlattice.m
    while True:
        vals = []
        for a, b in zip(lo, hi):
            c = Fraction(rng.randrange(1, 1000), 10 ** 5)
            base = Fraction(round(rng.uniform(float(a), float(b)) * 10 ** 6), 10 ** 6)
            vals.append(base - c * Fraction(1732051, 10 ** 6) + c * s3)
        x = preset.make_point(vals[:m], vals[m:])
        if preset.contains(x):
            return x


def random_word(preset: Preset, rng: random.Random, max_len: int, digit_bound: int = 3) -> GroupWord:
    digits = preset.lattice_digits(digit_bound)
    invs = (IOTA,) if _involutive(preset.inversion) else (IOTA, IOTA_INV)
    L = rng.randint(1, max_len)
    letters = []
    use_inv = rng.random() < 0.5
    for _ in range(L):
        letters.append(rng.choice(invs) if use_inv else rng.choice(digits))
        use_inv = not use_inv
    return GroupWord(tuple(letters))


def tail_experiment(cfg: ExperimentConfig, window: int = 50, max_word: int = 6, min_overlap: int = 20,
                    words: Sequence[GroupWord] | None = None) -> StatReport:
    """Tail agreement between x and the K-representative of M x."""
    preset = get_preset(cfg.preset)
    alg = CFAlgorithm(preset, "exact")
    rep = StatReport("tail_experiment", _config_record(cfg))
    L = cfg.orbit_length
    ok, fails, offsets = 0, [], Counter()
    for i in range(cfg.samples):
        rng = sample_rng(cfg.seed, i)
        x = exact_irrational_point(preset, rng)
        w = words[i % len(words)] if words else random_word(preset, rng, max_word)
        y = word_apply(preset, w, x)
        _, y = normalize(alg, y)
        ea, eb = expand(alg, x, L), expand(alg, y, L)
        hit = tail_equal(ea.digits, eb.digits, window, min_overlap=min(min_overlap, L - window))
        if hit is None:
            fails.append({"sample": i, "word": str(w)})
        else:
            ok += 1
            offsets[f"{hit[0]},{hit[1]}"] += 1
    rep.tallies = dict(sorted(offsets.items()))
    rep.summary = {"success_rate": ok / cfg.samples, "window": window, "samples": cfg.samples,
                   "complete": preset.table_complete}
    rep.records = fails
    if not preset.table_complete:
        rep.flags["observational"] = "incomplete preset: reported, not asserted"
    return rep


# ---------------------------------------------------------------------------
# skew products

SKEW_PAIRS = {
    "hurwitz": "folded_hurwitz",
    "nearest_integer_plus": "folded_nearest_integer",
    "heisenberg": "folded_heisenberg",
}


def skew_product_check(base: str = "hurwitz", samples: int = 10_000, seed: int = 0) -> StatReport:
    """T(r z) against the folded map T_c(z) and the cocycle r -> f(z, r)."""
    full = get_preset(base)
    folded = get_preset(SKEW_PAIRS[base])
    A, Ac = CFAlgorithm(full, "exact"), CFAlgorithm(folded, "exact")
    rots = list(folded.rotations)
    rep = StatReport("skew_product_check", {"base": base, "folded": folded.name, "samples": samples, "seed": seed})
    mism = exceptional = not_bij = identity_bad = 0
    for i in range(samples):
        rng = sample_rng(seed, i)
        z = folded.sample(rng, "exact", denominator=10 ** 4)
        if z.is_origin():
            continue
        _, tz = _gauss(Ac, z)
        images, skip = [], False
        for r in rots:
            x = Digit(folded.origin(), r).apply(z)
            if not full.contains(x):
                skip = True
                break
            _, tx = _gauss(A, x)
            if full.margin(tx.to_float()) < 1e-12:
                skip = True
                break
            dec = [s for s in rots if folded.contains(Digit(folded.origin(), s).apply_inverse(tx))]
            if len(dec) != 1:
                skip = True
                break
            s = dec[0]
            first = Digit(folded.origin(), s).apply_inverse(tx)
            if first != tz:
                mism += 1
                if r.is_identity():
                    identity_bad += 1
            images.append(s.name)
        if skip:
            exceptional += 1
            continue
        if sorted(images) != sorted(r.name for r in rots):
            not_bij += 1
    rep.summary = {"mismatches": mism, "identity_mismatches": identity_bad, "non_bijective": not_bij,
                   "exceptional_skipped": exceptional, "checked": samples - exceptional}
    return rep


def _gauss(alg: CFAlgorithm, x: IwasawaPoint):
    y = alg.invert(x)
    d = alg.preset.floor(y)
    return d, d.apply_inverse(y)


# ---------------------------------------------------------------------------
# horoballs

@dataclass
class _Ball:
    base: object  # INF or a boundary point
    size: object  # height if based at INF, else top horoheight


def _ball_image(alg: CFAlgorithm, letter, ball: _Ball) -> _Ball:
    if isinstance(letter, Digit):
        if ball.base is INF:
            return ball
        return _Ball(letter.apply(ball.base), ball.size)
    inv = alg.invert if letter == IOTA else alg.invert_inverse
    if ball.base is INF:
        return _Ball(alg.preset.origin(), 1 / ball.size)
    if ball.base.is_origin():
        return _Ball(INF, 1 / ball.size)
    return _Ball(inv(ball.base), ball.size / gauge4(ball.base))


def _horoball_family(preset: Preset, max_len: int, digit_bound: int):
    """C_M = ht_inf(M B_inf(1)) for words M with M(inf) != inf, by base point."""
    alg = CFAlgorithm(preset, "exact")
    digits = preset.lattice_digits(digit_bound)
    invs = (IOTA,) if _involutive(preset.inversion) else (IOTA, IOTA_INV)
    family = {}
    start = _Ball(INF, Fraction(1))

    def record(ball, word):
        key = ball.base
        cur = family.get(key)
        if cur is None or ball.size > cur[0]:
            family[key] = (ball.size, word)

    # grow words on the left; a trailing digit would fix infinity, so words end in an inversion
    stack = [(start, (), True)]
    while stack:
        ball, word, need_inv = stack.pop()
        if len(word) >= max_len:
            continue
        if need_inv:
            for s in invs:
                nb = _ball_image(alg, s, ball)
                nw = (s,) + word
                if nb.base is not INF:
                    record(nb, nw)
                stack.append((nb, nw, False))
        else:
            for d in digits:
                nb = _ball_image(alg, d, ball)
                nw = (d,) + word
                if nb.base is not INF:
                    record(nb, nw)
                stack.append((nb, nw, True))
    return family


def horoball_constant(preset: Preset, max_len: int = 8, digit_bound: int = 2) -> float:
    fam = _horoball_family(preset, max_len, digit_bound)
    return float(max(v[0] for v in fam.values()))


def inversion_height_check(preset: Preset, heights: Sequence = (Fraction(1, 2), Fraction(1), Fraction(3))) -> list:
    """Exact top of iota(B_inf(h)) and a sampled check that no point goes higher."""
    out = []
    params = preset.params
    rng = random.Random(1)
    for h in heights:
        zero = [Scalar.zero(params.kind) for _ in range(params.n)]
        top = invert_point(preset.inversion, HalfSpacePoint(zero, _w_scalar(params.kind, h)), params)
        worst = Fraction(0)
        for _ in range(50):
            x = preset.sample(rng, "exact", denominator=50)
            p = HalfSpacePoint(x.z, _w_scalar(params.kind, h, x.t))
            worst = max(worst, invert_point(preset.inversion, p, params).w.coords[0])
        out.append({"h": h, "top": top.w.coords[0], "expected": 1 / Fraction(h),
                    "exact": top.w.coords[0] == 1 / Fraction(h), "sampled_max": worst})
    return out


def _w_scalar(kind, h, t=None):
    coords = (Fraction(h),) + (tuple(t.coords[1:]) if t is not None else (Fraction(0),) * (kind.dim - 1))
    return Scalar(kind, coords)


def horoball_disjointness_probe(preset: Preset | str, max_len: int = 8, digit_bound: int = 2,
                                family_size: int = 300) -> StatReport:
    """Max C_M over words, C0 = sqrt(max C_M), and pairwise disjointness at C0."""
    if isinstance(preset, str):
        preset = get_preset(preset)
    fam = _horoball_family(preset, max_len, digit_bound)
    cmax = max(v[0] for v in fam.values())
    rep = StatReport("horoball_disjointness_probe",
                     {"preset": preset.name, "max_len": max_len, "digit_bound": digit_bound})
    # largest balls first; ties broken by the base's coordinates for determinism
    items = sorted(fam.items(), key=lambda kv: (-float(kv[1][0]), [float(c) for c in kv[0].real_coords()]))
    items = items[:family_size]
    overlaps = tangencies = 0
    c0sq = cmax
    for i in range(len(items)):
        p, (cp, _) = items[i]
        for q, (cq, _) in items[i + 1:]:
            d4 = cygan_distance4(p, q)
            bound = cp * cq / c0sq
            if d4 < bound:
                overlaps += 1
            elif d4 == bound:
                tangencies += 1
    best_word = max(fam.values(), key=lambda v: v[0])[1]
    rep.summary = {"max_C": cmax, "max_C_float": float(cmax), "C0": math.sqrt(float(cmax)),
                   "family": len(fam), "checked": len(items), "overlaps": overlaps, "tangencies": tangencies,
                   "witness": str(GroupWord(best_word))}
    rep.records = inversion_height_check(preset)
    return rep
