"""The continued-fraction engine: Gauss map, expansions, convergents."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

from .algebra import Matrix, Scalar, mat_mul, norm
from .lattice import Digit, Preset, get_preset
from .space import (
    INF, InversionKind, IwasawaPoint, SpaceParams, apply_rotation, cygan_distance, gauge,
    inversion_matrix, invert_point, matrix_inverse_j, translation_matrix,
)

__all__ = [
    "CFAlgorithm", "Expansion", "ConvergentWord", "gauss_step", "expand", "normalize",
    "convergent_word", "convergent_error", "denominator", "tail_equal", "digit_key",
    "apply_inverse_inversion", "BOUNDARY_TOL", "ZERO_TOL",
]

BOUNDARY_TOL = 1e-12
ZERO_TOL = 1e-14
DEFAULT_MAX_DIGITS = 64


class NotInDomain(ValueError):
    pass


@dataclass(frozen=True)
class CFAlgorithm:
    """A preset together with an arithmetic backend ('exact' or 'float')."""

    preset: Preset
    backend: str = "exact"

    def __post_init__(self):
        if self.backend not in ("exact", "float"):
            raise ValueError("backend must be 'exact' or 'float'")

    @classmethod
    def from_name(cls, name: str, backend: str = "exact", *args) -> "CFAlgorithm":
        return cls(get_preset(name, *args), backend)

    @property
    def space(self) -> SpaceParams:
        return self.preset.params

    @property
    def inversion(self) -> InversionKind:
        return self.preset.inversion

    def coerce(self, x: IwasawaPoint) -> IwasawaPoint:
        if self.backend == "float" and x.backend == "exact":
            return x.to_float()
        if self.backend == "exact" and x.backend == "float":
            raise TypeError("exact algorithm given a floating point; convert explicitly")
        return x

    def invert(self, x):
        return invert_point(self.inversion, x, self.space, self.backend)

    def invert_inverse(self, x):
        return apply_inverse_inversion(self.inversion, x, self.space, self.backend)


def apply_inverse_inversion(kind: InversionKind, x, params: SpaceParams, backend: str = "exact"):
    """The inverse of the inversion iota_A = f_A o iota_-, i.e. iota_- o f_A^-1."""
    if kind.tag in ("minus", "plus", "conj"):
        return invert_point(kind, x, params, backend)
    if x is INF:
        return invert_point(kind, x, params, backend)
    rows = kind.rotation(params.n, params.kind, x.backend)
    n = len(rows)
    adj = tuple(tuple(rows[j][i].conj() for j in range(n)) for i in range(n))
    y = IwasawaPoint(apply_rotation(adj, x.z), x.t, check=False)
    from .space import MINUS
    return invert_point(MINUS, y, params, backend)


@dataclass
class Expansion:
    digits: list
    iterates: list
    terminated: bool = False
    truncated: bool = False
    ambiguous: bool = False
    warnings: list = field(default_factory=list)

    def __len__(self):
        return len(self.digits)


def normalize(alg: CFAlgorithm, x: IwasawaPoint) -> tuple[Digit, IwasawaPoint]:
    """a0 = floor(x) and the representative a0^-1(x) in K."""
    x = alg.coerce(x)
    a0 = alg.preset.floor(x)
    return a0, a0.apply_inverse(x)


def _step(alg: CFAlgorithm, x: IwasawaPoint):
    """One Gauss step without the domain check: (digit, next, margin)."""
    y = alg.invert(x)
    d = alg.preset.floor(y)
    nxt = d.apply_inverse(y)
    margin = alg.preset.margin(nxt) if alg.backend == "float" else math.inf
    return d, nxt, margin


def gauss_step(alg: CFAlgorithm, x: IwasawaPoint):
    """T(x) = floor(iota x)^-1 (iota x); returns (digit or None, T(x))."""
    x = alg.coerce(x)
    if not alg.preset.contains(x):
        raise NotInDomain(f"{x!r} is not in the fundamental domain of {alg.preset.name}")
    if x.is_origin():
        return None, x
    d, nxt, _ = _step(alg, x)
    return d, nxt


def expand(alg: CFAlgorithm, x: IwasawaPoint, max_digits: int = DEFAULT_MAX_DIGITS) -> Expansion:
    """Digits and iterates of x in K until termination or ``max_digits``."""
    x = alg.coerce(x)
    if not alg.preset.contains(x):
        raise NotInDomain(f"{x!r} is not in the fundamental domain of {alg.preset.name}; normalize first")
    exp = Expansion(digits=[], iterates=[x])
    cur = x
    while True:
        if cur.is_origin():
            exp.terminated = True
            break
        if alg.backend == "float" and gauge(cur) < ZERO_TOL:
            exp.terminated = True
            exp.warnings.append(f"iterate {len(exp.digits)} has gauge below {ZERO_TOL}; treated as 0")
            break
        if len(exp.digits) >= max_digits:
            exp.truncated = True
            break
        d, cur, margin = _step(alg, cur)
        if margin < BOUNDARY_TOL:
            exp.ambiguous = True
        exp.digits.append(d)
        exp.iterates.append(cur)
    return exp


# ---------------------------------------------------------------------------
# convergents

@dataclass
class ConvergentWord:
    """M_i = iota^-1 a_1 iota^-1 a_2 ... iota^-1 a_i, as letters and (if possible) a matrix."""

    alg: CFAlgorithm
    digits: tuple

    @cached_property
    def matrix(self) -> Matrix | None:
        """The product matrix, built on first use; None over the octonions."""
        alg = self.alg
        if not alg.preset.matrix_ok:
            return None
        M = Matrix.identity(alg.space.n + 2, alg.space.kind, alg.backend)
        iinv = _inverse_inversion_matrix(alg)
        for d in self.digits:
            M = mat_mul(mat_mul(M, iinv), alg.preset.digit_to_matrix(d) if alg.backend == "exact"
                        else _float_digit_matrix(alg, d))
        return M

    @property
    def letters(self) -> list:
        out = []
        for d in self.digits:
            out.extend(["iota^-1", d])
        return out

    def __call__(self, x):
        """Functional route: apply the letters right to left."""
        alg = self.alg
        for d in reversed(self.digits):
            if x is not INF:
                x = d.apply(x)
            x = alg.invert_inverse(x)
        return x

    def inverse_apply(self, x):
        alg = self.alg
        for d in self.digits:
            x = alg.invert(x)
            if x is not INF:
                x = d.apply_inverse(x)
        return x

    def matrix_apply(self, x):
        from .space import mobius_apply, MoebiusMap
        if self.matrix is None:
            raise ValueError("no matrix representation for this algebra")
        return mobius_apply(MoebiusMap(self.matrix, validate=False), x)


def _inverse_inversion_matrix(alg: CFAlgorithm) -> Matrix:
    return matrix_inverse_j(inversion_matrix(alg.inversion, alg.space, alg.backend))


def convergent_word(alg: CFAlgorithm, digits: Sequence[Digit], i: int | None = None) -> ConvergentWord:
    """M_i built from the first i digits (all of them when i is None)."""
    if i is None:
        i = len(digits)
    if i > len(digits):
        raise ValueError("i exceeds the number of digits")
    return ConvergentWord(alg, tuple(digits[:i]))


def _float_digit_matrix(alg: CFAlgorithm, d: Digit) -> Matrix:
    from .lattice import digit_to_matrix
    return digit_to_matrix(alg.preset, d, backend="float")


def convergent_error(alg: CFAlgorithm, x: IwasawaPoint, i: int, expansion: Expansion | None = None):
    """Cygan distance between the convergent M_i(0) and x."""
    x = alg.coerce(x)
    if expansion is None:
        expansion = expand(alg, x, max_digits=i)
    if len(expansion.digits) < i and not expansion.terminated:
        raise ValueError("expansion has fewer than i digits")
    i = min(i, len(expansion.digits))
    c = convergent_word(alg, expansion.digits, i)
    p = c(alg.preset.origin(alg.backend))
    if p is INF:
        raise ValueError("convergent is infinity: digit sequence invalid for the preset")
    return cygan_distance(p, x)


def denominator(alg: CFAlgorithm, digits: Sequence[Digit], m: int | None = None):
    """q_m: first coordinate of M_m phi(0), i.e. the top-left matrix entry.

    Spaces over the octonions have no matrix; ``None`` is returned ("not representable").
    """
    if not alg.preset.matrix_ok:
        return None
    c = convergent_word(alg, digits, m)
    return c.matrix.rows[0][0]


def denominator_norm(alg: CFAlgorithm, digits: Sequence[Digit], m: int | None = None):
    q = denominator(alg, digits, m)
    return None if q is None else norm(q)


# ---------------------------------------------------------------------------
# tails

def digit_key(d: Digit, places: int = 9) -> tuple:
    rot = d.rotation.name if d.rotation is not None else "id"
    return (rot, tuple(round(float(c), places) for c in d.translation.real_coords()))


def _as_keys(seq):
    return [digit_key(d) if isinstance(d, Digit) else d for d in seq]


def tail_equal(seq_a: Sequence, seq_b: Sequence, window: int, min_overlap: int = 1):
    """Smallest offsets (k, k') <= window with seq_a[k:] and seq_b[k':] agreeing
    on their common length (at least ``min_overlap``), or None."""
    a, b = _as_keys(seq_a), _as_keys(seq_b)
    best = None
    for total in range(2 * window + 1):
        for k in range(max(0, total - window), min(window, total) + 1):
            kp = total - k
            overlap = min(len(a) - k, len(b) - kp)
            if overlap < min_overlap:
                continue
            if a[k:k + overlap] == b[kp:kp + overlap]:
                return (k, kp)
    return best
