"""Words in the modular group <Z, iota>, canonical matrices, symmetry search.

Two matrix models are used.  ``Rep2`` is the 2x2 model over Z[i]-type
rings for R^1 and for R^2 viewed as C (holomorphic inversions only).
``RepN`` is the (n+2)x(n+2) model conjugated by diag(1, sqrt2 I, 1), which
clears every sqrt2 from digit matrices while leaving inversions, rotations
and the top-left entry unchanged.
"""
from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Sequence

from .algebra import C, H, Matrix, O, R, Scalar, Surd, invert, mat_mul, mul, sqrt_exact
from .lattice import Digit, Preset, Rotation
from .space import (
    INF, InversionKind, inversion_matrix, invert_point, matrix_inverse_j, rotation_matrix,
    translation_matrix,
)

__all__ = [
    "IOTA", "IOTA_INV", "GroupWord", "Rep2", "RepN", "representation", "enumerate_words", "canonical_form",
    "CanonicalMatrix", "stabilizer_test", "StabilizerReport", "find_central_symmetries", "SymmetryReport",
    "mod_q_symmetry_search", "word_apply",
]

IOTA = "iota"
IOTA_INV = "iota^-1"


@dataclass(frozen=True)
class GroupWord:
    """Letters read left to right as a composition: the rightmost acts first."""

    letters: tuple

    def __len__(self):
        return len(self.letters)

    def __add__(self, other: "GroupWord") -> "GroupWord":
        return GroupWord(self.letters + other.letters)

    @property
    def reduced(self) -> bool:
        for a, b in zip(self.letters, self.letters[1:]):
            if isinstance(a, str) and isinstance(b, str) and a != b:
                return False
            if isinstance(a, Digit) and isinstance(b, Digit):
                return False
        return not any(isinstance(x, Digit) and x.is_identity() for x in self.letters)

    def __str__(self):
        out = []
        for x in self.letters:
            if isinstance(x, str):
                out.append("ι" if x == IOTA else "ι⁻¹")
            else:
                rot = "" if x.rotation is None or x.rotation.is_identity() else f"{x.rotation.name}·"
                coords = ",".join(str(c) for c in x.translation.real_coords())
                out.append(f"{rot}A({coords})")
        return " ".join(out) if out else "id"


def _involutive(kind: InversionKind) -> bool:
    return kind.tag in ("minus", "plus", "conj")


def word_apply(preset: Preset, word: GroupWord, x):
    """Functional route: apply letters right to left (works for octonions)."""
    from .cf import apply_inverse_inversion
    params = preset.params
    backend = "exact" if x is INF else x.backend
    for letter in reversed(word.letters):
        if letter == IOTA:
            x = invert_point(preset.inversion, x, params, backend)
        elif letter == IOTA_INV:
            x = apply_inverse_inversion(preset.inversion, x, params, backend)
        elif x is not INF:
            x = letter.apply(x)
    return x


# ---------------------------------------------------------------------------
# the 2x2 model (entries are pairs (re, im) of exact reals)

def _cm(a, b):
    return (a[0] * b[0] - a[1] * b[1], a[0] * b[1] + a[1] * b[0])


def _ca(a, b):
    return (a[0] + b[0], a[1] + b[1])


def _cz(a) -> bool:
    return a[0] == 0 and a[1] == 0


ZERO2 = (0, 0)
ONE2 = (1, 0)


def _mm2(A, B):
    a, b, c, d = A
    e, f, g, h = B
    return (_ca(_cm(a, e), _cm(b, g)), _ca(_cm(a, f), _cm(b, h)),
            _ca(_cm(c, e), _cm(d, g)), _ca(_cm(c, f), _cm(d, h)))


def _cinv_scalar(a):
    n = a[0] * a[0] + a[1] * a[1]
    return (a[0] / n, -a[1] / n) if not isinstance(n, int) else (Fraction(a[0], n), Fraction(-a[1], n))


def _cdiv(a, b):
    return _cm(a, _cinv_scalar(b))


def _norm_num(v):
    if isinstance(v, Fraction) and v.denominator == 1:
        return int(v)
    if isinstance(v, Surd):
        return v
    return v


def _clean(a):
    return (_norm_num(a[0]), _norm_num(a[1]))


def _units(order: int) -> list:
    if order == 2:
        return [(1, 0), (-1, 0)]
    if order == 4:
        return [(1, 0), (0, 1), (-1, 0), (0, -1)]
    if order == 6:
        s = sqrt_exact(3) / 2
        h = Fraction(1, 2)
        return [(1, 0), (h, s), (-h, s), (-1, 0), (-h, -s), (h, -s)]
    raise ValueError("unsupported unit group")


def _in_sector(v, order: int) -> bool:
    re, im = v
    if order == 2:
        return re > 0 or (re == 0 and im > 0)
    if order == 4:
        return re > 0 and im >= 0
    return re > 0 and im >= 0 and im * im < 3 * re * re


class Rep2:
    """2x2 model: x -> (a x + b)(c x + d)^-1 on R or C."""

    name = "2x2"

    def __init__(self, iota, unit_order: int = 2, rotations: dict | None = None, complex_coords: bool = False):
        self.iota = iota
        self.unit_order = unit_order
        self.units = _units(unit_order)
        self.rotations = rotations or {}
        self.complex_coords = complex_coords

    @classmethod
    def standard(cls, sign: int = 1, unit_order: int = 2) -> "Rep2":
        """iota = [[0, sign], [1, 0]]: sign=+1 is x -> 1/x, sign=-1 is x -> -1/x."""
        return cls(((0, 0), (sign, 0), (1, 0), (0, 0)), unit_order)

    def identity(self):
        return (ONE2, ZERO2, ZERO2, ONE2)

    def translation(self, value):
        return (ONE2, _clean(value), ZERO2, ONE2)

    def digit(self, d: Digit):
        coords = d.translation.real_coords()
        value = (coords[0], coords[1] if len(coords) > 1 else 0)
        M = self.translation(value)
        if d.rotation is not None and not d.rotation.is_identity():
            M = _mm2(M, self.rotations[d.rotation.name])
        return M

    def letter(self, x):
        if x == IOTA:
            return self.iota
        if x == IOTA_INV:
            return self.inverse(self.iota)
        return self.digit(x)

    def mul(self, A, B):
        M = _mm2(A, B)
        return tuple(_clean(e) for e in M)

    def inverse(self, M):
        a, b, c, d = M
        return (d, (-b[0], -b[1]), (-c[0], -c[1]), a)

    def canonical(self, M):
        a, b, c, d = M
        e = a if not _cz(a) else c
        for u in self.units:
            if _in_sector(_cm(u, e), self.unit_order):
                return tuple(_clean(_cm(u, x)) for x in M)
        raise AssertionError("no unit normalizes the pivot")

    def image_zero(self, M):
        a, b, c, d = M
        return INF if _cz(d) else _clean(_cdiv(b, d))

    def image_inf(self, M):
        a, b, c, d = M
        return INF if _cz(c) else _clean(_cdiv(a, c))

    def fixes_inf(self, M) -> bool:
        return _cz(M[2])

    def is_diagonal(self, M) -> bool:
        return _cz(M[1]) and _cz(M[2])

    def is_scalar(self, M) -> bool:
        return self.is_diagonal(M) and M[0] == M[3]

    def rotation_multiplier(self, M):
        """For diagonal M: x -> (a/d) x."""
        return _clean(_cdiv(M[0], M[3]))

    def to_matrix(self, M) -> Matrix:
        kind = C if self.complex_coords else R
        def sc(v):
            return Scalar(kind, (v[0], v[1])) if kind == C else Scalar(kind, (v[0],))
        return Matrix([[sc(M[0]), sc(M[1])], [sc(M[2]), sc(M[3])]])

    def key(self, M):
        return M


# ---------------------------------------------------------------------------
# the (n+2) model, conjugated to clear sqrt2

def _conj_by_d(M: Matrix, inverse: bool = False) -> Matrix:
    """D^-1 M D (or D M D^-1 when inverse) with D = diag(1, sqrt2 I, 1)."""
    n = M.size
    s2 = sqrt_exact(2)
    d = [Fraction(1)] + [s2] * (n - 2) + [Fraction(1)]
    rows = []
    for i in range(n):
        row = []
        for j in range(n):
            f = d[j] / d[i] if not inverse else d[i] / d[j]
            row.append(M.rows[i][j].scale(f) if f != 1 else M.rows[i][j])
        rows.append(row)
    return Matrix(rows)


class RepN:
    """(n+2)x(n+2) model over k in {R, C, H}, sqrt2-free coordinates."""

    name = "full"

    def __init__(self, preset: Preset, unit_order: int = 2):
        if not preset.matrix_ok:
            raise ValueError("no matrix model over the octonions; use word_apply")
        self.preset = preset
        self.kind = preset.params.kind
        self.size = preset.params.n + 2
        self.unit_order = unit_order if self.kind == C else 2
        self._iota = _conj_by_d(inversion_matrix(preset.inversion, preset.params))
        self._cache = {}

    def identity(self):
        return Matrix.identity(self.size, self.kind)

    def digit(self, d: Digit):
        key = d.key()
        if key not in self._cache:
            M = translation_matrix(d.translation)
            if d.rotation is not None and not d.rotation.is_identity():
                M = mat_mul(M, rotation_matrix(d.rotation.rows))
            self._cache[key] = _conj_by_d(M)
        return self._cache[key]

    def letter(self, x):
        if x == IOTA:
            return self._iota
        if x == IOTA_INV:
            return self.inverse(self._iota)
        return self.digit(x)

    def mul(self, A, B):
        return mat_mul(A, B)

    def inverse(self, M):
        return _conj_by_d(matrix_inverse_j(_conj_by_d(M, inverse=True)))

    def _pivot_units(self):
        if self.kind == C:
            return [Scalar(C, u) for u in _units(self.unit_order)]
        return [Scalar.one(self.kind), -Scalar.one(self.kind)]

    def canonical(self, M: Matrix) -> Matrix:
        e = next(M.rows[i][0] for i in range(self.size) if not M.rows[i][0].is_zero())
        for u in self._pivot_units():
            v = mul(u, e)
            if self.kind == C:
                ok = _in_sector(v.coords, self.unit_order)
            else:
                first = next(c for c in v.coords if c != 0)
                ok = first > 0
            if ok:
                return M.scale_left(u)
        raise AssertionError("no unit normalizes the pivot")

    @staticmethod
    def _proj(col):
        piv = next((c for c in col if not c.is_zero()), None)
        inv = invert(piv)
        return tuple(mul(c, inv).coords for c in col)

    def image_zero(self, M: Matrix):
        return self._proj([r[0] for r in M.rows])

    def image_inf(self, M: Matrix):
        return self._proj([r[-1] for r in M.rows])

    def fixes_inf(self, M: Matrix) -> bool:
        return all(M.rows[i][-1].is_zero() for i in range(self.size - 1))

    def is_diagonal(self, M: Matrix) -> bool:
        """Block diagonal diag(a, B, d): fixes both 0 and INF."""
        s = self.size
        return all(M.rows[i][0].is_zero() for i in range(1, s)) and \
            all(M.rows[0][j].is_zero() for j in range(1, s)) and \
            all(M.rows[i][-1].is_zero() for i in range(s - 1)) and \
            all(M.rows[-1][j].is_zero() for j in range(s - 1))

    def is_scalar(self, M: Matrix) -> bool:
        e = M.rows[0][0]
        return all(M.rows[i][j] == (e if i == j else Scalar.zero(self.kind))
                   for i in range(self.size) for j in range(self.size))

    def rotation_multiplier(self, M: Matrix):
        """For block-diagonal M: z -> B z a^-1, w -> d w a^-1; returns (B a^-1, d a^-1)."""
        a_inv = invert(M.rows[0][0])
        B = tuple(tuple(mul(M.rows[i][j], a_inv) for j in range(1, self.size - 1)) for i in range(1, self.size - 1))
        return B, mul(M.rows[-1][-1], a_inv)

    def to_matrix(self, M: Matrix) -> Matrix:
        return _conj_by_d(M, inverse=True)

    def key(self, M: Matrix):
        return M


def _unit_order_for(preset: Preset) -> int:
    lname = preset.zlattice.name
    if "rho" in lname or preset.name.startswith("bianchi(3"):
        return 6
    if preset.algebra == "C" or preset.params.kind == C:
        return 4 if ("Z^2" in lname or "(1+i)" in lname or preset.name.startswith("bianchi(1")) else 2
    return 2


def representation(preset: Preset, model: str = "auto"):
    """A matrix model for the preset's modular group.

    ``auto`` picks the 2x2 model when the inversion is holomorphic on R or C.
    """
    if model not in ("auto", "2x2", "full"):
        raise ValueError("model must be auto, 2x2 or full")
    two_ok = False
    p = preset.params
    if p.kind == R and p.n == 1:
        two_ok = preset.inversion.tag in ("minus", "plus", "conj")
        sign = -1 if preset.inversion.tag == "minus" else 1
        complex_coords = False
    elif p.kind == R and p.n == 2 and preset.inversion.tag == "conj":
        two_ok, sign, complex_coords = True, 1, True
    if model == "2x2" and not two_ok:
        raise ValueError(f"{preset.name} has no 2x2 model")
    if model == "full" or not two_ok:
        return RepN(preset, _unit_order_for(preset))
    rep = Rep2(((0, 0), (sign, 0), (1, 0), (0, 0)), _unit_order_for(preset), complex_coords=complex_coords)
    for rot in preset.rotations:
        if rot.is_identity():
            continue
        # rotations of the catalog are scalar: z -> u z
        u = rot.rows[0][0]
        if p.n == 1:
            val = (u.coords[0], 0)
        else:
            val = (u.coords[0], 0)  # -I on R^2 is multiplication by -1
        rep.rotations[rot.name] = (_clean(val), ZERO2, ZERO2, ONE2)
    return rep


# ---------------------------------------------------------------------------
# enumeration

def _inversion_letters(preset: Preset) -> tuple:
    return (IOTA,) if _involutive(preset.inversion) else (IOTA, IOTA_INV)


def enumerate_words(preset: Preset, max_len: int, digit_bound: int) -> Iterator[GroupWord]:
    """All reduced words of length 1..max_len, by length, each once."""
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    digits = preset.lattice_digits(digit_bound)
    invs = _inversion_letters(preset)

    def extend(prefix, length):
        if length == 0:
            yield prefix
            return
        last = prefix[-1] if prefix else None
        if last is None or isinstance(last, Digit):
            for s in invs:
                yield from extend(prefix + (s,), length - 1)
        if last is None or isinstance(last, str):
            for d in digits:
                yield from extend(prefix + (d,), length - 1)
        # inverse letters: forbid iota next to iota^-1, and iota iota when involutive
        return

    for L in range(1, max_len + 1):
        for letters in extend((), L):
            w = GroupWord(letters)
            if _ok_inversions(letters, invs):
                yield w


def _ok_inversions(letters, invs) -> bool:
    for a, b in zip(letters, letters[1:]):
        if isinstance(a, str) and isinstance(b, str):
            if len(invs) == 1 or a != b:
                return False
    return True


def _word_matrix(rep, word: GroupWord):
    M = rep.identity()
    for x in word.letters:
        M = rep.mul(M, rep.letter(x))
    return M


@dataclass(frozen=True)
class CanonicalMatrix:
    matrix: object
    model: str
    note: str = "first nonzero entry of the first column moved into the unit sector"

    def as_matrix(self, rep) -> Matrix:
        return rep.to_matrix(self.matrix)

    def __eq__(self, other):
        return isinstance(other, CanonicalMatrix) and self.model == other.model and self.matrix == other.matrix

    def __hash__(self):
        return hash((self.model, self.matrix))


def canonical_form(word: GroupWord, preset: Preset | None = None, rep=None) -> CanonicalMatrix:
    if rep is None:
        if preset is None:
            raise ValueError("need a preset or a representation")
        rep = representation(preset)
    return CanonicalMatrix(rep.canonical(_word_matrix(rep, word)), rep.name)


@dataclass
class StabilizerReport:
    fixes_inf: bool
    translation: object = None
    diagonal: object = None


def stabilizer_test(word: GroupWord, preset: Preset | None = None, rep=None) -> StabilizerReport:
    """Does the word fix INF?  If so, split it as translation * diagonal part."""
    if rep is None:
        rep = representation(preset)
    M = _word_matrix(rep, word)
    if not rep.fixes_inf(M):
        return StabilizerReport(False)
    if isinstance(rep, Rep2):
        a, b, c, d = M
        trans = _clean(_cdiv(b, d))
        diag = rep.canonical((a, ZERO2, ZERO2, d))
        return StabilizerReport(True, trans, diag)
    # full model: translation part is the image of 0
    t_col = rep.image_zero(M)
    T = rep.identity()
    # recover A_b^-1 M: the digit matrix of b is lower triangular with first column t_col
    kind = rep.kind
    s = rep.size
    rows = [list(r) for r in T.rows]
    for i in range(1, s):
        rows[i][0] = Scalar(kind, t_col[i])
    # complete to the translation matrix in the conjugated model
    z = [Scalar(kind, t_col[i]) for i in range(1, s - 1)]
    for j in range(1, s - 1):
        rows[s - 1][j] = z[j - 1].conj().scale(2)
    A = Matrix(rows)
    D = mat_mul(rep.inverse(A), M)
    return StabilizerReport(True, t_col, rep.canonical(D))


# ---------------------------------------------------------------------------
# central symmetries

@dataclass
class FoundSymmetry:
    matrix: object
    multiplier: object
    word: GroupWord
    dilation: bool = False


@dataclass
class SymmetryReport:
    preset: str
    max_len: int
    digit_bound: int
    model: str
    rotations: list = field(default_factory=list)
    ball_size: int = 0

    @property
    def found(self) -> bool:
        return any(not s.dilation for s in self.rotations)

    def summary(self) -> str:
        if not self.rotations:
            return f"{self.preset}: none found up to length {self.max_len} (digit bound {self.digit_bound})"
        return f"{self.preset}: {len(self.rotations)} non-trivial rotation(s) found"


def _ball(rep, preset: Preset, radius: int, digit_bound: int):
    """Distinct group elements given by words of length <= radius."""
    digits = preset.lattice_digits(digit_bound)
    invs = _inversion_letters(preset)
    letters = list(invs) + digits
    mats = {l if isinstance(l, str) else l.key(): rep.letter(l) for l in letters}
    ident = rep.identity()
    seen = {rep.canonical(ident): ((), ident)}
    frontier = [((), ident)]
    for _ in range(radius):
        nxt = []
        for word, M in frontier:
            last = word[-1] if word else None
            for l in letters:
                if last is not None:
                    if isinstance(last, Digit) and isinstance(l, Digit):
                        continue
                    if isinstance(last, str) and isinstance(l, str) and (len(invs) == 1 or last != l):
                        continue
                N = rep.mul(M, mats[l if isinstance(l, str) else l.key()])
                c = rep.canonical(N)
                if c in seen:
                    continue
                seen[c] = (word + (l,), N)
                nxt.append((word + (l,), N))
        frontier = nxt
    return list(seen.values())


def _rotation_group_keys(rep, preset: Preset) -> set:
    keys = set()
    for rot in preset.rotations:
        from .lattice import Digit as _D
        d = _D(preset.origin(), rot)
        keys.add(rep.canonical(rep.letter(d)))
    keys.add(rep.canonical(rep.identity()))
    return keys


def _is_dilation(rep, M) -> bool:
    if isinstance(rep, Rep2):
        m = rep.rotation_multiplier(M)
        return m[0] * m[0] + m[1] * m[1] != 1
    B, dd = rep.rotation_multiplier(M)
    from .algebra import norm_sq
    return norm_sq(dd) != 1


def find_central_symmetries(preset: Preset, max_len: int = 12, digit_bound: int = 3, model: str = "auto",
                            rep=None) -> SymmetryReport:
    """Rotations fixing 0 and INF realised by words of length <= max_len.

    Meet in the middle: every such word is u v with |u|, |v| <= ceil(max_len/2),
    and u v fixes 0 and INF exactly when v(0) = u^-1(0) and v(INF) = u^-1(INF).
    Rotations already in the preset's digit set are not reported.
    """
    rep = rep or representation(preset, model)
    half = (max_len + 1) // 2
    ball = _ball(rep, preset, half, digit_bound)
    index = {}
    for word, M in ball:
        index.setdefault((rep.image_zero(M), rep.image_inf(M)), []).append((word, M))
    known = _rotation_group_keys(rep, preset)
    found = {}
    for uword, U in ball:
        Ui = rep.inverse(U)
        for vword, V in index.get((rep.image_zero(Ui), rep.image_inf(Ui)), ()):
            if len(uword) + len(vword) > max_len:
                continue
            P = rep.mul(U, V)
            c = rep.canonical(P)
            if c in known or c in found:
                continue
            w = GroupWord(uword + vword)
            if not rep.is_diagonal(P):
                raise AssertionError("matched word does not fix 0 and INF")
            found[c] = FoundSymmetry(c, rep.rotation_multiplier(P), w, _is_dilation(rep, P))
    _close_under_products(rep, found, known)
    # keep the shortest witness first
    rots = sorted(found.values(), key=lambda s: (len(s.word), str(s.word)))
    return SymmetryReport(preset.name, max_len, digit_bound, rep.name, rots, len(ball))


def _close_under_products(rep, found: dict, known: set, limit: int = 64) -> None:
    """Add products of found rotations (witness = concatenated words).

    A product may be longer than the search bound; it is still a group element.
    """
    changed = True
    while changed and len(found) < limit:
        changed = False
        items = list(found.values())
        for a in items:
            for b in items:
                P = rep.mul(_word_matrix(rep, a.word), _word_matrix(rep, b.word))
                c = rep.canonical(P)
                if c in known or c in found:
                    continue
                found[c] = FoundSymmetry(c, rep.rotation_multiplier(P), a.word + b.word, _is_dilation(rep, P))
                changed = True


# ---------------------------------------------------------------------------
# quotient-ring search

def _mod_gauss(v, q):
    re, im = v
    if not all(isinstance(x, int) or (isinstance(x, Fraction) and x.denominator == 1) for x in (re, im)):
        raise ValueError("entries are not Gaussian integers; the quotient is not finite for this preset")
    return (int(re) % q, int(im) % q)


def _mod_mat(M, q):
    return tuple(_mod_gauss(e, q) for e in M)


def _mm2_mod(A, B, q):
    return tuple(_mod_gauss(e, q) for e in _mm2(A, B))


def mod_q_symmetry_search(preset: Preset, q: int = 4, target=(-1, 0)) -> dict:
    """Close the generators of the 2x2 model modulo q and look for the target
    rotation x -> u x, i.e. diag(u, 1) up to unit scalars.

    Returns {'verdict': 'excluded' | 'not excluded', 'group_order': ...}.
    """
    rep = representation(preset, "2x2")
    digits = preset.lattice_digits(max(q, 2), include_identity=False)
    gens = {_mod_mat(rep.iota, q)}
    for d in digits:
        gens.add(_mod_mat(rep.digit(d), q))
    ident = _mod_mat(rep.identity(), q)
    seen = {ident}
    queue = deque([ident])
    gens = sorted(gens)
    while queue:
        M = queue.popleft()
        for g in gens:
            N = _mm2_mod(M, g, q)
            if N not in seen:
                seen.add(N)
                queue.append(N)
    u = (target[0], target[1]) if isinstance(target, tuple) else (target, 0)
    T = (u, ZERO2, ZERO2, ONE2)
    hits = []
    for lam in _units(4):
        cand = _mod_mat(tuple(_cm(lam, e) for e in T), q)
        if cand in seen:
            hits.append(lam)
    return {"verdict": "not excluded" if hits else "excluded", "group_order": len(seen), "scalars": hits}
