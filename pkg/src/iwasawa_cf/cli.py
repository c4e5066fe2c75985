"""Command-line driver.

Point literals (exact rationals):

    literal  := term (("+" | "-") term)*
    term     := [coef] [unit] | coef
    coef     := integer ["/" integer] | decimal
    unit     := "i" | "j" | "k" | "e1" .. "e7" | "t" | "ti" | "tj" | "tk"

A unit without a coefficient means coefficient 1 ("-i" is -1 times i).  The
real part has no unit.  Planar presets read "a+bi"; quaternion presets use
i, j, k; octonion and 3d presets use e1..; Heisenberg presets put the centre
coordinate on t (or ti, tj, tk over the quaternions).

Config files hold one key=value per line (# starts a comment); keys are the
long flag names.  Flags given on the command line win over the file.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import re
import sys
from fractions import Fraction
from typing import Sequence

from . import __version__

EXIT_OK, EXIT_ERROR, EXIT_USAGE = 0, 1, 2


class CLIError(Exception):
    def __init__(self, kind: str, message: str):
        super().__init__(message)
        self.kind = kind


# ---------------------------------------------------------------------------
# point literals

_TERM = re.compile(r"\s*([+-])?\s*(\d+(?:/\d+)?|\d*\.\d+|\d+\.\d*)?\s*(ti|tj|tk|t|e[1-7]|i|j|k)?\s*")


def _unit_names(preset) -> tuple[list, list]:
    """Unit suffixes for the flat z and t coordinates of a preset."""
    p = preset.params
    dz = p.kind.dim * p.n
    if p.kind.dim == 1:
        if dz == 1:
            zs = [""]
        elif dz == 2:
            zs = ["", "i"]
        elif dz == 4:
            zs = ["", "i", "j", "k"]
        else:
            zs = [""] + [f"e{k}" for k in range(1, dz)]
        return zs, []
    if p.kind.dim == 2:
        return ["", "i"][:dz] if p.n == 1 else [f"e{k}" for k in range(dz)], ["t"]
    return ["", "i", "j", "k"], ["ti", "tj", "tk"]


def parse_point(text: str, preset):
    """Exact point of the preset's space from a literal like '2/5+1/5i'."""
    zs, ts = _unit_names(preset)
    units = zs + ts
    coeffs = {u: Fraction(0) for u in units}
    s = text.replace(" ", "")
    if not s:
        raise CLIError("malformed point literal", "empty point literal")
    pos = 0
    first = True
    while pos < len(s):
        m = _TERM.match(s, pos)
        if not m or m.end() == pos:
            raise CLIError("malformed point literal", f"cannot parse {text!r} at position {pos}")
        sign, num, unit = m.groups()
        if not first and sign is None:
            raise CLIError("malformed point literal", f"missing sign before term at position {pos} in {text!r}")
        if num is None and unit is None:
            raise CLIError("malformed point literal", f"empty term in {text!r}")
        unit = unit or ""
        if unit not in coeffs:
            # the planar presets also accept e1 for i
            alias = {"e1": "i"}.get(unit)
            if alias in coeffs:
                unit = alias
            else:
                raise CLIError("malformed point literal", f"unit {unit or 'real'!r} does not exist for {preset.name}")
        c = Fraction(num) if num is not None else Fraction(1)
        coeffs[unit] += -c if sign == "-" else c
        pos = m.end()
        first = False
    return preset.make_point([coeffs[u] for u in zs], [coeffs[u] for u in ts])


def format_point(x, preset) -> str:
    """Inverse of parse_point for exact rational points."""
    zs, ts = _unit_names(preset)
    vals = list(preset.z_flat(x)) + list(preset.t_flat(x))
    out = []
    for u, v in zip(zs + ts, vals):
        if v == 0:
            continue
        text = _format_number(v)
        neg = text.startswith("-")
        mag = text[1:] if neg else text
        if u and mag == "1":
            mag = ""
        out.append(("-" if neg else "+") + mag + u)
    if not out:
        return "0"
    s = "".join(out)
    return s[1:] if s.startswith("+") else s


def _format_number(v) -> str:
    if isinstance(v, float):
        return repr(v)
    text = str(v)
    if text.startswith("Surd("):
        return "(" + text[5:-1] + ")"
    return text


def format_digit(d, preset) -> str:
    rot = "" if d.rotation is None or d.rotation.is_identity() else f"{d.rotation.name}:"
    return rot + format_point(d.translation, preset)


# ---------------------------------------------------------------------------
# SVG

def _color(key: str) -> str:
    h = hashlib.sha256(key.encode()).digest()
    hue = int.from_bytes(h[:2], "big") % 360
    sat = 45 + h[2] % 30
    light = 45 + h[3] % 25
    return f"hsl({hue},{sat}%,{light}%)"


def render_svg(grid=None, outline=None, extent=None, resolution: int = 512, title: str = "",
               legend_size: int = 24) -> str:
    """Deterministic SVG: one filled path per cell, K outline, unit circle, legend."""
    import numpy as np
    if grid is not None:
        extent, resolution, outline = grid.extent, grid.resolution, grid.outline
        if grid.labels.ndim != 2:
            raise ValueError("render_svg needs planar data")
    if extent is None:
        raise ValueError("an extent is needed to draw without cells")
    x0, x1, y0, y1 = extent
    n = resolution
    sx = n / (x1 - x0)
    sy = n / (y1 - y0)

    def px(x, y):
        return ((x - x0) * sx, (y1 - y) * sy)

    legend_w = 180
    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{n + legend_w}" height="{n}" '
        f'viewBox="0 0 {n + legend_w} {n}">',
        f"<title>{_xml(title)}</title>",
        f'<rect x="0" y="0" width="{n + legend_w}" height="{n}" fill="white"/>',
    ]
    sizes = []
    if grid is not None:
        L = grid.labels
        parts.append('<g id="cells" stroke="none" shape-rendering="crispEdges">')
        for lab in range(len(grid.legend)):
            mask = L == lab
            if not mask.any():
                continue
            d = []
            for r in np.flatnonzero(mask.any(axis=1)):
                row = mask[r]
                edges = np.flatnonzero(np.diff(np.concatenate(([0], row.astype(np.int8), [0]))))
                for a, b in zip(edges[0::2], edges[1::2]):
                    d.append(f"M{a} {r}h{b - a}v1h-{b - a}z")
            parts.append(f'<path fill="{_color(grid.legend[lab])}" d="{"".join(d)}"><title>{_xml(grid.legend[lab])}'
                         f"</title></path>")
            sizes.append((-int(mask.sum()), grid.legend[lab]))
        unl = L == -2
        if unl.any():
            parts.append(f'<path fill="black" d="{_mask_path(unl)}"/>')
        parts.append("</g>")
    parts.append('<g id="outline" fill="none" stroke="black" stroke-width="1.5">')
    for poly in outline or []:
        pts = " ".join(f"{a:.3f},{b:.3f}" for a, b in (px(x, y) for x, y in poly))
        parts.append(f'<polygon points="{pts}"/>')
    cx, cy = px(0.0, 0.0)
    parts.append(f'<ellipse cx="{cx:.3f}" cy="{cy:.3f}" rx="{sx:.3f}" ry="{sy:.3f}" stroke-dasharray="4 3"/>')
    parts.append("</g>")
    parts.append(f'<g id="legend" font-family="monospace" font-size="11" transform="translate({n + 8},8)">')
    for k, (_, lab) in enumerate(sorted(sizes)[:legend_size]):
        parts.append(f'<rect x="0" y="{k * 16}" width="12" height="12" fill="{_color(lab)}"/>'
                     f'<text x="18" y="{k * 16 + 10}">{_xml(lab)}</text>')
    parts.append("</g></svg>")
    return "\n".join(parts) + "\n"


def _mask_path(mask) -> str:
    import numpy as np
    d = []
    for r in np.flatnonzero(mask.any(axis=1)):
        edges = np.flatnonzero(np.diff(np.concatenate(([0], mask[r].astype(np.int8), [0]))))
        for a, b in zip(edges[0::2], edges[1::2]):
            d.append(f"M{a} {r}h{b - a}v1h-{b - a}z")
    return "".join(d)


def _xml(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


# ---------------------------------------------------------------------------
# argument handling

def _read_config(path: str) -> dict:
    out = {}
    try:
        with open(path, encoding="utf-8") as fh:
            for n, line in enumerate(fh, 1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise CLIError("invalid config", f"{path}:{n}: expected key=value")
                k, v = line.split("=", 1)
                out[k.strip().replace("-", "_")] = v.strip()
    except OSError as e:
        raise CLIError("invalid config", str(e)) from e
    return out


def _positive(v: str) -> int:
    n = int(v)
    if n <= 0:
        raise argparse.ArgumentTypeError("must be positive")
    return n


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CLIError("invalid parameter", message)


def _build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="iwasawa-cf", description=__doc__,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, help_, preset=True, fmt=("json",)):
        sp = sub.add_parser(name, help=help_)
        if preset:
            sp.add_argument("--preset", required=False)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--format", choices=fmt, default=fmt[0])
        sp.add_argument("--out", help="write output here instead of stdout")
        sp.add_argument("--config", help="key=value file; flags override it")
        return sp

    sp = add("expand", "digits, iterates and convergents of a point", fmt=("json", "csv"))
    sp.add_argument("--x", required=False, help="point literal")
    sp.add_argument("--max-digits", type=_positive, default=64)
    sp.add_argument("--backend", choices=("exact", "float"), default="exact")

    sp = add("freq", "digit frequencies over random orbits", fmt=("json", "csv"))
    sp.add_argument("--samples", type=_positive, default=1000)
    sp.add_argument("--length", type=_positive, default=100)

    sp = add("converge", "convergence statistics", fmt=("json", "csv"))
    sp.add_argument("--samples", type=_positive, default=200)
    sp.add_argument("--length", type=_positive, default=40)
    sp.add_argument("--exact-samples", type=int, default=100)
    sp.add_argument("--tolerance", type=float, default=1e-8)

    sp = add("cylinders", "first-digit cylinder cells as SVG", fmt=("svg", "json"))
    sp.add_argument("--resolution", type=_positive, default=512)
    sp.add_argument("--t-slice", type=float, default=None)

    sp = add("symmetry", "search the modular group for hidden rotations")
    sp.add_argument("--max-len", type=_positive, default=8)
    sp.add_argument("--digit-bound", type=_positive, default=2)
    sp.add_argument("--model", choices=("auto", "2x2", "full"), default="auto")
    sp.add_argument("--mod-q", type=int, default=0, help="also run the mod-q exclusion for x -> -x")

    add("properness", "rad(K) and the properness verdict", fmt=("json", "csv"))

    sp = add("marking", "mark random geodesics (real presets)", fmt=("json", "csv"))
    sp.add_argument("--geodesics", type=_positive, default=10)
    sp.add_argument("--blocks", type=_positive, default=10)
    sp.add_argument("--ensemble", type=_positive, default=10_000)

    sp = add("tail", "tail equivalence of x and M x")
    sp.add_argument("--samples", type=_positive, default=200)
    sp.add_argument("--length", type=_positive, default=80)
    sp.add_argument("--window", type=_positive, default=50)
    sp.add_argument("--max-word", type=_positive, default=6)

    sp = add("skew", "skew-product factorisation of a folded pair", preset=False)
    sp.add_argument("--base", choices=("hurwitz", "nearest_integer_plus", "heisenberg"), default="hurwitz")
    sp.add_argument("--samples", type=_positive, default=1000)

    sp = add("horoballs", "horoball constants and disjointness")
    sp.add_argument("--max-len", type=_positive, default=8)
    sp.add_argument("--digit-bound", type=_positive, default=2)

    sp = add("presets", "the preset catalog with computed verdicts", preset=False, fmt=("json", "csv"))
    sp.add_argument("--search-len", type=int, default=0,
                    help="run a symmetry search of this word length for the C column (0: catalog only)")
    return p


def _parse(argv: Sequence[str]):
    parser = _build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        cfg = _read_config(args.config)
        explicit = {a.split("=", 1)[0].lstrip("-").replace("-", "_") for a in argv if a.startswith("--")}
        sub = parser._subparsers._group_actions[0].choices[args.command]
        types = {a.dest: a.type for a in sub._actions}
        for k, v in cfg.items():
            if k not in types:
                raise CLIError("invalid config", f"unknown key {k!r} for {args.command}")
            if k in explicit:
                continue
            conv = types[k] or str
            try:
                setattr(args, k, conv(v))
            except (ValueError, argparse.ArgumentTypeError) as e:
                raise CLIError("invalid parameter", f"{k}={v}: {e}") from e
    return args


def _preset(args):
    from .lattice import get_preset
    if not getattr(args, "preset", None):
        raise CLIError("invalid parameter", "--preset is required")
    try:
        return get_preset(args.preset)
    except (KeyError, ValueError) as e:
        raise CLIError("unknown preset", f"unknown preset {args.preset!r}") from e


def _header(args, preset_id) -> dict:
    cfg = {k: v for k, v in sorted(vars(args).items()) if k not in ("out", "format", "config")}
    digest = hashlib.sha256(json.dumps(cfg, sort_keys=True, default=str).encode()).hexdigest()[:16]
    return {"preset": preset_id, "seed": args.seed, "version": __version__, "config_hash": digest,
            "command": args.command}


def _jsonable(v):
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    if hasattr(v, "item") and not isinstance(v, (str, bytes)):
        try:
            return _jsonable(v.item())
        except (TypeError, ValueError):
            pass
    if isinstance(v, (str, int, float, bool)) or v is None:
        return v
    return str(v)


def _csv(header: dict, rows: list[dict]) -> str:
    buf = io.StringIO()
    buf.write("# " + json.dumps(header, sort_keys=True) + "\n")
    if rows:
        cols = list(rows[0].keys())
        w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: _jsonable(r.get(k)) for k in cols})
    return buf.getvalue()


# ---------------------------------------------------------------------------
# subcommands

def _cmd_expand(args):
    from .cf import CFAlgorithm, NotInDomain, convergent_word, expand, normalize
    preset = _preset(args)
    if not args.x:
        raise CLIError("invalid parameter", "--x is required")
    x = parse_point(args.x, preset)
    alg = CFAlgorithm(preset, args.backend)
    a0, rep = normalize(alg, x if args.backend == "exact" else x.to_float())
    exp = expand(alg, rep, args.max_digits)
    digits = [format_digit(d, preset) for d in exp.digits]
    conv = []
    if args.backend == "exact":
        for i in range(1, len(exp.digits) + 1):
            p = convergent_word(alg, exp.digits, i)(preset.origin())
            conv.append(format_point(p, preset) if hasattr(p, "z") else "inf")
    body = {"x": args.x, "a0": format_digit(a0, preset), "digits": digits, "terminated": exp.terminated,
            "truncated": exp.truncated, "ambiguous": exp.ambiguous, "convergents": conv, "warnings": exp.warnings}
    rows = [{"index": i + 1, "digit": d, "convergent": conv[i] if i < len(conv) else ""} for i, d in enumerate(digits)]
    return body, rows


def _cmd_freq(args):
    from .experiments import ExperimentConfig, digit_frequency
    preset = _preset(args)
    rep = digit_frequency(ExperimentConfig(preset.name, args.samples, args.length, args.seed))
    rows = [{"digit": k, "count": v} for k, v in rep.tallies.items()]
    return rep.to_dict(), rows


def _cmd_converge(args):
    from .experiments import ExperimentConfig, convergence_stats
    preset = _preset(args)
    rep = convergence_stats(ExperimentConfig(preset.name, args.samples, args.length, args.seed, args.tolerance),
                            exact_samples=args.exact_samples)
    q = rep.tallies
    rows = [{"index": i + 1, "q1": q["q1"][i], "q50": q["q50"][i], "q99": q["q99"][i]} for i in range(len(q["q50"]))]
    return rep.to_dict(), rows


def _cmd_cylinders(args):
    from .experiments import cylinder_cells
    preset = _preset(args)
    try:
        grid = cylinder_cells(preset, args.resolution, t_slice=args.t_slice)
    except ValueError as e:
        raise CLIError("invalid parameter", str(e)) from e
    body = {"unlabeled_fraction": grid.unlabeled_fraction, "cells": len(grid.legend), "inside_pixels": grid.inside,
            "extent": list(grid.extent), "resolution": grid.resolution}
    return body, grid


def _cmd_symmetry(args):
    from .modular import find_central_symmetries, mod_q_symmetry_search
    preset = _preset(args)
    try:
        rep = find_central_symmetries(preset, args.max_len, args.digit_bound, args.model)
    except ValueError as e:
        raise CLIError("invalid parameter", str(e)) from e
    body = {"summary": rep.summary(), "found": rep.found, "model": rep.model, "ball_size": rep.ball_size,
            "rotations": [{"multiplier": str(s.multiplier), "word": str(s.word), "length": len(s.word),
                           "dilation": s.dilation} for s in rep.rotations]}
    if args.mod_q:
        body["mod_q"] = _jsonable(mod_q_symmetry_search(preset, args.mod_q))
    return body, None


def _cmd_properness(args):
    from .lattice import all_presets, properness_check
    presets = [_preset(args)] if getattr(args, "preset", None) else all_presets()
    rows = []
    for p in presets:
        ok, margin = properness_check(p)
        rows.append({"preset": p.name, "rad": float(p.radius4()) ** 0.25, "rad4": str(p.radius4()),
                     "proper": ok, "catalog_proper": p.table_proper, "agrees": ok == p.table_proper})
    return {"presets": rows}, rows


def _cmd_marking(args):
    import random
    from .geodesic import calibrate_constants, compute_marking, random_markable_geodesic, verify_marking_properties
    preset = _preset(args)
    if preset.heisenberg or preset.params.n != 1:
        raise CLIError("invalid parameter", f"marking needs a one-dimensional real preset, not {preset.name}")
    try:
        consts = calibrate_constants(preset, ensemble=args.ensemble, seed=args.seed)
    except ValueError as e:
        raise CLIError("invalid parameter", str(e)) from e
    rng = random.Random(args.seed)
    out, rows = [], []
    for g_i in range(args.geodesics):
        g, plus = random_markable_geodesic(preset, consts, rng)
        mk = compute_marking(preset, g, plus, consts, max_blocks=args.blocks)
        rep = verify_marking_properties(mk, preset)
        rep.pop("intersection_detail", None)
        out.append({"geodesic": g_i, "plus": str(plus), "indices": mk.indices, "times": mk.times,
                    "digits": [format_digit(d, preset) for d in mk.digits[:mk.indices[-1]]], "report": rep})
        for j, (i, t) in enumerate(zip(mk.indices, mk.times)):
            rows.append({"geodesic": g_i, "j": j, "index": i, "time": t})
    body = {"constants": vars(consts), "geodesics": out}
    return body, rows


def _cmd_tail(args):
    from .experiments import ExperimentConfig, tail_experiment
    preset = _preset(args)
    rep = tail_experiment(ExperimentConfig(preset.name, args.samples, args.length, args.seed, backend="exact"),
                          window=args.window, max_word=args.max_word)
    return rep.to_dict(), None


def _cmd_skew(args):
    from .experiments import skew_product_check
    rep = skew_product_check(args.base, args.samples, args.seed)
    return rep.to_dict(), None


def _cmd_horoballs(args):
    from .experiments import horoball_disjointness_probe
    preset = _preset(args)
    rep = horoball_disjointness_probe(preset, args.max_len, args.digit_bound)
    return rep.to_dict(), None


def _cmd_presets(args):
    from .lattice import all_presets, properness_check
    rows = []
    for p in all_presets():
        ok, _ = properness_check(p)
        c = "complete" if p.table_complete else "incomplete"
        row = {"preset": p.name, "space": f"X^{p.params.n}_{p.params.kind.tag}", "algebra": p.algebra,
               "inversion": p.inversion.tag, "rad": float(p.radius4()) ** 0.25, "P": "Y" if ok else "N",
               "P_catalog": "Y" if p.table_proper else "N", "C_catalog": "Y" if p.table_complete else "N",
               "C": f"catalog: {c}"}
        bdim = p.params.kind.dim * p.params.n + p.params.kind.dim - 1
        if args.search_len and bdim > 3:
            row["C"] = f"catalog: {c}; search skipped (boundary dimension {bdim})"
        elif args.search_len:
            from .modular import find_central_symmetries
            try:
                rep = find_central_symmetries(p, args.search_len, 1)
                row["C"] = ("symmetries found" if rep.found
                            else f"none found up to length {args.search_len}")
            except (ValueError, KeyError) as e:
                row["C"] = f"search unavailable: {e}"
        rows.append(row)
    return {"presets": rows}, rows


COMMANDS = {
    "expand": _cmd_expand, "freq": _cmd_freq, "converge": _cmd_converge, "cylinders": _cmd_cylinders,
    "symmetry": _cmd_symmetry, "properness": _cmd_properness, "marking": _cmd_marking, "tail": _cmd_tail,
    "skew": _cmd_skew, "horoballs": _cmd_horoballs, "presets": _cmd_presets,
}


def _emit(text: str, path: str | None, stdout) -> None:
    if path:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        stdout.write(text)


def run(argv: Sequence[str] | None = None, stdout=None, stderr=None) -> int:
    """Run one subcommand; returns the exit status."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = _parse(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_USAGE
    except CLIError as e:
        stderr.write(json.dumps({"error": e.kind, "message": str(e)}) + "\n")
        return EXIT_USAGE
    try:
        body, extra = COMMANDS[args.command](args)
        header = _header(args, getattr(args, "preset", None) or getattr(args, "base", None))
        if args.format == "svg":
            title = json.dumps(header, sort_keys=True)
            _emit(render_svg(extra, title=title), args.out, stdout)
            stderr.write(json.dumps(_jsonable({**header, **body}), sort_keys=True) + "\n")
        elif args.format == "csv":
            _emit(_csv(header, extra or []), args.out, stdout)
        else:
            _emit(json.dumps(_jsonable({**header, **body}), sort_keys=True, indent=1) + "\n", args.out, stdout)
        return EXIT_OK
    except CLIError as e:
        stderr.write(json.dumps({"error": e.kind, "message": str(e)}) + "\n")
        return EXIT_ERROR
    except (ValueError, TypeError) as e:
        stderr.write(json.dumps({"error": "invalid parameter", "message": str(e)}) + "\n")
        return EXIT_ERROR


def main() -> None:
    sys.exit(run())
