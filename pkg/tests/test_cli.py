import io
import json
import random
import xml.etree.ElementTree as ET
from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from iwasawa_cf.cli import format_point, parse_point, render_svg, run
from iwasawa_cf.experiments import cylinder_cells
from iwasawa_cf.lattice import get_preset


def call(*argv):
    out, err = io.StringIO(), io.StringIO()
    rc = run(list(argv), stdout=out, stderr=err)
    return rc, out.getvalue(), err.getvalue()


def test_expand_nearest_integer():
    rc, out, _ = call("expand", "--preset", "nearest_integer_plus", "--x", "5/12")
    body = json.loads(out)
    assert rc == 0 and body["digits"] == ["2", "3", "-2"] and body["terminated"]


def test_expand_hurwitz():
    rc, out, _ = call("expand", "--preset", "hurwitz", "--x", "2/5+1/5i")
    assert rc == 0 and json.loads(out)["digits"] == ["2-i"]


def test_unknown_preset():
    rc, out, err = call("expand", "--preset", "bogus", "--x", "1/3")
    assert rc != 0 and out == "" and json.loads(err)["error"] == "unknown preset"


def test_malformed_literal():
    rc, _, err = call("expand", "--preset", "hurwitz", "--x", "2/5+q")
    assert rc != 0 and json.loads(err)["error"] == "malformed point literal"


def test_invalid_parameter_range():
    rc, _, err = call("expand", "--preset", "hurwitz", "--x", "1/3", "--max-digits", "0")
    assert rc != 0 and json.loads(err)["error"] == "invalid parameter"


def test_header_fields():
    _, out, _ = call("expand", "--preset", "hurwitz", "--x", "1/3", "--seed", "4")
    body = json.loads(out)
    assert body["preset"] == "hurwitz" and body["seed"] == 4
    assert body["version"] and len(body["config_hash"]) == 16


def test_csv_header_carries_reproducibility_record():
    rc, out, _ = call("properness", "--preset", "hurwitz", "--format", "csv")
    first = out.splitlines()[0]
    assert rc == 0 and first.startswith("# ")
    assert json.loads(first[2:])["preset"] == "hurwitz"


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment\npreset = nearest_integer_plus\nx = 5/12\nmax_digits = 1\n")
    _, out, _ = call("expand", "--config", str(cfg))
    assert json.loads(out)["digits"] == ["2"]
    _, out, _ = call("expand", "--config", str(cfg), "--max-digits", "10")
    assert json.loads(out)["digits"] == ["2", "3", "-2"]
    cfg.write_text("colour = red\n")
    rc, _, err = call("expand", "--config", str(cfg))
    assert rc != 0 and "error" in json.loads(err)


def _fractions():
    return st.fractions(min_value=-20, max_value=20, max_denominator=500)


@pytest.mark.parametrize("name", ["nearest_integer_plus", "hurwitz", "heisenberg", "hurwitz_quaternionic",
                                  "heisenberg_quaternionic", "octonionic", "real3d(3)"])
@settings(max_examples=25, deadline=None)
@given(data=st.data())
def test_literals_round_trip(name, data):
    preset = get_preset(name)
    o = preset.origin()
    z = data.draw(st.lists(_fractions(), min_size=len(preset.z_flat(o)), max_size=len(preset.z_flat(o))))
    t = data.draw(st.lists(_fractions(), min_size=len(preset.t_flat(o)), max_size=len(preset.t_flat(o))))
    x = preset.make_point(z, t)
    assert parse_point(format_point(x, preset), preset) == x


def test_sample_literals_round_trip():
    rng = random.Random(0)
    for name in ("rosen(5)", "hurwitz_hexagonal"):
        preset = get_preset(name)
        for _ in range(10):
            x = preset.sample(rng, "exact", 40)
            assert parse_point(format_point(x, preset), preset) == x


def test_empty_svg_has_outline_and_circle():
    grid = cylinder_cells("hurwitz", 16)
    doc = render_svg(outline=grid.outline, extent=grid.extent, resolution=64)
    root = ET.fromstring(doc)
    tags = [el.tag.split("}")[-1] for el in root.iter()]
    assert "ellipse" in tags or "circle" in tags
    assert "polygon" in tags or "polyline" in tags or "path" in tags


def test_svg_is_byte_deterministic():
    a = call("cylinders", "--preset", "hurwitz", "--resolution", "96", "--format", "svg")[1]
    b = call("cylinders", "--preset", "hurwitz", "--resolution", "96", "--format", "svg")[1]
    assert a == b and a.startswith("<")
    ET.fromstring(a)


def test_svg_refuses_three_dimensional_data():
    rc, _, err = call("cylinders", "--preset", "heisenberg", "--resolution", "16", "--format", "svg")
    assert rc != 0 and json.loads(err)["error"] == "invalid parameter"
