import csv
import json
import math

import numpy as np
import pytest

from weingarten_graphs import io
from weingarten_graphs.constructions import build_annulus, build_rotational_csc


@pytest.fixture(scope="module")
def sphere():
    return build_rotational_csc(3, 1, 12)


def test_fmt_and_nonfinite():
    assert io.fmt(0.1) == "0.10000000000000001"
    assert io.fmt(math.inf) == "inf" and io.fmt(-math.inf) == "-inf" and io.fmt(math.nan) == "nan"
    text = io.dumps({"a": math.inf, "b": [1.0, -math.inf], "c": np.float64(1 / 3)})
    doc = json.loads(text)
    assert doc == {"a": "inf", "b": [1.0, "-inf"], "c": 1 / 3}
    assert "0.33333333333333331" in text
    assert text.endswith("\n")


def test_profile_csv_columns(sphere, tmp_path):
    paths = io.export_profiles(sphere, str(tmp_path / "sph"))
    assert [p.rsplit("/", 1)[-1] for p in paths] == ["sph_piece0.csv", "sph_piece1.csv"]
    rows = [list(csv.reader(open(p))) for p in paths]
    assert tuple(rows[0][0]) == io.PROFILE_COLUMNS
    lo = np.array([[float(x) for x in r] for r in rows[0][1:]])
    hi = np.array([[float(x) for x in r] for r in rows[1][1:]])
    top = sphere.symmetry_planes[0]
    # mirrored heights sum to twice the equator height, sample by sample
    np.testing.assert_allclose(lo[:, 3] + hi[:, 3], 2 * top, atol=1e-15)
    np.testing.assert_array_equal(lo[:, 0], hi[:, 0])
    # round-trip to 17 digits
    np.testing.assert_array_equal(lo[:, 1], sphere.pieces[0].profile.rho)


def test_model_json(sphere, tmp_path):
    from weingarten_graphs.verify import verify_model
    path = tmp_path / "m.json"
    io.write_model_json(sphere, path, verify_model(sphere))
    doc = json.loads(path.read_text())
    assert doc["format_version"] == 1
    assert doc["topology"] == "Sphere"
    assert doc["meta"]["closed_form"] is not None
    assert doc["verification"]["passed"] is True
    assert len(doc["pieces"]) == 2 and doc["pieces"][1]["reflected"]
    first = path.read_text()
    io.write_model_json(sphere, path, verify_model(sphere))
    assert path.read_text() == first


def test_periodic_obj(tmp_path):
    m = build_annulus(3, 1, 12, 0.2)
    path = tmp_path / "a.obj"
    io.write_revolution_obj(m, path, segments=8)
    text = path.read_text().splitlines()
    assert text[0] == "# topology PeriodicAnnulus"
    assert text[1] == f"# period {io.fmt(m.period)}"
    assert any(line.startswith("# repeat count 1") for line in text)
    nv = sum(1 for line in text if line.startswith("v "))
    faces = [list(map(int, line.split()[1:])) for line in text if line.startswith("f ")]
    assert faces and max(max(f) for f in faces) <= nv and min(min(f) for f in faces) >= 1
