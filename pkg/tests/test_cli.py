import io
import json
import re
import xml.etree.ElementTree as ET

import pytest

from crowdplan import fixtures
from crowdplan.cli import run
from crowdplan.fixtures import fixture_path

CANAL = str(fixture_path("canal"))
ATM1 = str(fixture_path("ATM1"))
ATM2 = str(fixture_path("ATM2"))
NUMBER = re.compile(r"-?\d+(?:\.\d+)?")


def call(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


@pytest.fixture
def malformed(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"region": [[0, 0], [1, 0], [1, 1]], "line_batches": [{"annotator": "a", "opinions": [[[0, 0]]]}]}')
    return str(path)


@pytest.mark.parametrize("argv,code", [
    (["validate", ATM1], 0),
    (["validate", CANAL], 0),
    (["aggregate-lines", CANAL], 0),
    (["aggregate-points", ATM1], 0),
    (["allocate", ATM1], 0),
    (["allocate", "--counts", "SBI=51,AXIS=24,ICICI=21,BOB=6,HDFC=6,IDBI=3",
      "--existing", "SBI=1,AXIS=6,ICICI=2,BOB=1,HDFC=6,IDBI=2", "--total", "3"], 0),
    (["aggregate-lines", CANAL, "--d2", "30"], 1),
    (["aggregate-lines", CANAL, "--k-star", "9"], 1),
    (["aggregate-points", ATM1, "--total", "500"], 1),
    (["allocate", "--counts", "A=1", "--total", "2"], 1),
    (["aggregate-lines", ATM1], 2),
    (["aggregate-lines", CANAL, "--d1", "-1"], 2),
    (["allocate", "--counts", "A=x", "--total", "2"], 2),
    (["allocate", "--counts", "A=2"], 2),
    (["validate", "/nonexistent.json"], 2),
    (["frobnicate"], 2),
    (["validate", CANAL, "--bogus"], 2),
])
def test_exit_codes(argv, code):
    assert call(*argv)[0] == code


@pytest.mark.parametrize("command", ["validate", "aggregate-lines", "render"])
def test_malformed_input_exits_2(malformed, command):
    code, _, err = call(command, malformed)
    assert code == 2 and "error" in err


def test_infeasible_diagnostic_names_the_cluster():
    code, _, err = call("aggregate-lines", CANAL, "--d2", "30")
    assert code == 1 and "cluster" in err


def test_validate_table():
    code, out, _ = call("validate", ATM1)
    assert code == 0
    row = next(line for line in out.splitlines() if line.startswith("atm1.json"))
    assert row.split() == ["atm1.json", "111", "6", "5.4100"]


def test_allocate_table():
    _, out, _ = call("allocate", ATM1)
    assert "AXIS -> ICICI" in out
    rows = {line.split()[0]: line.split() for line in out.splitlines()[2:8]}
    assert rows["SBI"][-1] == "2" and rows["ICICI"][-1] == "1" and rows["AXIS"][-1] == "0"


@pytest.mark.parametrize("argv", [
    ["validate", ATM1], ["validate", CANAL], ["aggregate-lines", CANAL],
    ["aggregate-points", ATM1], ["aggregate-points", ATM2], ["allocate", ATM1],
])
def test_json_holds_every_printed_number(argv):
    _, text, _ = call(*argv)
    _, doc, _ = call(*argv, "--format", "json")
    data = json.loads(doc)
    assert isinstance(data, dict)
    have = {round(float(v), 4) for v in NUMBER.findall(doc)}
    want = {round(float(v), 4) for v in NUMBER.findall(text)}
    assert want <= have


def test_lines_json_fields():
    _, doc, _ = call("aggregate-lines", CANAL, "--format", "json")
    data = json.loads(doc)
    assert data["effective_D2"] == 3 and data["k_star"] == 2
    assert sorted(r["opinion"] for r in data["representatives"]) == ["w4#0", "w4#1"]
    assert data["ingested"] == data["survivors"] + data["removed"]


def test_flags_override_file_values():
    _, doc, _ = call("aggregate-lines", CANAL, "--format", "json", "--relaxation", "geometric-decay", "--d2", "30")
    data = json.loads(doc)
    assert data["configured_threshold"] == 30 and data["effective_threshold"] < 30 and data["relaxations"] > 0


def test_render_is_well_formed(tmp_path):
    path = tmp_path / "canal.svg"
    assert call("render", CANAL, "-o", str(path))[0] == 0
    root = ET.fromstring(path.read_text())
    ns = {"s": "http://www.w3.org/2000/svg"}
    groups = {g.get("id"): g for g in root.findall("s:g", ns)}
    assert len(groups["background"].findall("s:line", ns)) == 3
    opinions = groups["opinions"].findall("s:line", ns)
    assert len(opinions) == 12 and sum(o.get("class") == "removed" for o in opinions) == 6
    assert len(groups["consensus"].findall("s:line", ns)) == 2


def test_render_points_and_infeasible(tmp_path):
    code, svg, _ = call("render", ATM1)
    assert code == 0 and len(ET.fromstring(svg).findall(".//{http://www.w3.org/2000/svg}circle")) > 111
    code, svg, err = call("render", CANAL, "--d2", "30")
    assert code == 0 and "no consensus" in err
    assert ET.fromstring(svg).find("{http://www.w3.org/2000/svg}g[@id='consensus']") is not None


def test_render_empty_scene_has_only_region():
    from crowdplan.svg import render_scene
    _, bg, _ = fixtures.canal_scene()
    empty = type(bg)(bg.region)
    root = ET.fromstring(render_scene(empty))
    shapes = [e for e in root.iter() if e.tag.split("}")[1] in ("line", "circle", "polyline")]
    assert [e.tag.split("}")[1] for e in shapes] == ["polyline"]


@pytest.mark.parametrize("argv", [
    ["aggregate-lines", CANAL, "--format", "json"], ["aggregate-points", ATM2, "--format", "json"], ["render", CANAL],
])
def test_byte_identical_across_runs(tmp_path, argv):
    a, b = tmp_path / "a", tmp_path / "b"
    call(*argv, "-o", str(a))
    call(*argv, "-o", str(b))
    assert a.read_bytes() == b.read_bytes() and a.stat().st_size > 0


def test_csv_input_through_cli(tmp_path):
    from crowdplan.dataio import load_dataset, write_dataset, write_scene
    ds = load_dataset(CANAL)
    write_dataset(tmp_path / "ops.csv", ds)
    write_scene(tmp_path / "scene.json", ds)
    _, via_csv, _ = call("aggregate-lines", str(tmp_path / "ops.csv"), "--kind", "lines",
                         "--scene", str(tmp_path / "scene.json"))
    _, via_json, _ = call("aggregate-lines", CANAL)
    assert via_csv == via_json
