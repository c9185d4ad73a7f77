"""Reading and writing datasets.

JSON is the canonical format and holds everything in one document::

    {"region": [[x, y], ...],
     "background_lines": [[[x1, y1], [x2, y2]], ...],
     "background_points": [{"x": .., "y": .., "tag": "SBI", "exempt": false}, ...],
     "line_batches": [{"annotator": "w1", "attributes": {}, "opinions": [[[x1, y1], [x2, y2]], ...]}],
     "point_batches": [{"annotator": "u1", "opinions": [{"x": .., "y": .., "tag": "SBI"}, ...]}],
     "constraints": {"D1": 4, "D2": 3, "L": 10, "k_star": 2, ...},
     "total_facilities": 3}

CSV holds one opinion table only (``worker_id,x1,y1,x2,y2`` for lines,
``worker_id,tag,x,y[,location_ok]`` for points); the region, background and
constraints then come from a JSON scene file.  Line rows may also be
written as ``w01, (3,4), (9,4)``.
"""
from __future__ import annotations

import csv
import io
import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

from .geometry import ConvexRegion, Point, Segment, point_in_region
from .model import (
    Annotator,
    BackgroundInfrastructure,
    ConstraintConfig,
    Facility,
    LineOpinion,
    LineOpinionBatch,
    PointOpinion,
    PointOpinionBatch,
)

KINDS = ("lines", "points")


class DatasetError(ValueError):
    """A file that cannot be turned into a dataset."""


@dataclass
class Dataset:
    kind: str
    batches: list
    background: BackgroundInfrastructure
    constraints: dict[str, Any] = field(default_factory=dict)
    total_facilities: Optional[int] = None
    annotators: dict[str, Annotator] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list, compare=False)

    def config(self, **overrides) -> ConstraintConfig:
        """Constraints from the file with non-None ``overrides`` on top."""
        data = dict(self.constraints)
        for key, value in overrides.items():
            if value is not None:
                data[key] = value
        try:
            return ConstraintConfig.from_dict(data)
        except TypeError as exc:
            raise DatasetError(f"incomplete constraints: {exc}") from None


def _num(value, where: str) -> float:
    try:
        v = float(value)
    except (TypeError, ValueError):
        raise DatasetError(f"{where}: {value!r} is not a number") from None
    if not math.isfinite(v):
        raise DatasetError(f"{where}: coordinate must be finite")
    return v


def _point(value, where: str) -> Point:
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise DatasetError(f"{where}: expected [x, y]")
    return Point(_num(value[0], where), _num(value[1], where))


def _segment(value, where: str) -> Optional[Segment]:
    """None for a degenerate segment."""
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise DatasetError(f"{where}: expected [[x1, y1], [x2, y2]]")
    a, b = _point(value[0], where), _point(value[1], where)
    try:
        return Segment(a, b)
    except ValueError:
        return None


def _region(value, where="region") -> ConvexRegion:
    if not isinstance(value, list):
        raise DatasetError(f"{where}: expected a list of [x, y] vertices")
    try:
        return ConvexRegion(tuple(_point(v, f"{where}[{i}]") for i, v in enumerate(value)))
    except ValueError as exc:
        if isinstance(exc, DatasetError):
            raise
        raise DatasetError(f"{where}: {exc}") from None


def _scene(doc: dict, where: str) -> tuple[BackgroundInfrastructure, dict]:
    if "region" not in doc:
        raise DatasetError(f"{where}: missing 'region'")
    region = _region(doc["region"])
    lines = []
    for i, v in enumerate(doc.get("background_lines", [])):
        s = _segment(v, f"background_lines[{i}]")
        if s is None:
            raise DatasetError(f"background_lines[{i}]: degenerate segment")
        lines.append(s)
    points = []
    for i, v in enumerate(doc.get("background_points", [])):
        w = f"background_points[{i}]"
        if not isinstance(v, dict) or "tag" not in v:
            raise DatasetError(f"{w}: expected an object with x, y and tag")
        points.append(Facility(Point(_num(v.get("x"), w), _num(v.get("y"), w)), str(v["tag"]),
                               bool(v.get("exempt", False))))
    try:
        background = BackgroundInfrastructure(region, tuple(lines), tuple(points))
    except ValueError as exc:
        raise DatasetError(str(exc)) from None
    constraints = doc.get("constraints", {})
    if not isinstance(constraints, dict):
        raise DatasetError(f"{where}: 'constraints' must be an object")
    return background, dict(constraints)


def _check_sizes(batches, constraints, warnings):
    k = constraints.get("k_star")
    if isinstance(k, int):
        for b in batches:
            if len(b.opinions) != k:
                warnings.append(f"worker {b.annotator}: {len(b.opinions)} opinion(s), expected k_star={k}")


def _flag_outside(batches, region, warnings):
    for b in batches:
        for o in b.opinions:
            pts = (o.segment.a, o.segment.b) if isinstance(o, LineOpinion) else (o.point,)
            if not all(point_in_region(p, region) for p in pts):
                warnings.append(f"opinion {o.id}: outside the region (left to the boundary stage)")


def _load_json(path: Path, kind: Optional[str]) -> Dataset:
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise DatasetError(f"{path}: line {exc.lineno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise DatasetError(f"{path}: top level must be an object")
    background, constraints = _scene(doc, str(path))
    if kind is None:
        if "line_batches" in doc:
            kind = "lines"
        elif "point_batches" in doc:
            kind = "points"
        else:
            raise DatasetError(f"{path}: no line_batches or point_batches")
    key = "line_batches" if kind == "lines" else "point_batches"
    warnings: list[str] = []
    batches, annotators = [], {}
    for i, raw in enumerate(doc.get(key, [])):
        w = f"{key}[{i}]"
        if not isinstance(raw, dict) or not raw.get("annotator"):
            raise DatasetError(f"{w}: expected an object with a non-empty 'annotator'")
        who = str(raw["annotator"])
        if who in annotators:
            raise DatasetError(f"{w}: duplicate annotator {who!r}")
        annotators[who] = Annotator(who, dict(raw.get("attributes", {})))
        ops = []
        for j, v in enumerate(raw.get("opinions", [])):
            wj = f"{w}.opinions[{j}]"
            if kind == "lines":
                s = _segment(v, wj)
                if s is None:
                    warnings.append(f"{wj}: degenerate segment")
                    continue
                ops.append(LineOpinion(who, j, s))
            else:
                if not isinstance(v, dict) or "tag" not in v:
                    raise DatasetError(f"{wj}: expected an object with x, y and tag")
                ops.append(PointOpinion(who, j, Point(_num(v.get("x"), wj), _num(v.get("y"), wj)), str(v["tag"]),
                                        bool(v.get("location_ok", True))))
        cls = LineOpinionBatch if kind == "lines" else PointOpinionBatch
        batches.append(cls(who, tuple(ops)))
    total = doc.get("total_facilities")
    if total is not None and (not isinstance(total, int) or total < 1):
        raise DatasetError(f"{path}: total_facilities must be a positive integer")
    _check_sizes(batches, constraints, warnings)
    _flag_outside(batches, background.region, warnings)
    return Dataset(kind, batches, background, constraints, total, annotators, warnings)


_PARENS = re.compile(r"[()\[\]]")


def _load_csv(path: Path, kind: str, scene: Optional[Path]) -> Dataset:
    if kind not in KINDS:
        raise DatasetError("CSV input needs kind 'lines' or 'points'")
    if scene is None:
        raise DatasetError("CSV input needs a JSON scene file for region, background and constraints")
    base = _load_json(scene, kind)
    warnings: list[str] = []
    grouped: dict[str, list] = {}
    with path.open(newline="") as fh:
        for lineno, row in enumerate(csv.reader(io.StringIO(_PARENS.sub("", fh.read()))), start=1):
            row = [c.strip() for c in row if c.strip() != ""]
            if not row or row[0].startswith("#"):
                continue
            if lineno == 1 and row[0].lower() in ("worker_id", "worker", "annotator"):
                continue
            where = f"{path.name}: line {lineno}"
            who = row[0]
            ops = grouped.setdefault(who, [])
            if kind == "lines":
                if len(row) != 5:
                    raise DatasetError(f"{where}: expected worker_id,x1,y1,x2,y2")
                x1, y1, x2, y2 = (_num(v, where) for v in row[1:])
                seg = _segment([[x1, y1], [x2, y2]], where)
                if seg is None:
                    warnings.append(f"{where}: degenerate segment")
                    continue
                ops.append(seg)
            else:
                if len(row) not in (4, 5):
                    raise DatasetError(f"{where}: expected worker_id,tag,x,y[,location_ok]")
                ok = True
                if len(row) == 5:
                    if row[4].lower() not in ("true", "false", "1", "0", "yes", "no"):
                        raise DatasetError(f"{where}: location_ok must be true or false")
                    ok = row[4].lower() in ("true", "1", "yes")
                ops.append((Point(_num(row[2], where), _num(row[3], where)), row[1], ok))
    batches = []
    for who, ops in grouped.items():
        if kind == "lines":
            batches.append(LineOpinionBatch.from_segments(who, ops))
        else:
            batches.append(PointOpinionBatch(who, tuple(PointOpinion(who, i, p, t, ok)
                                                        for i, (p, t, ok) in enumerate(ops))))
    _check_sizes(batches, base.constraints, warnings)
    _flag_outside(batches, base.background.region, warnings)
    return Dataset(kind, batches, base.background, base.constraints, base.total_facilities,
                   {w: Annotator(w) for w in grouped}, warnings)


def load_dataset(path, kind: Optional[str] = None, scene=None) -> Dataset:
    """Load a JSON document or a CSV opinion table (plus JSON ``scene``).

    Fatal problems raise DatasetError; per-row problems (degenerate
    segments, opinions outside the region, batch sizes) are collected in
    ``Dataset.warnings``.
    """
    path = Path(path)
    if kind is not None and kind not in KINDS:
        raise DatasetError(f"kind must be one of {KINDS}")
    try:
        if path.suffix.lower() == ".csv":
            return _load_csv(path, kind, Path(scene) if scene else None)
        return _load_json(path, kind)
    except OSError as exc:
        raise DatasetError(f"{path}: {exc.strerror or exc}") from None


def _scene_doc(ds: Dataset) -> dict:
    bg = ds.background
    doc: dict[str, Any] = {
        "region": [[v.x, v.y] for v in bg.region.vertices],
        "background_lines": [[[s.a.x, s.a.y], [s.b.x, s.b.y]] for s in bg.segments],
        "background_points": [{"x": f.point.x, "y": f.point.y, "tag": f.tag, "exempt": f.exempt}
                              for f in bg.facilities],
        "constraints": dict(ds.constraints),
    }
    if ds.total_facilities is not None:
        doc["total_facilities"] = ds.total_facilities
    return doc


def dataset_to_dict(ds: Dataset) -> dict:
    doc = _scene_doc(ds)
    batches = []
    for b in ds.batches:
        entry: dict[str, Any] = {"annotator": b.annotator}
        attrs = ds.annotators.get(b.annotator)
        if attrs is not None and attrs.attributes:
            entry["attributes"] = dict(attrs.attributes)
        if ds.kind == "lines":
            entry["opinions"] = [[[o.segment.a.x, o.segment.a.y], [o.segment.b.x, o.segment.b.y]]
                                 for o in b.opinions]
        else:
            entry["opinions"] = [{"x": o.point.x, "y": o.point.y, "tag": o.tag, "location_ok": o.location_ok}
                                 for o in b.opinions]
        batches.append(entry)
    doc["line_batches" if ds.kind == "lines" else "point_batches"] = batches
    return doc


def _dump(doc: dict) -> str:
    """JSON with one list item per line."""
    parts = []
    for key, value in doc.items():
        head = f"  {json.dumps(key)}: "
        if isinstance(value, list) and value:
            items = ",\n".join(f"    {json.dumps(v)}" for v in value)
            parts.append(f"{head}[\n{items}\n  ]")
        else:
            parts.append(head + json.dumps(value))
    return "{\n" + ",\n".join(parts) + "\n}\n"


def write_dataset(path, ds: Dataset) -> None:
    """Write JSON, or a CSV opinion table when ``path`` ends in .csv."""
    path = Path(path)
    if path.suffix.lower() != ".csv":
        path.write_text(_dump(dataset_to_dict(ds)))
        return
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if ds.kind == "lines":
            w.writerow(["worker_id", "x1", "y1", "x2", "y2"])
            for b in ds.batches:
                for o in b.opinions:
                    w.writerow([b.annotator, *(repr(v) for v in o.segment.coords())])
        else:
            w.writerow(["worker_id", "tag", "x", "y", "location_ok"])
            for b in ds.batches:
                for o in b.opinions:
                    w.writerow([b.annotator, o.tag, repr(o.point.x), repr(o.point.y), str(o.location_ok).lower()])


def write_scene(path, ds: Dataset) -> None:
    """Write only region, background and constraints (a scene for CSV input)."""
    Path(path).write_text(_dump(_scene_doc(ds)))
