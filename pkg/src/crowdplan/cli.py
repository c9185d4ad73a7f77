"""Command line driver: validate, aggregate-lines, aggregate-points, allocate, render.

Exit codes: 0 success, 1 constraints cannot be met, 2 bad input or usage.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import lines, points
from .dataio import Dataset, DatasetError, load_dataset
from .geometry import Point, Segment
from .model import ConsensusError, ConstraintConfig, Consensus, validate_dataset
from .svg import render_scene


def _r(v: float) -> float:
    """Round for reports so text and JSON carry the same value."""
    return round(float(v), 4)


def _f(v) -> str:
    return str(v) if isinstance(v, int) and not isinstance(v, bool) else f"{float(v):.4f}"


def _table(headers: Sequence[str], rows: Sequence[Sequence]) -> str:
    """Plain-text table; numbers right-aligned, text left-aligned."""
    numeric = [all(not isinstance(r[i], str) for r in rows) if rows else False for i in range(len(headers))]
    cells = [list(headers)] + [[c if isinstance(c, str) else _f(c) for c in row] for row in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(headers))]
    out = []
    for k, row in enumerate(cells):
        line = "  ".join(c.rjust(w) if numeric[i] else c.ljust(w) for i, (c, w) in enumerate(zip(row, widths)))
        out.append(line.rstrip())
        if k == 0:
            out.append("  ".join("-" * w for w in widths))
    return "\n".join(out)


# --- reports ---------------------------------------------------------------

def validation_report(ds: Dataset, config: ConstraintConfig, name: str) -> dict:
    rep = validate_dataset(ds.batches, ds.background, config)
    return {
        "report": "validation",
        "dataset": name,
        "kind": ds.kind,
        "proposed": rep.total_opinions,
        "violating": len(rep.violating),
        "error_rate": rep.error_rate,
        "violations": {k: {"count": len(v), "opinions": list(v)} for k, v in rep.violations.items()},
        "warnings": list(ds.warnings),
    }


def _validation_text(r: dict) -> str:
    out = [_table(["Dataset", "Proposed", "Violating", "Error (%)"],
                  [[r["dataset"], r["proposed"], r["violating"], float(r["error_rate"])]]), ""]
    out.append(_table(["Constraint", "Violations"], [[k, v["count"]] for k, v in r["violations"].items()]))
    out.extend(_warning_lines(r))
    return "\n".join(out)


def allocation_report(result: points.AllocationResult, counts: dict, existing: dict, total: int) -> dict:
    return {
        "report": "allocation",
        "total": total,
        "providers": [{"provider": p, "proposed": counts[p], "existing": existing.get(p, 0),
                       "base": result.base.get(p, 0), "allocated": result.allocation.get(p, 0)}
                      for p in counts],
        "allocation": dict(result.allocation),
        "swaps": [list(s) for s in result.swaps],
        "rationale": list(result.rationale),
    }


def _allocation_text(r: dict) -> str:
    out = [_table(["Provider", "Proposed", "Existing", "Base", "Allocated"],
                  [[p["provider"], p["proposed"], p["existing"], p["base"], p["allocated"]]
                   for p in r["providers"]])]
    out.append(f"Total facilities: {r['total']}")
    if r["swaps"]:
        out.append("Swaps: " + ", ".join(f"{a} -> {b}" for a, b in r["swaps"]))
    out.append("Rationale:")
    out.extend(f"  {line}" for line in r["rationale"])
    return "\n".join(out)


def consensus_report(result: Consensus, ds: Dataset, config: ConstraintConfig) -> dict:
    reps = []
    for rank, (rep, prov) in enumerate(zip(result.representatives, result.provenance), start=1):
        entry = {"rank": rank, "opinion": prov.opinion, "annotator": prov.annotator,
                 "cluster_size": result.cluster_sizes[rank - 1], "cost": _r(result.costs[rank - 1])}
        if isinstance(rep, Segment):
            entry["segment"] = [_r(v) for v in rep.coords()]
            entry["original"] = [_r(v) for v in prov.original.coords()]
            entry["length"] = _r(rep.length)
            entry["adjusted"] = rep != prov.original
        else:
            entry["point"] = [_r(rep.x), _r(rep.y)]
            entry["tag"] = prov.tag
        reps.append(entry)
    ingested = sum(len(b.opinions) for b in ds.batches)
    removed = sum(1 for e in result.log if e.action == "removed")
    out = {
        "report": "consensus",
        "kind": ds.kind,
        "ingested": ingested,
        "survivors": len(result.survivors),
        "removed": removed,
        "adjusted": sum(1 for e in result.log if e.action == "adjusted"),
        "threshold_name": result.threshold_name,
        "configured_threshold": _r(config.d2 if ds.kind == "lines" else config.d1),
        "effective_threshold": _r(result.effective_threshold),
        "relaxations": result.relaxations,
        "iterations": result.iterations,
        "converged": result.converged,
        "representatives": reps,
        "log": [e.to_dict() for e in result.log],
        "warnings": list(ds.warnings),
    }
    if ds.kind == "lines":
        out["k_star"] = config.k_star
        out["effective_D2"] = out["effective_threshold"]
    if result.allocation is not None:
        out["allocation"] = result.allocation.to_dict()
    return out


def _consensus_text(r: dict) -> str:
    name = r["threshold_name"]
    out = [f"Ingested {r['ingested']}, removed {r['removed']}, adjusted {r['adjusted']}, "
           f"clustered {r['survivors']}",
           f"Effective {name}: {_f(r['effective_threshold'])} (configured {_f(r['configured_threshold'])}, "
           f"relaxations {r['relaxations']}); clustering sweeps {r['iterations']}", ""]
    if r["kind"] == "lines":
        rows = [[str(e["rank"]), *e["segment"], e["length"], e["cost"], e["cluster_size"], e["opinion"]]
                for e in r["representatives"]]
        out.append(_table(["#", "x1", "y1", "x2", "y2", "Length", "Cost", "Cluster", "Opinion"], rows))
    else:
        alloc = r.get("allocation", {}).get("allocation", {})
        if alloc:
            out.append("Allocation: " + ", ".join(f"{k} {v}" for k, v in alloc.items()))
        rows = [[str(e["rank"]), e["tag"], *e["point"], e["cost"], e["cluster_size"], e["opinion"]]
                for e in r["representatives"]]
        out.append(_table(["#", "Provider", "x", "y", "Cost", "Cluster", "Opinion"], rows))
    if r["log"]:
        out += ["", _table(["Stage", "Opinion", "Action", "Detail"],
                           [[e["stage"], e["opinion"], e["action"], e["detail"]] for e in r["log"]])]
    out.extend(_warning_lines(r))
    return "\n".join(out)


def _warning_lines(r: dict) -> list[str]:
    if not r.get("warnings"):
        return []
    return ["", "Warnings:"] + [f"  {w}" for w in r["warnings"]]


# --- argument handling -----------------------------------------------------

def _constraint_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--d1", type=float, help="separability threshold D1")
    p.add_argument("--d2", type=float, help="congestion threshold D2")
    p.add_argument("--max-length", type=float, help="maximum consensus line length L")
    p.add_argument("--k-star", type=int, help="opinions per worker / number of consensus lines")
    p.add_argument("--max-iter", type=int, help="clustering sweep cap")
    p.add_argument("--seed", type=int, help="clustering seed")
    p.add_argument("--relaxation", choices=("strict", "geometric-decay"))


def _common(p: argparse.ArgumentParser, dataset_required: bool = True) -> None:
    if dataset_required:
        p.add_argument("dataset", help="JSON document or CSV opinion table")
    else:
        p.add_argument("dataset", nargs="?", help="JSON document or CSV opinion table")
    p.add_argument("--kind", choices=("lines", "points"), help="opinion kind (needed for CSV)")
    p.add_argument("--scene", help="JSON scene (region, background, constraints) for CSV input")
    _constraint_flags(p)
    p.add_argument("--output", "-o", help="write the report here instead of stdout")
    p.add_argument("--format", choices=("text", "json"), default="text")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="crowdplan", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    _common(sub.add_parser("validate", help="count pre-processing constraint violations"))
    _common(sub.add_parser("aggregate-lines", help="consensus of line-segment opinions"))
    p = sub.add_parser("aggregate-points", help="allocate facilities and pick point consensus")
    _common(p)
    p.add_argument("--total", type=int, help="number of facilities to place")
    p = sub.add_parser("allocate", help="share facilities between providers")
    _common(p, dataset_required=False)
    p.add_argument("--total", type=int, help="number of facilities to place")
    p.add_argument("--counts", help="proposal counts, e.g. SBI=51,AXIS=24")
    p.add_argument("--existing", help="existing facilities near the centre, e.g. SBI=1,AXIS=6")
    p = sub.add_parser("render", help="draw the scene and its consensus as SVG")
    _common(p)
    p.add_argument("--total", type=int, help="number of facilities (point datasets)")
    return parser


def _overrides(args) -> dict:
    return {"d1": args.d1, "d2": args.d2, "max_length": args.max_length, "k_star": args.k_star,
            "max_iter": args.max_iter, "seed": args.seed, "relaxation": args.relaxation}


def _pairs(text: Optional[str], what: str) -> dict[str, int]:
    out: dict[str, int] = {}
    if not text:
        return out
    for item in text.split(","):
        key, sep, value = item.partition("=")
        if not sep or not key.strip():
            raise DatasetError(f"{what}: expected NAME=COUNT, got {item!r}")
        try:
            out[key.strip()] = int(value)
        except ValueError:
            raise DatasetError(f"{what}: {value!r} is not an integer") from None
    return out


def _load(args) -> Dataset:
    return load_dataset(args.dataset, args.kind, args.scene)


def _config(ds: Dataset, args) -> ConstraintConfig:
    try:
        return ds.config(**_overrides(args))
    except ValueError as exc:
        raise DatasetError(str(exc)) from None


def _total(args, ds: Optional[Dataset]) -> int:
    total = args.total if args.total is not None else (ds.total_facilities if ds else None)
    if total is None:
        raise DatasetError("the number of facilities is unknown: pass --total")
    return total


def _emit(args, report: dict, text: str, out) -> None:
    body = json.dumps(report, indent=2, sort_keys=True) + "\n" if args.format == "json" else text + "\n"
    if args.output:
        Path(args.output).write_text(body)
    else:
        out.write(body)


def _cmd_validate(args, out):
    ds = _load(args)
    report = validation_report(ds, _config(ds, args), Path(args.dataset).name)
    _emit(args, report, _validation_text(report), out)


def _cmd_lines(args, out):
    ds = _load(args)
    if ds.kind != "lines":
        raise DatasetError("aggregate-lines needs a line dataset")
    config = _config(ds, args)
    result = lines.aggregate_lines(ds.batches, ds.background, config)
    report = consensus_report(result, ds, config)
    _emit(args, report, _consensus_text(report), out)


def _cmd_points(args, out):
    ds = _load(args)
    if ds.kind != "points":
        raise DatasetError("aggregate-points needs a point dataset")
    config = _config(ds, args)
    result = points.aggregate_points(ds.batches, ds.background, config, _total(args, ds))
    report = consensus_report(result, ds, config)
    _emit(args, report, _consensus_text(report), out)


def _cmd_allocate(args, out):
    if args.dataset:
        ds = _load(args)
        if ds.kind != "points":
            raise DatasetError("allocate needs a point dataset")
        config = _config(ds, args)
        survivors = points.filter_points(points.drop_unlocated(ds.batches), ds.background, config)
        counts: dict[str, int] = {}
        for b in survivors:
            for o in b.opinions:
                counts[o.tag] = counts.get(o.tag, 0) + 1
        centre = Point(*config.allocation_center) if config.allocation_center else None
        existing = points.existing_counts(ds.background, centre, config.allocation_radius)
        total = _total(args, ds)
        method, closeness, elig = (config.allocation_method, config.closeness_tolerance,
                                   config.eligibility_max_existing)
    else:
        counts = _pairs(args.counts, "--counts")
        existing = _pairs(args.existing, "--existing")
        if not counts:
            raise DatasetError("allocate needs a dataset or --counts")
        total = _total(args, None)
        defaults = ConstraintConfig(d1=1, d2=1, max_length=1, k_star=1)
        method, closeness, elig = "dhondt", defaults.closeness_tolerance, defaults.eligibility_max_existing
    result = points.preferential_allocation(counts, existing, total, method, closeness, elig)
    report = allocation_report(result, counts, existing, total)
    _emit(args, report, _allocation_text(report), out)


def _cmd_render(args, out, err):
    ds = _load(args)
    config = _config(ds, args)
    log: list = []
    consensus = None
    try:
        if ds.kind == "lines":
            lines.preprocess(ds.batches, ds.background, config, log)
            consensus = lines.aggregate_lines(ds.batches, ds.background, config)
        else:
            points.filter_points(points.drop_unlocated(ds.batches, log), ds.background, config, log)
            consensus = points.aggregate_points(ds.batches, ds.background, config, _total(args, ds))
    except ConsensusError as exc:
        err.write(f"note: no consensus drawn: {exc}\n")
    removed = [e.opinion for e in log if e.action == "removed"]
    svg = render_scene(ds.background, ds.batches, consensus, removed=removed)
    if args.output:
        Path(args.output).write_text(svg)
    else:
        out.write(svg)


def run(argv: Optional[Sequence[str]] = None, out=None, err=None) -> int:
    """Run one subcommand and return its exit code."""
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command == "validate":
            _cmd_validate(args, out)
        elif args.command == "aggregate-lines":
            _cmd_lines(args, out)
        elif args.command == "aggregate-points":
            _cmd_points(args, out)
        elif args.command == "allocate":
            _cmd_allocate(args, out)
        else:
            _cmd_render(args, out, err)
    except ConsensusError as exc:
        err.write(f"infeasible: {exc}\n")
        return 1
    except (DatasetError, ValueError) as exc:
        err.write(f"error: {exc}\n")
        return 2
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
