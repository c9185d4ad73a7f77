"""Small hand-made scenes and a seeded generator for larger ones.

``canal_scene`` reproduces the six-worker sewage-line example; the ATM
scenes are generated deterministically and also shipped as JSON under
``crowdplan/data`` so they can be inspected or fed to the command line.
"""
from __future__ import annotations

import math
from pathlib import Path
from typing import Optional

import numpy as np

from .dataio import Dataset
from .geometry import ConvexRegion, Point, Segment
from .model import (
    Annotator,
    BackgroundInfrastructure,
    ConstraintConfig,
    Facility,
    LineOpinionBatch,
    PointOpinion,
    PointOpinionBatch,
)


def _seg(a, b) -> Segment:
    return Segment(Point(*a), Point(*b))


def canal_scene():
    """Six workers, two proposals each, three canal lines.

    Returns ``(batches, background, config)``.  Workers w1..w3 break one
    constraint each in the ways the example walks through; w4..w6 are
    valid and clustered around two sites, with w4 as the medoid of both.
    """
    region = ConvexRegion.rectangle(0, 0, 42, 18)
    canals = (
        _seg((0, 9), (24, 9)),
        _seg((12, 0), (12, 9)),
        _seg((30, 4), (30, 18)),
    )
    background = BackgroundInfrastructure(region, canals)
    proposals = {
        # both too long and within D1 of each other
        "w1": [((30, 12), (41, 12)), ((30, 13.5), (41.5, 13.5))],
        # first cannot reach a canal, second reaches one but ends up too long
        "w2": [((40, 0.5), (40, 2)), ((32, 16), (41, 16))],
        # neither can be extended onto a canal
        "w3": [((36, 1), (36, 3)), ((38, 1), (38, 3.5))],
        "w4": [((5, 9), (5, 15)), ((20, 9), (20, 3))],
        "w5": [((6, 9), (6, 14.5)), ((21, 9), (21, 2))],
        "w6": [((4.5, 9), (4.5, 15.5)), ((19, 9), (19, 3.5))],
    }
    batches = [LineOpinionBatch.from_segments(w, [_seg(a, b) for a, b in segs]) for w, segs in proposals.items()]
    config = ConstraintConfig(d1=4.0, d2=3.0, max_length=10.0, k_star=2)
    return batches, background, config


# ATM example: one bank per worker, three proposals each
ATM_BANKS = ("SBI", "AXIS", "ICICI", "BOB", "HDFC", "IDBI")
ATM_WORKERS = {"SBI": 17, "AXIS": 8, "ICICI": 7, "BOB": 2, "HDFC": 2, "IDBI": 1}
ATM_EXISTING = {"SBI": 1, "AXIS": 6, "ICICI": 2, "BOB": 1, "HDFC": 6, "IDBI": 2}
ATM_TOTAL = 3
ATM_SIZE = 2000.0


def _atm_background(rng: np.random.Generator) -> BackgroundInfrastructure:
    region = ConvexRegion.rectangle(0, 0, ATM_SIZE, ATM_SIZE)
    c = ATM_SIZE / 2
    facilities = []
    for tag in ATM_BANKS:
        for _ in range(ATM_EXISTING[tag]):
            r = rng.uniform(150, 700)
            a = rng.uniform(0, 2 * math.pi)
            facilities.append(Facility(Point(round(c + r * math.cos(a), 1), round(c + r * math.sin(a), 1)), tag))
    # a couple of indoor machines far out, exempt from separation
    facilities.append(Facility(Point(80.0, 90.0), "SBI", exempt=True))
    facilities.append(Facility(Point(1900.0, 1880.0), "AXIS", exempt=True))
    return BackgroundInfrastructure(region, facilities=tuple(facilities))


def _far_from(p, others, d) -> bool:
    return all(math.sqrt((p[0] - q[0]) ** 2 + (p[1] - q[1]) ** 2) >= d for q in others)


def atm_scene(name: str = "ATM1"):
    """The two ATM datasets: 37 workers, 111 proposals, 6 banks.

    ATM1 has exactly six proposals within D1 of an existing same-bank
    machine; ATM2 has none.  No other constraint is broken.  Returns
    ``(batches, background, config, total_facilities)``.
    """
    if name not in ("ATM1", "ATM2"):
        raise ValueError("name must be 'ATM1' or 'ATM2'")
    d1 = 100.0
    rng = np.random.default_rng(7)
    background = _atm_background(rng)
    rng = np.random.default_rng(11 if name == "ATM1" else 12)
    c = ATM_SIZE / 2
    # a few popular sites per bank so clusters are meaningful
    sites = {tag: [(c + rng.uniform(-600, 600), c + rng.uniform(-600, 600)) for _ in range(3)] for tag in ATM_BANKS}
    n_bad = 6 if name == "ATM1" else 0
    batches = []
    worker = 0
    bad_left = n_bad
    for tag in ATM_BANKS:
        existing = [tuple(f.point) for f in background.facilities_of(tag)]
        for _ in range(ATM_WORKERS[tag]):
            worker += 1
            pts = []
            for k in range(3):
                if bad_left and k == 0 and existing and worker % 5 == 1:
                    ex = existing[bad_left % len(existing)]
                    while True:
                        a = rng.uniform(0, 2 * math.pi)
                        r = rng.uniform(20, 80)
                        p = (round(ex[0] + r * math.cos(a), 1), round(ex[1] + r * math.sin(a), 1))
                        if _far_from(p, pts, d1):
                            break
                    bad_left -= 1
                else:
                    while True:
                        s = sites[tag][int(rng.integers(3))]
                        p = (round(s[0] + rng.normal(0, 120), 1), round(s[1] + rng.normal(0, 120), 1))
                        inside = 0 <= p[0] <= ATM_SIZE and 0 <= p[1] <= ATM_SIZE
                        if inside and _far_from(p, pts, d1) and _far_from(p, existing, d1):
                            break
                pts.append(p)
            batches.append(PointOpinionBatch(f"u{worker:02d}", tuple(
                PointOpinion(f"u{worker:02d}", i, Point(*p), tag) for i, p in enumerate(pts))))
    if bad_left:
        raise AssertionError("generator did not place every planned violation")
    config = ConstraintConfig(d1=d1, d2=d1, max_length=ATM_SIZE, k_star=ATM_TOTAL, allocation_radius=750.0,
                              allocation_center=(c, c))
    return batches, background, config, ATM_TOTAL


def synthetic_line_scene(n_workers: int, k_star: int = 5, seed: int = 0, size: float = 1000.0,
                         n_canals: int = 8):
    """A grid of canals and ``n_workers`` workers with ``k_star`` lines each.

    There are ``k_star`` popular spots along the canals; every worker puts
    one line at each spot (jittered), perpendicular to the canal and
    touching it.  All proposals satisfy the pre-processing constraints.
    Returns ``(batches, background, config)``.
    """
    rng = np.random.default_rng(seed)
    region = ConvexRegion.rectangle(0, 0, size, size)
    canals = []
    for i in range(n_canals):
        t = (i + 0.5) / n_canals * size
        canals.append(_seg((t, 0.0), (t, size)) if i % 2 else _seg((0.0, t), (size, t)))
    background = BackgroundInfrastructure(region, tuple(canals))
    # spots sit halfway between canal crossings
    spots = [(canals[i % n_canals], ((3 * i) % (n_canals - 1) + 1) / n_canals) for i in range(k_star)]
    max_len = size / 20
    batches = []
    for w in range(n_workers):
        segs = []
        for c, u in spots:
            u = float(np.clip(u + rng.normal(0, 0.01), 0.02, 0.98))
            vertical = c.a.x == c.b.x
            ax = c.a.x if vertical else u * size
            ay = u * size if vertical else c.a.y
            length = rng.uniform(0.3, 1.0) * max_len
            side = 1.0 if rng.random() < 0.5 else -1.0
            end = (ax + side * length, ay) if vertical else (ax, ay + side * length)
            segs.append(_seg((ax, ay), end))
        batches.append(LineOpinionBatch.from_segments(f"s{w:05d}", segs))
    config = ConstraintConfig(d1=size / 200, d2=size / 100, max_length=max_len, k_star=k_star, max_iter=50,
                              seed=seed)
    return batches, background, config


FIXTURES = ("canal", "ATM1", "ATM2")
DATA_DIR = Path(__file__).parent / "data"


def as_dataset(batches, background, config: ConstraintConfig, total: Optional[int] = None) -> Dataset:
    kind = "points" if batches and isinstance(batches[0], PointOpinionBatch) else "lines"
    return Dataset(kind, list(batches), background, config.to_dict(), total,
                   {b.annotator: Annotator(b.annotator) for b in batches})


def fixture_dataset(name: str) -> Dataset:
    """Build one of the bundled fixtures in memory."""
    if name == "canal":
        return as_dataset(*canal_scene())
    if name in ("ATM1", "ATM2"):
        return as_dataset(*atm_scene(name))
    raise ValueError(f"unknown fixture {name!r}; choose from {FIXTURES}")


def fixture_path(name: str) -> Path:
    """Location of the shipped JSON copy of a fixture."""
    if name not in FIXTURES:
        raise ValueError(f"unknown fixture {name!r}; choose from {FIXTURES}")
    return DATA_DIR / f"{name.lower()}.json"
