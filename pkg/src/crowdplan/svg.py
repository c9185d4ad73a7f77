"""Deterministic SVG drawings of a scene and its consensus.

Conventions: region outline as a closed polyline, existing lines solid,
proposals dashed (removed ones in grey), consensus in a heavy stroke.
Point scenes use circles instead of lines.
"""
from __future__ import annotations

from typing import Iterable, Optional
from xml.sax.saxutils import quoteattr

from .geometry import ConvexRegion, Point, Segment
from .model import BackgroundInfrastructure, Consensus, LineOpinion

WIDTH = 800.0
MARGIN = 20.0


def _f(v: float) -> str:
    return f"{v:.4f}"


class _Frame:
    def __init__(self, region: ConvexRegion, width: float):
        x0, y0, x1, y1 = region.bounds()
        span = max(x1 - x0, y1 - y0) or 1.0
        self.s = (width - 2 * MARGIN) / span
        self.x0, self.y1 = x0, y1
        self.w = (x1 - x0) * self.s + 2 * MARGIN
        self.h = (y1 - y0) * self.s + 2 * MARGIN

    def __call__(self, p: Point) -> tuple[str, str]:
        # y grows downwards in SVG
        return _f(MARGIN + (p.x - self.x0) * self.s), _f(MARGIN + (self.y1 - p.y) * self.s)


def _line(fr, s: Segment, cls: str, ident: str = "") -> str:
    (x1, y1), (x2, y2) = fr(s.a), fr(s.b)
    extra = f" id={quoteattr(ident)}" if ident else ""
    return f'<line class="{cls}"{extra} x1="{x1}" y1="{y1}" x2="{x2}" y2="{y2}"/>'


def _circle(fr, p: Point, cls: str, r: float, ident: str = "") -> str:
    cx, cy = fr(p)
    extra = f" id={quoteattr(ident)}" if ident else ""
    return f'<circle class="{cls}"{extra} cx="{cx}" cy="{cy}" r="{_f(r)}"/>'


_STYLE = """<style>
.region{fill:none;stroke:#444;stroke-width:1}
.background{stroke:#1f5fa8;stroke-width:2}
.opinion{stroke:#2a9d4b;stroke-width:1.2;stroke-dasharray:6 4}
.removed{stroke:#aaaaaa;stroke-width:1;stroke-dasharray:3 3}
.consensus{stroke:#c0392b;stroke-width:4}
circle.background{fill:#1f5fa8;stroke:none}
circle.opinion{fill:#2a9d4b;stroke:none}
circle.removed{fill:#aaaaaa;stroke:none}
circle.consensus{fill:none;stroke:#c0392b;stroke-width:3}
</style>"""


def render_scene(background: BackgroundInfrastructure, batches: Iterable = (),
                 consensus: Optional[Consensus] = None, region: Optional[ConvexRegion] = None,
                 removed: Iterable[str] = (), width: float = WIDTH) -> str:
    """SVG document for a scene.

    ``batches`` are the ingested opinions (drawn as given, before any
    adjustment); ids in ``removed`` get the removed style.
    """
    region = region or background.region
    fr = _Frame(region, width)
    removed = set(removed)
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_f(fr.w)}" height="{_f(fr.h)}" '
        f'viewBox="0 0 {_f(fr.w)} {_f(fr.h)}">',
        _STYLE,
    ]
    pts = " ".join(",".join(fr(v)) for v in (*region.vertices, region.vertices[0]))
    out.append(f'<polyline class="region" points="{pts}"/>')
    out.append('<g id="background">')
    out.extend(_line(fr, s, "background") for s in background.segments)
    out.extend(_circle(fr, f.point, "background", 3.0) for f in background.facilities)
    out.append("</g>")
    out.append('<g id="opinions">')
    for b in batches:
        for o in b.opinions:
            cls = "removed" if o.id in removed else "opinion"
            if isinstance(o, LineOpinion):
                out.append(_line(fr, o.original, cls, o.id))
            else:
                out.append(_circle(fr, o.point, cls, 2.0, o.id))
    out.append("</g>")
    out.append('<g id="consensus">')
    if consensus is not None:
        for rep, prov in zip(consensus.representatives, consensus.provenance):
            if isinstance(rep, Segment):
                out.append(_line(fr, rep, "consensus", f"consensus:{prov.opinion}"))
            else:
                out.append(_circle(fr, rep, "consensus", 6.0, f"consensus:{prov.opinion}"))
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"
