"""PL curves on the flat torus [-1,1]^2 with exact rational vertices.

A curve is stored as its lift: a vertex path in the plane whose final
point differs from the first by (2p, 2q); (p, q) is the homology class.
Edges are straight segments in the universal cover.
"""

from __future__ import annotations

from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

from ..novikov import rat

Point = Tuple[Fraction, Fraction]
SIDE = Fraction(2)  # fundamental square side length


class GeometryError(ValueError):
    pass


def _pt(p) -> Point:
    return (rat(p[0]), rat(p[1]))


def wrap_point(p: Point) -> Point:
    """Representative in the fundamental square [-1, 1) x [-1, 1)."""
    return (Fraction((p[0] + 1) % SIDE) - 1, Fraction((p[1] + 1) % SIDE) - 1)


def _cross(o: Point, a: Point, b: Point) -> Fraction:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _seg_common(p1, p2, q1, q2):
    """Exact contact between two closed segments.

    Returns None, ("point", p, kind) with kind "proper" (both interiors)
    or "touch", or ("overlap",) for a collinear sub-segment.
    """
    r = (p2[0] - p1[0], p2[1] - p1[1])
    s = (q2[0] - q1[0], q2[1] - q1[1])
    denom = r[0] * s[1] - r[1] * s[0]
    qp = (q1[0] - p1[0], q1[1] - p1[1])
    if denom == 0:
        if qp[0] * r[1] - qp[1] * r[0] != 0:
            return None  # parallel, disjoint lines
        rr = r[0] * r[0] + r[1] * r[1]
        t0 = (qp[0] * r[0] + qp[1] * r[1]) / rr
        t1 = t0 + (s[0] * r[0] + s[1] * r[1]) / rr
        lo, hi = min(t0, t1), max(t0, t1)
        if hi < 0 or lo > 1:
            return None
        if hi == lo:
            pass
        if hi == 0:
            return ("point", p1, "touch")
        if lo == 1:
            return ("point", p2, "touch")
        return ("overlap",)
    t = (qp[0] * s[1] - qp[1] * s[0]) / denom
    u = (qp[0] * r[1] - qp[1] * r[0]) / denom
    if t < 0 or t > 1 or u < 0 or u > 1:
        return None
    kind = "proper" if (0 < t < 1 and 0 < u < 1) else "touch"
    return ("point", (p1[0] + t * r[0], p1[1] + t * r[1]), kind)


def _seg_intersection(p1, p2, q1, q2, proper=True):
    """Exact transverse intersection point of two segments, or None.

    Endpoint touches and collinear overlaps raise GeometryError unless
    ``proper`` is set, in which case they are ignored.
    """
    hit = _seg_common(p1, p2, q1, q2)
    if hit is None:
        return None
    if hit[0] == "overlap":
        if proper:
            return None
        raise GeometryError("segments overlap along a sub-segment")
    _, p, kind = hit
    if kind == "touch":
        if proper:
            return None
        raise GeometryError("segments meet at a vertex")
    return p


class TorusCurve:
    """Closed embedded PL curve, stored by its lift path."""

    def __init__(self, vertices: Sequence, name: str = "",
                 check_embedded: bool = True):
        self.name = name
        vs = [_pt(v) for v in vertices]
        if len(vs) < 2:
            raise GeometryError("a curve needs at least two vertices")
        dx = vs[-1][0] - vs[0][0]
        dy = vs[-1][1] - vs[0][1]
        if dx % SIDE != 0 or dy % SIDE != 0:
            raise GeometryError("lift path must close up to a deck translate")
        self.vertices = vs[:-1]
        self.closure = vs[-1]
        self.hclass = (int(dx / SIDE), int(dy / SIDE))
        if self.hclass == (0, 0):
            raise GeometryError("curve must be homologically essential")
        for a, b in self.edges():
            if a == b:
                raise GeometryError("degenerate edge")
        if check_embedded and not self.is_embedded():
            raise GeometryError(f"curve {name or vertices} is not embedded")

    def edges(self) -> List[Tuple[Point, Point]]:
        pts = self.vertices + [self.closure]
        return [(pts[i], pts[i + 1]) for i in range(len(pts) - 1)]

    def length_bound(self) -> Fraction:
        tot = Fraction(0)
        for a, b in self.edges():
            tot += abs(b[0] - a[0]) + abs(b[1] - a[1])
        return tot

    def translates_hitting(self, lo: Point, hi: Point):
        """Deck translates t with edge bounding boxes meeting [lo, hi]."""
        xs = [p[0] for p in self.vertices + [self.closure]]
        ys = [p[1] for p in self.vertices + [self.closure]]
        out = []
        kx_min = int(((lo[0] - max(xs)) / SIDE).__floor__())
        kx_max = int(((hi[0] - min(xs)) / SIDE).__ceil__())
        ky_min = int(((lo[1] - max(ys)) / SIDE).__floor__())
        ky_max = int(((hi[1] - min(ys)) / SIDE).__ceil__())
        for kx in range(kx_min, kx_max + 1):
            for ky in range(ky_min, ky_max + 1):
                out.append((SIDE * kx, SIDE * ky))
        return out

    def is_embedded(self) -> bool:
        """No self-intersections on the torus (translate-aware)."""
        edges = self.edges()
        n = len(edges)
        cls = (SIDE * self.hclass[0], SIDE * self.hclass[1])
        xs = [p[0] for e in edges for p in e]
        ys = [p[1] for e in edges for p in e]
        lo, hi = (min(xs), min(ys)), (max(xs), max(ys))
        for t in self.translates_hitting(lo, hi):
            for i, (a, b) in enumerate(edges):
                for j, (c, d) in enumerate(edges):
                    if t == (0, 0) and j <= i:
                        continue
                    c2 = (c[0] + t[0], c[1] + t[1])
                    d2 = (d[0] + t[0], d[1] + t[1])
                    hit = _seg_common(a, b, c2, d2)
                    if hit is None:
                        continue
                    # the only allowed contact is the shared vertex of
                    # consecutive edges (wrap-aware)
                    allowed = None
                    if t == (0, 0) and j == i + 1:
                        allowed = b
                    elif i == n - 1 and j == 0 and (t[0], t[1]) == cls:
                        allowed = b
                    elif t == (0, 0) and i == 0 and j == n - 1:
                        allowed = a
                    elif i == 0 and j == n - 1 and \
                            (t[0], t[1]) == (-cls[0], -cls[1]):
                        allowed = a
                    if hit[0] == "point" and allowed is not None \
                            and hit[1] == allowed:
                        continue
                    return False
        return True

    def axis_parallel(self) -> bool:
        return all(a[0] == b[0] or a[1] == b[1] for a, b in self.edges())

    def strands(self):
        """Maximal collinear runs, as (axis, coordinate, length) triples.

        axis "v": vertical strand at x = coordinate (wrapped); axis "h":
        horizontal strand at y = coordinate.  Consecutive edges of the
        same axis share a vertex, hence a line, so the runs are the
        cyclic maximal same-axis blocks.  Only for axis-parallel curves.
        """
        if not self.axis_parallel():
            raise GeometryError("strands need an axis-parallel curve")
        edges = self.edges()
        n = len(edges)
        axes = ["v" if a[0] == b[0] else "h" for a, b in edges]
        lengths = [abs(b[1] - a[1]) if ax == "v" else abs(b[0] - a[0])
                   for (a, b), ax in zip(edges, axes)]
        if len(set(axes)) == 1:
            a = edges[0][0]
            coord = wrap_point(a)
            c = coord[0] if axes[0] == "v" else coord[1]
            return [(axes[0], c, min(sum(lengths), SIDE))]
        # start each run at an axis change
        runs = []
        i = 0
        while axes[i] == axes[i - 1]:
            i += 1
        start = i
        while True:
            j = i
            total = Fraction(0)
            while True:
                total += lengths[j % n]
                if axes[(j + 1) % n] != axes[i % n]:
                    break
                j += 1
            a = edges[i % n][0]
            coord = wrap_point(a)
            c = coord[0] if axes[i % n] == "v" else coord[1]
            runs.append((axes[i % n], c, min(total, SIDE)))
            i = j + 1
            if i % n == start:
                break
        return runs

    def __repr__(self):
        return f"TorusCurve({self.name or self.hclass})"


def intersections(c1: TorusCurve, c2: TorusCurve) -> List[Point]:
    """Transverse intersection points on the torus, sorted.

    Raises GeometryError on shared segments or vertex touches.
    """
    pts = set()
    edges1 = c1.edges()
    edges2 = c2.edges()
    xs = [p[0] for e in edges1 for p in e]
    ys = [p[1] for e in edges1 for p in e]
    lo, hi = (min(xs), min(ys)), (max(xs), max(ys))
    for t in c2.translates_hitting(lo, hi):
        for (a, b) in edges1:
            for (c, d) in edges2:
                c2p = (c[0] + t[0], c[1] + t[1])
                d2p = (d[0] + t[0], d[1] + t[1])
                hit = _seg_intersection(a, b, c2p, d2p, proper=False)
                if hit is not None:
                    pts.add(wrap_point(hit))
    return sorted(pts)


def count_transverse_crossings(c1: TorusCurve, c2: TorusCurve) -> int:
    """Number of proper transverse crossings, ignoring overlaps/touches.

    Used for surgered curves that ride along their surgery partners.
    """
    pts = set()
    edges1 = c1.edges()
    xs = [p[0] for e in edges1 for p in e]
    ys = [p[1] for e in edges1 for p in e]
    lo, hi = (min(xs), min(ys)), (max(xs), max(ys))
    for t in c2.translates_hitting(lo, hi):
        for (a, b) in edges1:
            for (c, d) in c2.edges():
                c2p = (c[0] + t[0], c[1] + t[1])
                d2p = (d[0] + t[0], d[1] + t[1])
                try:
                    hit = _seg_intersection(a, b, c2p, d2p, proper=True)
                except GeometryError:
                    continue
                if hit is not None:
                    pts.add(wrap_point(hit))
    return len(pts)


# ---------------------------------------------------------------------------
# surgery
# ---------------------------------------------------------------------------

def _edge_through(curve: TorusCurve, pt: Point):
    """Index of the edge whose interior or start vertex passes through pt
    (up to deck translates); returns (index, translate)."""
    for i, (a, b) in enumerate(curve.edges()):
        for t in curve.translates_hitting(
                (min(a[0], b[0]) - SIDE, min(a[1], b[1]) - SIDE),
                (max(a[0], b[0]) + SIDE, max(a[1], b[1]) + SIDE)):
            p = (pt[0] + t[0], pt[1] + t[1])
            if _on_segment(a, b, p):
                return i, t, p
    raise GeometryError(f"point {pt} is not on curve {curve.name}")


def _on_segment(a: Point, b: Point, p: Point) -> bool:
    if _cross(a, b, p) != 0:
        return False
    lo_x, hi_x = min(a[0], b[0]), max(a[0], b[0])
    lo_y, hi_y = min(a[1], b[1]), max(a[1], b[1])
    return lo_x <= p[0] <= hi_x and lo_y <= p[1] <= hi_y


def _rotate_path_through(curve: TorusCurve, pt: Point) -> List[Point]:
    """Closed lift path of the curve starting and ending at (a lift of) pt."""
    i, t, p = _edge_through(curve, pt)
    pts = curve.vertices + [curve.closure]
    cls = (SIDE * curve.hclass[0], SIDE * curve.hclass[1])
    path = [p]
    path.extend(pts[i + 1:])  # runs through the closure = pts[0] + cls
    path.extend((v[0] + cls[0], v[1] + cls[1]) for v in pts[1:i + 1])
    path.append((p[0] + cls[0], p[1] + cls[1]))
    out = [path[0]]
    for q in path[1:]:
        if q != out[-1]:
            out.append(q)
    return out


def _direction(a: Point, b: Point) -> Point:
    dx, dy = b[0] - a[0], b[1] - a[1]
    if dx != 0:
        dx = Fraction(1 if dx > 0 else -1)
    if dy != 0:
        dy = Fraction(1 if dy > 0 else -1)
    return (dx, dy)


def surgery(l_curve: TorusCurve, s_curve: TorusCurve, at, handle_area,
            width: Optional[Fraction] = None, name: str = ""):
    """Resolve the transverse crossing ``at`` with a one-sided
    rectangular corner cut enclosing exactly ``handle_area``.

    The resolution follows the orientations: the curve enters along L,
    leaves along S through the crossing point itself, and the returning
    S-branch cuts the corner toward the outgoing L-branch.  Returns
    (curve, trace footprint rectangle dims (w, h) and offsets) --- the
    planar trace diagram itself is built by the caller from the handle
    area and grouping.
    """
    at = _pt(at)
    handle_area = rat(handle_area)
    if handle_area <= 0:
        raise GeometryError("handle area must be positive")
    pts_l = _rotate_path_through(l_curve, at)
    pts_s = _rotate_path_through(s_curve, at)
    # directions at the crossing
    u_l = _direction(pts_l[0], pts_l[1])
    u_s = _direction(pts_s[0], pts_s[1])
    if u_l[0] * u_s[0] + u_l[1] * u_s[1] != 0:
        raise GeometryError("surgery requires an axis-parallel transverse crossing")
    if width is None:
        width = _auto_width(l_curve, s_curve, at, handle_area)
    w = rat(width)
    h = handle_area / w
    end_s = pts_s[-1]  # crossing + S-class translate
    # the cut must fit on the last S-edge and the first L-edge
    last_s_len = abs(end_s[0] - pts_s[-2][0]) + abs(end_s[1] - pts_s[-2][1])
    first_l_len = abs(pts_l[1][0] - pts_l[0][0]) + abs(pts_l[1][1] - pts_l[0][1])
    if h >= last_s_len or w >= first_l_len:
        raise GeometryError("handle does not fit the local edges")
    # follow S from the crossing, stop h short of the return, cut a w x h
    # staircase onto the outgoing L-branch, then follow L all the way round
    cut1 = (end_s[0] - h * u_s[0], end_s[1] - h * u_s[1])
    cut2 = (cut1[0] + w * u_l[0], cut1[1] + w * u_l[1])
    cut3 = (end_s[0] + w * u_l[0], end_s[1] + w * u_l[1])
    l_shift = (end_s[0] - pts_l[0][0], end_s[1] - pts_l[0][1])
    l_path = [(q[0] + l_shift[0], q[1] + l_shift[1]) for q in pts_l]
    verts = pts_s[:-1] + [cut1, cut2, cut3] + l_path[1:]
    out = TorusCurve(verts, name=name or f"{l_curve.name}#{s_curve.name}")
    return out, (w, h)


def _auto_width(l_curve, s_curve, at, handle_area) -> Fraction:
    """Half the smallest positive gap to any nearby strand line; the cut
    height delta/w must also clear the gap or the handle does not fit.

    The caller usually knows the configuration better (for the torus
    examples, width = eps/2 with delta < eps^2/2 always fits) and should
    pass an explicit width.
    """
    gaps = []
    for c in (l_curve, s_curve):
        for a, b in c.edges():
            for coord, val in ((0, at[0]), (1, at[1])):
                if a[coord] == b[coord]:
                    d = (a[coord] - val) % SIDE
                    d = min(d, SIDE - d)
                    if d > 0:
                        gaps.append(d)
    g = min(gaps) if gaps else Fraction(1, 2)
    w = g / 2
    if handle_area / w >= g:
        raise GeometryError("handle too large for the local gaps; "
                            "pass an explicit width")
    return w


def parse_curve(line: str, name: str = "") -> TorusCurve:
    """Parse "curve <name>: (x1,y1) (x2,y2) ..." or a bare vertex list."""
    body = line.strip()
    if body.startswith("curve "):
        head, rest = body[6:].split(":", 1)
        name = head.strip()
        body = rest
    pts = []
    for chunk in body.replace(")", ") ").split():
        chunk = chunk.strip().strip(",")
        if not chunk:
            continue
        if not (chunk.startswith("(") and chunk.endswith(")")):
            raise GeometryError(f"bad vertex {chunk!r}")
        x, y = chunk[1:-1].split(",")
        pts.append((rat(x.strip()), rat(y.strip())))
    return TorusCurve(pts, name=name)
