"""Relative Gromov widths for axis-parallel configurations on the torus.

The flexible-disk capacity reduces to strip and quadrant formulas for
axis-parallel strands: a disk with real part on a strand fills two side
strips bounded by the nearest parallel obstruction lines, and a disk
centered at a double point fills four quadrant rectangles.  General
position input is refused rather than approximated.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence, Tuple

from ..novikov import INF, rat
from .curves import GeometryError, SIDE, TorusCurve, wrap_point

Rat = Fraction


class Box:
    """Axis-parallel keep-in box: disks must stay inside it."""

    def __init__(self, x0, x1, y0, y1):
        self.x0, self.x1 = rat(x0), rat(x1)
        self.y0, self.y1 = rat(y0), rat(y1)
        if self.x0 >= self.x1 or self.y0 >= self.y1:
            raise GeometryError("empty box")

    def contains(self, p) -> bool:
        return self.x0 <= p[0] <= self.x1 and self.y0 <= p[1] <= self.y1


def _strand_lines(curves: Sequence[TorusCurve]):
    """(vertical_line_coords, horizontal_line_coords), wrapped."""
    vs, hs = set(), set()
    for c in curves:
        for axis, coord, _ in c.strands():
            if axis == "v":
                vs.add(coord)
            else:
                hs.add(coord)
    return vs, hs


def _gaps(coord: Fraction, obstacles: set) -> Tuple[Fraction, Fraction]:
    """Wrap-aware distances to the nearest parallel obstruction line on
    either side; unobstructed sides share the complement evenly."""
    ds = sorted({(c - coord) % SIDE for c in obstacles if (c - coord) % SIDE != 0})
    if not ds:
        return SIDE / 2, SIDE / 2
    return ds[0], SIDE - ds[-1]


def gromov_width_rel(carrier: Sequence[TorusCurve], q: Sequence[TorusCurve]
                     ) -> Fraction:
    """delta(L; Q) via the strip-capacity formula.

    ``carrier`` is the union of curves representing L (the disk's real
    part); obstructions are Q plus the other carrier strands.  Strands
    collinear with Q are skipped; if every strand is skipped, L lies in
    Q and the width is 0.
    """
    for c in list(carrier) + list(q):
        if not c.axis_parallel():
            raise GeometryError("widths require axis-parallel curves")
    qv, qh = _strand_lines(q)
    all_strands = []
    for c in carrier:
        all_strands.extend(c.strands())
    best = Fraction(0)
    usable = 0
    for idx, (axis, coord, length) in enumerate(all_strands):
        q_lines = qv if axis == "v" else qh
        if coord in q_lines:
            continue  # strand rides on Q
        usable += 1
        others = {c2 for j, (a2, c2, _) in enumerate(all_strands)
                  if j != idx and a2 == axis and c2 != coord}
        obstacles = others | set(q_lines)
        g1, g2 = _gaps(coord, obstacles)
        best = max(best, 2 * length * min(g1, g2))
    return best if usable else Fraction(0)


def _point_on_lines(p, curves: Sequence[TorusCurve]) -> bool:
    for c in curves:
        for axis, coord, _ in c.strands():
            if axis == "v" and (p[0] - coord) % SIDE == 0:
                return True
            if axis == "h" and (p[1] - coord) % SIDE == 0:
                return True
    return False


def gromov_width_double_points(curves: Sequence[TorusCurve],
                               sigma: Sequence, q: Sequence[TorusCurve] = (),
                               boxes: Sequence[Box] = ()) -> Fraction:
    """delta^Sigma: quadrant capacities at each double point.

    Obstructions per direction are the strand lines not through the
    point, the Q-curves, and the keep-in boxes; the capacity at a point
    is 4 * min over quadrants of the product of the bounding gaps.
    Conventions: empty Sigma gives +infinity; Sigma inside Q gives 0.
    """
    if not sigma:
        return INF
    pts = [wrap_point((rat(p[0]), rat(p[1]))) for p in sigma]
    for c in list(curves) + list(q):
        if not c.axis_parallel():
            raise GeometryError("widths require axis-parallel curves")
    if all(_point_on_lines(p, q) for p in pts):
        return Fraction(0)
    vs, hs = _strand_lines(curves)
    qv, qh = _strand_lines(q)
    best = INF
    for p in pts:
        if _point_on_lines(p, q):
            return Fraction(0)
        v_lines = (vs | qv) - {c for c in vs | qv if (c - p[0]) % SIDE == 0}
        h_lines = (hs | qh) - {c for c in hs | qh if (c - p[1]) % SIDE == 0}
        g_e, g_w = _gaps(p[0], v_lines)
        g_n, g_s = _gaps(p[1], h_lines)
        for b in boxes:
            if b.contains(p):
                g_e = min(g_e, b.x1 - p[0])
                g_w = min(g_w, p[0] - b.x0)
                g_n = min(g_n, b.y1 - p[1])
                g_s = min(g_s, p[1] - b.y0)
        cap = 4 * min(g_e * g_n, g_e * g_s, g_w * g_n, g_w * g_s)
        best = min(best, cap)
    return best
