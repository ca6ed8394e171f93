"""2D geometry for the SVG pipeline.

Everything downstream (segmentation, pruning, masks, rendering) works on
drawables normalized to cubic/line subpaths in absolute coordinates.  Arcs
and the basic shapes are converted to cubics at parse time so that affine
transforms apply exactly to control points, and flattening happens once,
with a fixed absolute tolerance.

Areas use the shoelace formula on flattened closed outlines.  Stroke-only
outlines (``fill="none"``) have no enclosed area, so their covered area is
approximated as outline length times stroke width.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np

from .errors import ParseError, UnsupportedFeature

# cubic control-point offset approximating a quarter circle
KAPPA = 0.5522847498307936

_NUMBER = re.compile(r"[-+]?(?:\d*\.\d+|\d+\.?)(?:[eE][-+]?\d+)?")


# --------------------------------------------------------------------------
# affine transforms: (a, b, c, d, e, f) with x' = a x + c y + e, y' = b x + d y + f


Affine = tuple[float, float, float, float, float, float]

IDENTITY: Affine = (1.0, 0.0, 0.0, 1.0, 0.0, 0.0)


def compose(m1: Affine, m2: Affine) -> Affine:
    """m1 applied after m2 (matrix product m1 @ m2)."""
    a1, b1, c1, d1, e1, f1 = m1
    a2, b2, c2, d2, e2, f2 = m2
    return (
        a1 * a2 + c1 * b2,
        b1 * a2 + d1 * b2,
        a1 * c2 + c1 * d2,
        b1 * c2 + d1 * d2,
        a1 * e2 + c1 * f2 + e1,
        b1 * e2 + d1 * f2 + f1,
    )


def apply(m: Affine, x: float, y: float) -> tuple[float, float]:
    a, b, c, d, e, f = m
    return (a * x + c * y + e, b * x + d * y + f)


def determinant(m: Affine) -> float:
    return m[0] * m[3] - m[1] * m[2]


def translation(tx: float, ty: float) -> Affine:
    return (1.0, 0.0, 0.0, 1.0, tx, ty)


def scaling(sx: float, sy: float) -> Affine:
    return (sx, 0.0, 0.0, sy, 0.0, 0.0)


def rotation_deg(angle: float, cx: float = 0.0, cy: float = 0.0) -> Affine:
    rad = math.radians(angle)
    cos_a, sin_a = math.cos(rad), math.sin(rad)
    rot: Affine = (cos_a, sin_a, -sin_a, cos_a, 0.0, 0.0)
    if cx == 0.0 and cy == 0.0:
        return rot
    return compose(translation(cx, cy), compose(rot, translation(-cx, -cy)))


def parse_transform(text: str | None) -> Affine:
    """Parse an SVG transform list (matrix/translate/scale/rotate only)."""
    if not text or not text.strip():
        return IDENTITY
    matrix = IDENTITY
    pos = 0
    pattern = re.compile(r"\s*([a-zA-Z]+)\s*\(([^)]*)\)\s*,?")
    while pos < len(text):
        m = pattern.match(text, pos)
        if m is None:
            if text[pos:].strip():
                raise ParseError(f"bad transform syntax: {text[pos:]!r}")
            break
        name = m.group(1)
        args = [float(v) for v in _NUMBER.findall(m.group(2))]
        if name == "matrix" and len(args) == 6:
            op: Affine = tuple(args)  # type: ignore[assignment]
        elif name == "translate" and len(args) in (1, 2):
            op = translation(args[0], args[1] if len(args) == 2 else 0.0)
        elif name == "scale" and len(args) in (1, 2):
            op = scaling(args[0], args[1] if len(args) == 2 else args[0])
        elif name == "rotate" and len(args) in (1, 3):
            op = rotation_deg(*args)
        else:
            raise UnsupportedFeature(f"unsupported transform: {name}({m.group(2)})")
        matrix = compose(matrix, op)
        pos = m.end()
    return matrix


# --------------------------------------------------------------------------
# path model: subpaths of line/cubic segments in absolute coordinates


@dataclass
class Subpath:
    start: tuple[float, float]
    # each segment: ("L", (x, y)) or ("C", (x1, y1), (x2, y2), (x, y))
    segments: list[tuple] = field(default_factory=list)
    closed: bool = False

    def end_point(self) -> tuple[float, float]:
        return self.segments[-1][-1] if self.segments else self.start

    def transformed(self, m: Affine) -> "Subpath":
        segs = []
        for seg in self.segments:
            segs.append((seg[0], *[apply(m, *p) for p in seg[1:]]))
        return Subpath(apply(m, *self.start), segs, self.closed)


def _tokenize_path(d: str):
    """Yield command letters and floats; arc flags handled by the caller."""
    i, n = 0, len(d)
    while i < n:
        ch = d[i]
        if ch.isalpha():
            yield ch
            i += 1
        elif ch in " ,\t\n\r":
            i += 1
        else:
            m = _NUMBER.match(d, i)
            if m is None:
                raise ParseError(f"bad path data near {d[i:i + 12]!r}")
            yield float(m.group(0))
            i = m.end()


class _PathScanner:
    def __init__(self, d: str):
        self.tokens = list(_tokenize_path(d))
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def number(self) -> float:
        tok = self.peek()
        if not isinstance(tok, float):
            raise ParseError(f"expected number, got {tok!r}")
        self.pos += 1
        return tok

    def flag(self) -> int:
        # arc flags are single 0/1 digits that may be glued to the next number
        tok = self.peek()
        if not isinstance(tok, float):
            raise ParseError(f"expected arc flag, got {tok!r}")
        if tok in (0.0, 1.0):
            self.pos += 1
            return int(tok)
        # glued form like "011.5": strip one leading digit
        text = repr(tok)
        raise ParseError(f"cannot split arc flags from {text}; separate them with spaces")


def _arc_to_cubics(p0, rx, ry, rot_deg, large, sweep, p1) -> list[tuple]:
    """Convert an endpoint-parameterized arc into cubic segments."""
    x0, y0 = p0
    x1, y1 = p1
    if (x0, y0) == (x1, y1):
        return []
    rx, ry = abs(rx), abs(ry)
    if rx == 0 or ry == 0:
        return [("L", (x1, y1))]
    phi = math.radians(rot_deg % 360)
    cos_phi, sin_phi = math.cos(phi), math.sin(phi)
    # SVG implementation notes F.6.5
    dx2, dy2 = (x0 - x1) / 2.0, (y0 - y1) / 2.0
    x1p = cos_phi * dx2 + sin_phi * dy2
    y1p = -sin_phi * dx2 + cos_phi * dy2
    lam = (x1p / rx) ** 2 + (y1p / ry) ** 2
    if lam > 1:
        s = math.sqrt(lam)
        rx, ry = rx * s, ry * s
    num = rx * rx * ry * ry - rx * rx * y1p * y1p - ry * ry * x1p * x1p
    den = rx * rx * y1p * y1p + ry * ry * x1p * x1p
    coef = math.sqrt(max(0.0, num / den)) if den else 0.0
    if large == sweep:
        coef = -coef
    cxp = coef * rx * y1p / ry
    cyp = -coef * ry * x1p / rx
    cx = cos_phi * cxp - sin_phi * cyp + (x0 + x1) / 2.0
    cy = sin_phi * cxp + cos_phi * cyp + (y0 + y1) / 2.0

    def angle(ux, uy, vx, vy):
        dot = ux * vx + uy * vy
        norm = math.hypot(ux, uy) * math.hypot(vx, vy)
        a = math.acos(max(-1.0, min(1.0, dot / norm)))
        return -a if ux * vy - uy * vx < 0 else a

    theta1 = angle(1, 0, (x1p - cxp) / rx, (y1p - cyp) / ry)
    dtheta = angle((x1p - cxp) / rx, (y1p - cyp) / ry,
                   (-x1p - cxp) / rx, (-y1p - cyp) / ry)
    if not sweep and dtheta > 0:
        dtheta -= 2 * math.pi
    elif sweep and dtheta < 0:
        dtheta += 2 * math.pi

    n_seg = max(1, math.ceil(abs(dtheta) / (math.pi / 2)))
    delta = dtheta / n_seg
    t = 4.0 / 3.0 * math.tan(delta / 4.0)
    segs = []
    for i in range(n_seg):
        a0 = theta1 + i * delta
        a1 = a0 + delta
        cos0, sin0 = math.cos(a0), math.sin(a0)
        cos1, sin1 = math.cos(a1), math.sin(a1)

        def pt(ca, sa):
            xe = cx + rx * cos_phi * ca - ry * sin_phi * sa
            ye = cy + rx * sin_phi * ca + ry * cos_phi * sa
            return (xe, ye)

        def deriv(ca, sa):
            dxe = -rx * cos_phi * sa - ry * sin_phi * ca
            dye = -rx * sin_phi * sa + ry * cos_phi * ca
            return (dxe, dye)

        s0, e1 = pt(cos0, sin0), pt(cos1, sin1)
        d0, d1 = deriv(cos0, sin0), deriv(cos1, sin1)
        c1 = (s0[0] + t * d0[0], s0[1] + t * d0[1])
        c2 = (e1[0] - t * d1[0], e1[1] - t * d1[1])
        segs.append(("C", c1, c2, e1))
    return segs


def parse_path_data(d: str) -> list[Subpath]:
    """Parse SVG path data into absolute cubic/line subpaths."""
    sc = _PathScanner(d)
    subpaths: list[Subpath] = []
    current: Subpath | None = None
    cx = cy = 0.0           # current point
    sx = sy = 0.0           # subpath start
    last_cmd = ""
    last_cubic_ctrl = None  # for S
    last_quad_ctrl = None   # for T

    def flush():
        nonlocal current
        if current is not None and (current.segments or current.closed):
            subpaths.append(current)
        current = None

    while sc.peek() is not None:
        tok = sc.peek()
        if isinstance(tok, str):
            cmd = tok
            sc.pos += 1
        else:
            # implicit repeat; M/m repeats as L/l
            if last_cmd in ("M",):
                cmd = "L"
            elif last_cmd in ("m",):
                cmd = "l"
            elif last_cmd:
                cmd = last_cmd
            else:
                raise ParseError("path data must start with a moveto")
        rel = cmd.islower()
        op = cmd.upper()

        if op == "M":
            x, y = sc.number(), sc.number()
            if rel:
                x, y = cx + x, cy + y
            flush()
            current = Subpath((x, y))
            cx, cy, sx, sy = x, y, x, y
        elif op == "Z":
            if current is not None:
                current.closed = True
                cx, cy = sx, sy
                flush()
        elif op == "L":
            x, y = sc.number(), sc.number()
            if rel:
                x, y = cx + x, cy + y
            if current is None:
                raise ParseError("lineto before moveto")
            current.segments.append(("L", (x, y)))
            cx, cy = x, y
        elif op == "H":
            x = sc.number()
            x = cx + x if rel else x
            current.segments.append(("L", (x, cy)))
            cx = x
        elif op == "V":
            y = sc.number()
            y = cy + y if rel else y
            current.segments.append(("L", (cx, y)))
            cy = y
        elif op in ("C", "S"):
            if op == "C":
                x1, y1 = sc.number(), sc.number()
                if rel:
                    x1, y1 = cx + x1, cy + y1
            else:
                if last_cmd.upper() in ("C", "S") and last_cubic_ctrl is not None:
                    x1, y1 = 2 * cx - last_cubic_ctrl[0], 2 * cy - last_cubic_ctrl[1]
                else:
                    x1, y1 = cx, cy
            x2, y2 = sc.number(), sc.number()
            if rel:
                x2, y2 = cx + x2, cy + y2
            x, y = sc.number(), sc.number()
            if rel:
                x, y = cx + x, cy + y
            current.segments.append(("C", (x1, y1), (x2, y2), (x, y)))
            last_cubic_ctrl = (x2, y2)
            cx, cy = x, y
        elif op in ("Q", "T"):
            if op == "Q":
                qx, qy = sc.number(), sc.number()
                if rel:
                    qx, qy = cx + qx, cy + qy
            else:
                if last_cmd.upper() in ("Q", "T") and last_quad_ctrl is not None:
                    qx, qy = 2 * cx - last_quad_ctrl[0], 2 * cy - last_quad_ctrl[1]
                else:
                    qx, qy = cx, cy
            x, y = sc.number(), sc.number()
            if rel:
                x, y = cx + x, cy + y
            # quadratic -> cubic
            c1 = (cx + 2.0 / 3.0 * (qx - cx), cy + 2.0 / 3.0 * (qy - cy))
            c2 = (x + 2.0 / 3.0 * (qx - x), y + 2.0 / 3.0 * (qy - y))
            current.segments.append(("C", c1, c2, (x, y)))
            last_quad_ctrl = (qx, qy)
            cx, cy = x, y
        elif op == "A":
            rx, ry = sc.number(), sc.number()
            rot = sc.number()
            large, sweep = sc.flag(), sc.flag()
            x, y = sc.number(), sc.number()
            if rel:
                x, y = cx + x, cy + y
            current.segments.extend(_arc_to_cubics((cx, cy), rx, ry, rot, large, sweep, (x, y)))
            cx, cy = x, y
        else:
            raise ParseError(f"unknown path command {cmd!r}")
        if op not in ("C", "S"):
            last_cubic_ctrl = None
        if op not in ("Q", "T"):
            last_quad_ctrl = None
        last_cmd = cmd
    flush()
    return subpaths


def subpaths_to_d(subpaths: list[Subpath], precision: int = 4) -> str:
    """Re-emit subpaths as SVG path data (deterministic formatting)."""
    parts = []
    for sp in subpaths:
        parts.append(f"M {fmt(sp.start[0], precision)} {fmt(sp.start[1], precision)}")
        for seg in sp.segments:
            if seg[0] == "L":
                parts.append(f"L {fmt(seg[1][0], precision)} {fmt(seg[1][1], precision)}")
            else:
                (x1, y1), (x2, y2), (x, y) = seg[1], seg[2], seg[3]
                parts.append(
                    "C " + " ".join(fmt(v, precision) for v in (x1, y1, x2, y2, x, y))
                )
        if sp.closed:
            parts.append("Z")
    return " ".join(parts)


def fmt(value: float, precision: int = 4) -> str:
    """Stable float formatting for byte-reproducible SVG output."""
    if value != value:  # NaN guard
        raise ValueError("NaN in geometry output")
    text = f"{value:.{precision}f}"
    text = text.rstrip("0").rstrip(".")
    return "0" if text in ("-0", "") else text


# --------------------------------------------------------------------------
# shapes -> subpaths


def circle_subpaths(cx: float, cy: float, r: float) -> list[Subpath]:
    return ellipse_subpaths(cx, cy, r, r)


def ellipse_subpaths(cx: float, cy: float, rx: float, ry: float) -> list[Subpath]:
    kx, ky = KAPPA * rx, KAPPA * ry
    sp = Subpath((cx + rx, cy))
    sp.segments = [
        ("C", (cx + rx, cy + ky), (cx + kx, cy + ry), (cx, cy + ry)),
        ("C", (cx - kx, cy + ry), (cx - rx, cy + ky), (cx - rx, cy)),
        ("C", (cx - rx, cy - ky), (cx - kx, cy - ry), (cx, cy - ry)),
        ("C", (cx + kx, cy - ry), (cx + rx, cy - ky), (cx + rx, cy)),
    ]
    sp.closed = True
    return [sp]


def rect_subpaths(x: float, y: float, w: float, h: float,
                  rx: float = 0.0, ry: float = 0.0) -> list[Subpath]:
    if rx == 0.0 and ry == 0.0:
        sp = Subpath((x, y))
        sp.segments = [("L", (x + w, y)), ("L", (x + w, y + h)), ("L", (x, y + h))]
        sp.closed = True
        return [sp]
    rx = min(rx if rx else ry, w / 2)
    ry = min(ry if ry else rx, h / 2)
    kx, ky = KAPPA * rx, KAPPA * ry
    sp = Subpath((x + rx, y))
    sp.segments = [
        ("L", (x + w - rx, y)),
        ("C", (x + w - rx + kx, y), (x + w, y + ry - ky), (x + w, y + ry)),
        ("L", (x + w, y + h - ry)),
        ("C", (x + w, y + h - ry + ky), (x + w - rx + kx, y + h), (x + w - rx, y + h)),
        ("L", (x + rx, y + h)),
        ("C", (x + rx - kx, y + h), (x, y + h - ry + ky), (x, y + h - ry)),
        ("L", (x, y + ry)),
        ("C", (x, y + ry - ky), (x + rx - kx, y), (x + rx, y)),
    ]
    sp.closed = True
    return [sp]


def polyline_subpaths(points: list[tuple[float, float]], closed: bool) -> list[Subpath]:
    if len(points) < 2:
        raise ParseError("polyline/polygon needs at least 2 points")
    sp = Subpath(points[0])
    sp.segments = [("L", p) for p in points[1:]]
    sp.closed = closed
    return [sp]


# --------------------------------------------------------------------------
# flattening


def _flatten_cubic(p0, p1, p2, p3, tol: float, out: list, depth: int = 0) -> None:
    # flat when control points sit within tol of the chord
    dx, dy = p3[0] - p0[0], p3[1] - p0[1]
    chord2 = dx * dx + dy * dy
    if chord2 < 1e-24:
        # closing loop; flat only once the control net collapses too
        far2 = max((p1[0] - p0[0]) ** 2 + (p1[1] - p0[1]) ** 2,
                   (p2[0] - p0[0]) ** 2 + (p2[1] - p0[1]) ** 2)
        if depth >= 24 or far2 <= tol * tol:
            out.append(p3)
            return
    else:
        d1 = abs((p1[0] - p0[0]) * dy - (p1[1] - p0[1]) * dx)
        d2 = abs((p2[0] - p0[0]) * dy - (p2[1] - p0[1]) * dx)
        if depth >= 24 or (d1 + d2) ** 2 <= tol * tol * chord2 * 4:
            out.append(p3)
            return
    mid = lambda a, b: ((a[0] + b[0]) / 2, (a[1] + b[1]) / 2)
    p01, p12, p23 = mid(p0, p1), mid(p1, p2), mid(p2, p3)
    p012, p123 = mid(p01, p12), mid(p12, p23)
    p0123 = mid(p012, p123)
    _flatten_cubic(p0, p01, p012, p0123, tol, out, depth + 1)
    _flatten_cubic(p0123, p123, p23, p3, tol, out, depth + 1)


@dataclass
class FlatSubpath:
    points: np.ndarray  # (n, 2) float64
    closed: bool


def flatten_subpath(sp: Subpath, tol: float = 0.1) -> FlatSubpath:
    pts: list[tuple[float, float]] = [sp.start]
    cur = sp.start
    for seg in sp.segments:
        if seg[0] == "L":
            pts.append(seg[1])
            cur = seg[1]
        else:
            out: list[tuple[float, float]] = []
            _flatten_cubic(cur, seg[1], seg[2], seg[3], tol, out)
            pts.extend(out)
            cur = seg[3]
    return FlatSubpath(np.asarray(pts, dtype=float), sp.closed)


def flatten(subpaths: list[Subpath], tol: float = 0.1) -> list[FlatSubpath]:
    return [flatten_subpath(sp, tol) for sp in subpaths]


# --------------------------------------------------------------------------
# metrics on flattened geometry


def bbox_of(flat: list[FlatSubpath]) -> tuple[float, float, float, float]:
    """Axis-aligned (xmin, ymin, xmax, ymax) over all points."""
    all_pts = np.vstack([f.points for f in flat if len(f.points)])
    xmin, ymin = all_pts.min(axis=0)
    xmax, ymax = all_pts.max(axis=0)
    return (float(xmin), float(ymin), float(xmax), float(ymax))


def shoelace(points: np.ndarray) -> float:
    """Signed polygon area (closing edge implied)."""
    if len(points) < 3:
        return 0.0
    x, y = points[:, 0], points[:, 1]
    return float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))) / 2.0


def outline_length(points: np.ndarray, closed: bool) -> float:
    if len(points) < 2:
        return 0.0
    diffs = np.diff(points, axis=0)
    total = float(np.hypot(diffs[:, 0], diffs[:, 1]).sum())
    if closed:
        total += float(math.hypot(*(points[0] - points[-1])))
    return total


def covered_area(flat: list[FlatSubpath], filled: bool, stroke_width: float = 1.0) -> float:
    """Visual area of one drawable.

    Filled drawables use the signed shoelace sum so holes subtract; unfilled
    ones are strokes, approximated by outline length x stroke width.
    """
    if filled:
        return abs(sum(shoelace(f.points) for f in flat))
    return sum(outline_length(f.points, f.closed) for f in flat) * max(stroke_width, 0.0)


def resample_closed(points: np.ndarray, n: int = 256) -> np.ndarray:
    """Resample a closed outline to n points uniform in arc length."""
    pts = np.asarray(points, dtype=float)
    if len(pts) < 3:
        return pts.copy()
    if not np.allclose(pts[0], pts[-1]):
        pts = np.vstack([pts, pts[0]])
    seg = np.hypot(*(np.diff(pts, axis=0).T))
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    total = cum[-1]
    if total <= 0:
        return pts[:-1].copy()
    targets = np.linspace(0.0, total, n, endpoint=False)
    idx = np.searchsorted(cum, targets, side="right") - 1
    idx = np.clip(idx, 0, len(seg) - 1)
    frac = (targets - cum[idx]) / np.where(seg[idx] > 0, seg[idx], 1.0)
    return pts[idx] + (pts[idx + 1] - pts[idx]) * frac[:, None]


def radial_cv(points: np.ndarray, samples: int = 256) -> float:
    """Coefficient of variation of outline distance from the outline centroid."""
    rs = resample_closed(points, samples)
    center = rs.mean(axis=0)
    dists = np.hypot(*(rs - center).T)
    mean = dists.mean()
    if mean <= 0:
        return math.inf
    return float(dists.std() / mean)


# --------------------------------------------------------------------------
# rectangles (for glyph overlap scoring)


Rect = tuple[float, float, float, float]  # xmin, ymin, xmax, ymax


def rect_area(r: Rect) -> float:
    return max(0.0, r[2] - r[0]) * max(0.0, r[3] - r[1])


def rect_intersection(a: Rect, b: Rect) -> Rect | None:
    xmin, ymin = max(a[0], b[0]), max(a[1], b[1])
    xmax, ymax = min(a[2], b[2]), min(a[3], b[3])
    if xmin >= xmax or ymin >= ymax:
        return None
    return (xmin, ymin, xmax, ymax)


def union_area(rects: list[Rect]) -> float:
    """Area of the union of axis-aligned rectangles (coordinate compression)."""
    rects = [r for r in rects if rect_area(r) > 0]
    if not rects:
        return 0.0
    xs = sorted({r[0] for r in rects} | {r[2] for r in rects})
    ys = sorted({r[1] for r in rects} | {r[3] for r in rects})
    total = 0.0
    for i in range(len(xs) - 1):
        for j in range(len(ys) - 1):
            cx = (xs[i] + xs[i + 1]) / 2
            cy = (ys[j] + ys[j + 1]) / 2
            if any(r[0] <= cx <= r[2] and r[1] <= cy <= r[3] for r in rects):
                total += (xs[i + 1] - xs[i]) * (ys[j + 1] - ys[j])
    return total


# --------------------------------------------------------------------------
# rasterization (element masks for relevance scoring)


def rasterize_mask(flat: list[FlatSubpath], frame: Rect, size: int,
                   filled: bool = True, stroke_width: float = 1.0) -> np.ndarray:
    """Boolean occupancy mask of a drawable over a square raster of ``frame``.

    Closed outlines fill with the even-odd rule; open ones mark pixels whose
    center lies within half the stroke width of the outline.
    """
    xmin, ymin, xmax, ymax = frame
    w = max(xmax - xmin, 1e-12)
    h = max(ymax - ymin, 1e-12)
    px = (np.arange(size) + 0.5) / size * w + xmin
    py = (np.arange(size) + 0.5) / size * h + ymin
    mask = np.zeros((size, size), dtype=bool)

    if filled:
        crossings = np.zeros((size, size), dtype=np.int32)
        for f in flat:
            pts = f.points
            if len(pts) < 3:
                continue
            closed = pts if np.allclose(pts[0], pts[-1]) else np.vstack([pts, pts[0]])
            x0, y0 = closed[:-1, 0], closed[:-1, 1]
            x1, y1 = closed[1:, 0], closed[1:, 1]
            for k in range(len(x0)):
                ya, yb = y0[k], y1[k]
                if ya == yb:
                    continue
                lo, hi = (ya, yb) if ya < yb else (yb, ya)
                rows = np.nonzero((py >= lo) & (py < hi))[0]
                if len(rows) == 0:
                    continue
                t = (py[rows] - y0[k]) / (y1[k] - y0[k])
                xi = x0[k] + t * (x1[k] - x0[k])
                crossings[rows] += (px[None, :] < xi[:, None]).astype(np.int32)
        mask |= (crossings % 2) == 1
    else:
        half = max(stroke_width, w / size) / 2.0
        gx, gy = np.meshgrid(px, py)
        for f in flat:
            pts = f.points
            if len(pts) < 2:
                continue
            chain = np.vstack([pts, pts[0]]) if f.closed else pts
            for k in range(len(chain) - 1):
                ax, ay = chain[k]
                bx, by = chain[k + 1]
                dx, dy = bx - ax, by - ay
                norm2 = dx * dx + dy * dy
                if norm2 == 0:
                    d2 = (gx - ax) ** 2 + (gy - ay) ** 2
                else:
                    t = np.clip(((gx - ax) * dx + (gy - ay) * dy) / norm2, 0.0, 1.0)
                    d2 = (gx - (ax + t * dx)) ** 2 + (gy - (ay + t * dy)) ** 2
                mask |= d2 <= half * half
    return mask
