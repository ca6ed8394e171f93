"""Candidate image acquisition and decomposition into visual elements.

An SVG candidate goes through segmentation (one element per drawable leaf,
transforms flattened), pruning (tiny overlapped elements set aside),
structure detection (radial vs non-radial with a slope), and augmentation
tagging (circular elements may be swapped for charts).  The result is an
element list ready for mapping search.
"""

from __future__ import annotations

import base64
import hashlib
import json
import logging
import math
import re
import threading
import time
import warnings
import xml.etree.ElementTree as ET
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path

import numpy as np

from . import geometry
from .config import DecomposeConfig
from .errors import (
    AllPruned,
    DominantElement,
    NoSource,
    ParseError,
    RemoteUnavailable,
    TooComplex,
    TooSimple,
    UnsupportedFeature,
)
from .geometry import Affine, FlatSubpath, Subpath

log = logging.getLogger(__name__)

_DRAWABLE_TAGS = {"path", "circle", "ellipse", "rect", "line", "polyline", "polygon"}
_CONTAINER_TAGS = {"svg", "g", "a"}
_IGNORED_TAGS = {"title", "desc", "metadata", "style", "defs", "namedview", "sodipodi:namedview"}
_UNSUPPORTED_TAGS = {"image", "use", "text", "tspan", "filter", "mask", "clipPath",
                     "pattern", "foreignObject", "switch", "symbol", "marker"}


class ImageSource(str, Enum):
    LOCAL_CORPUS = "local_corpus"
    REMOTE = "remote"


@dataclass(frozen=True)
class MetaphorCandidate:
    id: str
    source: ImageSource
    svg_bytes: bytes
    keywords: tuple[str, ...] = ()


@dataclass(frozen=True)
class ElementStyle:
    fill: str | None = "black"
    stroke: str | None = None
    stroke_width: float = 1.0
    opacity: float | None = None

    @property
    def filled(self) -> bool:
        return self.fill is not None and self.fill != "none"


@dataclass(frozen=True)
class Element:
    index: int
    subpaths: tuple[Subpath, ...]            # absolute coords, cubic/line form
    flat: tuple[FlatSubpath, ...]            # flattened outlines
    center: tuple[float, float]              # bbox centroid
    area: float
    bbox: tuple[float, float, float, float]
    style: ElementStyle = ElementStyle()
    shape_kind: str = "path"
    axis_ratio: float | None = None          # transformed major/minor for circles
    augmentable: bool = False
    label: str | None = None
    removed: bool = False

    def path_data(self) -> str:
        return geometry.subpaths_to_d(list(self.subpaths))


class StructureKind(str, Enum):
    RADIAL = "radial"
    NON_RADIAL = "non_radial"


@dataclass(frozen=True)
class ElementList:
    elements: tuple[Element, ...]            # indices 1..n, removed ones retained
    whole_image: Element                     # index 0, the full composition
    structure: StructureKind
    slope: float | None
    collinear: bool
    source_id: str
    canvas_bbox: tuple[float, float, float, float]

    @property
    def essential(self) -> tuple[Element, ...]:
        return tuple(e for e in self.elements if not e.removed)

    @property
    def removed(self) -> tuple[Element, ...]:
        return tuple(e for e in self.elements if e.removed)

    def element(self, index: int) -> Element:
        if index == 0:
            return self.whole_image
        for e in self.elements:
            if e.index == index:
                return e
        raise KeyError(index)


# --------------------------------------------------------------------------
# SVG parsing


def _strip_ns(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def _parse_style_attr(text: str) -> dict[str, str]:
    out = {}
    for decl in text.split(";"):
        if ":" in decl:
            key, value = decl.split(":", 1)
            out[key.strip()] = value.strip()
    return out


def _style_from(node: ET.Element, inherited: ElementStyle) -> ElementStyle:
    props = dict()
    for attr in ("fill", "stroke", "stroke-width", "opacity"):
        if attr in node.attrib:
            props[attr] = node.attrib[attr]
    if "style" in node.attrib:
        inline = _parse_style_attr(node.attrib["style"])
        for attr in ("fill", "stroke", "stroke-width", "opacity"):
            if attr in inline:
                props[attr] = inline[attr]
    fill = props.get("fill", inherited.fill)
    stroke = props.get("stroke", inherited.stroke)
    for paint in (fill, stroke):
        if paint and paint.startswith("url("):
            raise UnsupportedFeature(f"paint references are unsupported: {paint}")
    try:
        width = float(props["stroke-width"]) if "stroke-width" in props else inherited.stroke_width
    except ValueError:
        width = inherited.stroke_width
    opacity = inherited.opacity
    if "opacity" in props:
        try:
            opacity = float(props["opacity"])
        except ValueError:
            pass
    return ElementStyle(fill=fill, stroke=stroke, stroke_width=width, opacity=opacity)


def _floats(node: ET.Element, *names: str, defaults: dict | None = None) -> list[float]:
    defaults = defaults or {}
    out = []
    for name in names:
        raw = node.attrib.get(name)
        if raw is None:
            out.append(float(defaults.get(name, 0.0)))
        else:
            out.append(float(raw.strip().removesuffix("px")))
    return out


def _shape_subpaths(tag: str, node: ET.Element) -> tuple[list[Subpath], str]:
    if tag == "path":
        d = node.attrib.get("d", "")
        if not d.strip():
            raise ParseError("path without d attribute")
        return geometry.parse_path_data(d), "path"
    if tag == "circle":
        cx, cy, r = _floats(node, "cx", "cy", "r")
        return geometry.circle_subpaths(cx, cy, r), "circle"
    if tag == "ellipse":
        cx, cy, rx, ry = _floats(node, "cx", "cy", "rx", "ry")
        return geometry.ellipse_subpaths(cx, cy, rx, ry), "ellipse"
    if tag == "rect":
        x, y, w, h, rx, ry = _floats(node, "x", "y", "width", "height", "rx", "ry")
        return geometry.rect_subpaths(x, y, w, h, rx, ry), "rect"
    if tag == "line":
        x1, y1, x2, y2 = _floats(node, "x1", "y1", "x2", "y2")
        return geometry.polyline_subpaths([(x1, y1), (x2, y2)], closed=False), "line"
    if tag in ("polyline", "polygon"):
        nums = [float(v) for v in geometry._NUMBER.findall(node.attrib.get("points", ""))]
        pts = list(zip(nums[0::2], nums[1::2]))
        return geometry.polyline_subpaths(pts, closed=(tag == "polygon")), tag
    raise UnsupportedFeature(f"unsupported drawable: {tag}")


def _transformed_axis_ratio(kind: str, node: ET.Element, m: Affine) -> float | None:
    """Major/minor axis ratio of a circle or ellipse after the transform."""
    if kind == "circle":
        r = _floats(node, "r")[0]
        rx = ry = r
    elif kind == "ellipse":
        rx, ry = _floats(node, "rx", "ry")
    else:
        return None
    if rx <= 0 or ry <= 0:
        return None
    mat = np.array([[m[0], m[2]], [m[1], m[3]]]) @ np.diag([rx, ry])
    sv = np.linalg.svd(mat, compute_uv=False)
    if sv[1] <= 0:
        return math.inf
    return float(sv[0] / sv[1])


def _label_of(node: ET.Element) -> str | None:
    for child in node:
        if _strip_ns(child.tag) == "title" and child.text and child.text.strip():
            return child.text.strip()
    for attr in ("id", "class"):
        value = node.attrib.get(attr, "").strip()
        if value:
            return value
    return None


def _viewbox(root: ET.Element) -> tuple[float, float, float, float] | None:
    raw = root.attrib.get("viewBox")
    if not raw:
        return None
    nums = [float(v) for v in geometry._NUMBER.findall(raw)]
    if len(nums) != 4:
        raise ParseError(f"bad viewBox: {raw!r}")
    x, y, w, h = nums
    return (x, y, x + w, y + h)


def segment(candidate: MetaphorCandidate,
            config: DecomposeConfig | None = None) -> list[Element]:
    """Decompose an SVG into one Element per drawable leaf.

    Transforms are flattened into absolute coordinates; shapes are
    normalized to path form.  Raises UnsupportedFeature on rasters,
    filters, paint references, and other constructs outside the subset.
    """
    config = config or DecomposeConfig()
    try:
        root = ET.fromstring(candidate.svg_bytes)
    except ET.ParseError as exc:
        raise ParseError(f"not well-formed SVG: {exc}") from exc
    if _strip_ns(root.tag) != "svg":
        raise ParseError(f"root element is <{_strip_ns(root.tag)}>, expected <svg>")

    elements: list[Element] = []

    def walk(node: ET.Element, m: Affine, style: ElementStyle):
        tag = _strip_ns(node.tag)
        if tag in _IGNORED_TAGS:
            return
        if tag in _UNSUPPORTED_TAGS:
            raise UnsupportedFeature(f"<{tag}> is outside the supported SVG subset")
        if "filter" in node.attrib or "clip-path" in node.attrib or "mask" in node.attrib:
            raise UnsupportedFeature("filter/clip-path/mask attributes are unsupported")
        local = geometry.compose(m, geometry.parse_transform(node.attrib.get("transform")))
        if tag in _CONTAINER_TAGS:
            child_style = _style_from(node, style)
            for child in node:
                walk(child, local, child_style)
            return
        if tag not in _DRAWABLE_TAGS:
            # unknown namespaced extensions are ignorable metadata
            if ":" in node.tag or node.tag.startswith("{"):
                return
            raise UnsupportedFeature(f"<{tag}> is outside the supported SVG subset")
        node_style = _style_from(node, style)
        subpaths, kind = _shape_subpaths(tag, node)
        moved = tuple(sp.transformed(local) for sp in subpaths)
        scale = math.sqrt(abs(geometry.determinant(local)))
        flat = tuple(geometry.flatten(list(moved), config.flatten_tolerance))
        if not any(len(f.points) for f in flat):
            return
        bbox = geometry.bbox_of(list(flat))
        area = geometry.covered_area(
            list(flat), node_style.filled, node_style.stroke_width * scale)
        elements.append(Element(
            index=len(elements) + 1,
            subpaths=moved,
            flat=flat,
            center=((bbox[0] + bbox[2]) / 2, (bbox[1] + bbox[3]) / 2),
            area=area,
            bbox=bbox,
            style=replace(node_style, stroke_width=node_style.stroke_width * scale),
            shape_kind=kind,
            axis_ratio=_transformed_axis_ratio(kind, node, local),
            label=_label_of(node),
        ))

    base_style = ElementStyle()
    walk(root, geometry.IDENTITY, base_style)
    if not elements:
        raise ParseError("SVG contains no drawable elements")
    return elements


def whole_image_element(elements: list[Element]) -> Element:
    """Compose e_0 (index 0) from every segmented element, removed included."""
    bbox = (
        min(e.bbox[0] for e in elements),
        min(e.bbox[1] for e in elements),
        max(e.bbox[2] for e in elements),
        max(e.bbox[3] for e in elements),
    )
    return Element(
        index=0,
        subpaths=tuple(sp for e in elements for sp in e.subpaths),
        flat=tuple(f for e in elements for f in e.flat),
        center=((bbox[0] + bbox[2]) / 2, (bbox[1] + bbox[3]) / 2),
        area=geometry.rect_area(bbox),
        bbox=bbox,
        shape_kind="composition",
        label="whole image",
    )


# --------------------------------------------------------------------------
# pruning


def prune(elements: list[Element], min_area_fraction: float,
          whole_bbox_area: float | None = None) -> tuple[list[Element], list[Element]]:
    """Set aside tiny elements that overlap a larger one.

    An element is removed when its area is below ``min_area_fraction`` of
    the whole-image bbox area AND its bbox intersects some larger element.
    Removed elements are retained for the reinstatement pass at render time.
    """
    if not elements:
        raise ParseError("nothing to prune")
    if whole_bbox_area is None:
        whole_bbox_area = geometry.rect_area(whole_image_element(elements).bbox)
    if whole_bbox_area <= 0:
        raise ParseError("whole-image area must be positive")
    cutoff = min_area_fraction * whole_bbox_area
    essential: list[Element] = []
    removed: list[Element] = []
    for e in elements:
        tiny = e.area < cutoff
        overlapped = tiny and any(
            other.area > e.area
            and geometry.rect_intersection(e.bbox, other.bbox) is not None
            for other in elements
            if other.index != e.index
        )
        if tiny and overlapped:
            removed.append(replace(e, removed=True))
        else:
            essential.append(replace(e, removed=False))
    if not essential:
        raise AllPruned("every element was pruned")
    return essential, removed


# --------------------------------------------------------------------------
# structure detection


def detect_structure(essential: list[Element], whole_image: Element,
                     config: DecomposeConfig | None = None,
                     ) -> tuple[StructureKind, float | None, bool]:
    """Classify the composition as radial or non-radial.

    Radial: more than one essential center sits within the origin-proximity
    radius (a fraction of the bbox diagonal) of the rough origin, the
    whole-image center.  Otherwise a least-squares line is fitted through
    the centers; its slope is recorded, with a collinearity flag telling
    whether every center sits within the same radius of the line.
    """
    config = config or DecomposeConfig()
    if len(essential) < 2:
        raise TooSimple("structure detection needs at least 2 essential elements")
    bbox = whole_image.bbox
    diag = math.hypot(bbox[2] - bbox[0], bbox[3] - bbox[1])
    rho = config.origin_radius_fraction * diag
    origin = whole_image.center
    near_origin = sum(
        1 for e in essential if math.dist(e.center, origin) <= rho
    )
    if near_origin > 1:
        return StructureKind.RADIAL, None, False

    pts = np.array([e.center for e in essential], dtype=float)
    centered = pts - pts.mean(axis=0)
    # principal direction via the 2x2 covariance eigenvector
    cov = centered.T @ centered
    eigvals, eigvecs = np.linalg.eigh(cov)
    direction = eigvecs[:, int(np.argmax(eigvals))]
    dx, dy = float(direction[0]), float(direction[1])
    slope = math.inf if abs(dx) < 1e-12 else dy / dx
    normal = np.array([-dy, dx])
    norm = np.linalg.norm(normal)
    deviations = np.abs(centered @ normal) / norm if norm > 0 else np.zeros(len(pts))
    collinear = bool(np.max(deviations) <= rho)
    return StructureKind.NON_RADIAL, slope, collinear


# --------------------------------------------------------------------------
# augmentation tagging


def _is_circular(e: Element, config: DecomposeConfig) -> bool:
    lo, hi = config.ellipse_ratio_band
    if e.axis_ratio is not None:
        return lo <= 1.0 / e.axis_ratio <= hi or lo <= e.axis_ratio <= hi
    closed = [f for f in e.flat if f.closed and len(f.points) >= 3]
    if not closed and e.style.filled:
        closed = [f for f in e.flat if len(f.points) >= 3]
    if not closed:
        return False
    outline = max(closed, key=lambda f: abs(geometry.shoelace(f.points)))
    return geometry.radial_cv(outline.points) <= config.circularity_cv


def tag_augmentable(essential: list[Element],
                    config: DecomposeConfig | None = None) -> list[Element]:
    """Set the augmentable flag on circular elements.

    Circles/ellipses qualify by their transformed axis ratio; closed paths
    by the coefficient of variation of outline distance from the centroid.
    """
    config = config or DecomposeConfig()
    return [replace(e, augmentable=_is_circular(e, config)) for e in essential]


# --------------------------------------------------------------------------
# full decomposition


def build_element_list(candidate: MetaphorCandidate,
                       config: DecomposeConfig | None = None) -> ElementList:
    """segment -> prune -> structure -> augment, with complexity gates."""
    config = config or DecomposeConfig()
    raw_elements = segment(candidate, config)
    whole = whole_image_element(raw_elements)
    try:
        root = ET.fromstring(candidate.svg_bytes)
        vb = _viewbox(root)
    except (ET.ParseError, ParseError):
        vb = None
    canvas = vb or whole.bbox
    canvas_area = geometry.rect_area(canvas)
    if canvas_area > 0:
        largest = max(raw_elements, key=lambda e: e.area)
        if largest.area / canvas_area > config.dominant_cover_fraction:
            raise DominantElement(
                f"element {largest.index} fills "
                f"{largest.area / canvas_area:.0%} of the canvas")
    essential, removed = prune(raw_elements, config.min_area_fraction,
                               geometry.rect_area(whole.bbox))
    if len(essential) < config.min_essential:
        raise TooSimple(f"{len(essential)} essential elements, need at least "
                        f"{config.min_essential}")
    if len(essential) > config.max_essential:
        raise TooComplex(f"{len(essential)} essential elements, cap is "
                         f"{config.max_essential}")
    structure, slope, collinear = detect_structure(essential, whole, config)
    essential = tag_augmentable(essential, config)
    ordered = sorted(essential + removed, key=lambda e: e.index)
    return ElementList(
        elements=tuple(ordered),
        whole_image=whole,
        structure=structure,
        slope=slope,
        collinear=collinear,
        source_id=candidate.id,
        canvas_bbox=canvas,
    )


# --------------------------------------------------------------------------
# candidate acquisition


def _query_tokens(text: str) -> set[str]:
    return {t for t in re.split(r"[^a-z0-9]+", text.casefold()) if t}


class LocalCorpus:
    """A directory of .svg files with an optional tags.json sidecar."""

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)

    def tags(self) -> dict[str, list[str]]:
        sidecar = self.directory / "tags.json"
        if sidecar.exists():
            return json.loads(sidecar.read_text(encoding="utf-8"))
        return {}

    def write_tags(self, tags: dict[str, list[str]]) -> None:
        sidecar = self.directory / "tags.json"
        sidecar.write_text(json.dumps(tags, indent=2, sort_keys=True), encoding="utf-8")

    def files(self) -> list[Path]:
        return sorted(self.directory.glob("*.svg"))

    def search(self, topic: str, keywords: tuple[str, ...] = ()) -> list[MetaphorCandidate]:
        tags = self.tags()
        query = _query_tokens(topic)
        for kw in keywords:
            query |= _query_tokens(kw)
        scored = []
        for path in self.files():
            stem_tokens = _query_tokens(path.stem)
            tag_tokens = set()
            for tag in tags.get(path.name, []):
                tag_tokens |= _query_tokens(tag)
            # a filename match counts on top of a tag match
            score = len(query & stem_tokens) + len(query & tag_tokens)
            if score > 0:
                scored.append((-score, path.name, path))
        scored.sort()
        out = []
        for _score, name, path in scored:
            out.append(MetaphorCandidate(
                id=name,
                source=ImageSource.LOCAL_CORPUS,
                svg_bytes=path.read_bytes(),
                keywords=tuple(tags.get(name, [])),
            ))
        return out


class HttpImageFetcher:
    """Reference remote fetcher for a keyword-search REST endpoint.

    Expects ``GET {base_url}?q=<query>&limit=<n>`` returning a JSON list of
    ``{"name": ..., "svg": "<svg...>"}`` or ``{"name": ..., "url": ...}``
    records.  The API key, when configured, travels in the
    ``Authorization: Bearer`` header.  Requests are serialized per fetcher
    with a minimum spacing so concurrent candidate searches stay polite.
    """

    def __init__(self, base_url: str, api_key: str | None = None,
                 timeout: float = 10.0, min_interval_s: float = 0.5):
        self.base_url = base_url
        self.api_key = api_key
        self.timeout = timeout
        self.min_interval_s = min_interval_s
        self._lock = threading.Lock()
        self._last_request = 0.0

    def _throttle(self) -> None:
        wait = self._last_request + self.min_interval_s - time.monotonic()
        if wait > 0:
            time.sleep(wait)
        self._last_request = time.monotonic()

    def search(self, query: str, limit: int) -> list[tuple[str, bytes, tuple[str, ...]]]:
        import requests

        headers = {"Authorization": f"Bearer {self.api_key}"} if self.api_key else {}
        with self._lock:
            self._throttle()
            return self._search(requests, query, limit, headers)

    def _search(self, requests, query: str, limit: int, headers: dict):
        try:
            resp = requests.get(self.base_url, params={"q": query, "limit": limit},
                                headers=headers, timeout=self.timeout)
            resp.raise_for_status()
            records = resp.json()
            out = []
            for rec in records[:limit]:
                if "svg" in rec:
                    data = rec["svg"].encode("utf-8")
                elif "url" in rec:
                    self._throttle()
                    inner = requests.get(rec["url"], headers=headers, timeout=self.timeout)
                    inner.raise_for_status()
                    data = inner.content
                else:
                    continue
                out.append((rec.get("name", "remote.svg"), data, tuple(rec.get("tags", []))))
            return out
        except Exception as exc:  # noqa: BLE001 - any transport failure degrades
            raise RemoteUnavailable(str(exc)) from exc


class CachedFetcher:
    """Disk cache around a fetcher so repeated runs work offline."""

    def __init__(self, fetcher, cache_dir: str | Path):
        self.fetcher = fetcher
        self.cache_dir = Path(cache_dir)
        self.cache_dir.mkdir(parents=True, exist_ok=True)

    def search(self, query: str, limit: int):
        key = hashlib.sha256(f"{query}\x00{limit}".encode()).hexdigest()
        path = self.cache_dir / f"{key}.json"
        if path.exists():
            records = json.loads(path.read_text(encoding="utf-8"))
            return [(r["name"], base64.b64decode(r["svg_b64"]), tuple(r["tags"]))
                    for r in records]
        results = self.fetcher.search(query, limit)
        path.write_text(json.dumps([
            {"name": n, "svg_b64": base64.b64encode(b).decode(), "tags": list(t)}
            for n, b, t in results
        ]), encoding="utf-8")
        return results


def search_images(topic: str, keywords: tuple[str, ...] = (), limit: int = 5,
                  corpus: LocalCorpus | None = None,
                  fetcher=None) -> list[MetaphorCandidate]:
    """Collect up to ``limit`` candidates: local corpus first, then remote.

    The remote fetcher is queried with the topic plus the keyword "icon".
    Results are deduplicated by content hash.  A failing remote degrades to
    local-only with a warning instead of failing the run.
    """
    if corpus is None and fetcher is None:
        raise NoSource("neither a local corpus nor a remote fetcher is configured")
    candidates: list[MetaphorCandidate] = []
    if corpus is not None:
        candidates.extend(corpus.search(topic, keywords))
    if fetcher is not None and len(candidates) < limit:
        try:
            fetched = fetcher.search(f"{topic} icon", limit)
        except RemoteUnavailable as exc:
            log.warning("remote image source unavailable: %s", exc)
            warnings.warn(f"remote image source unavailable: {exc}", stacklevel=2)
            fetched = []
        for name, data, tags in fetched:
            candidates.append(MetaphorCandidate(
                id=name, source=ImageSource.REMOTE, svg_bytes=data, keywords=tags))
    seen: set[str] = set()
    unique = []
    for cand in candidates:
        digest = hashlib.sha256(cand.svg_bytes).hexdigest()
        if digest in seen:
            continue
        seen.add(digest)
        unique.append(cand)
    return unique[:limit]
