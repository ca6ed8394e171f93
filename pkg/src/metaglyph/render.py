"""Turn a winning mapping into an SVG scene.

Channel assignment follows three cases: a single dimension takes the most
frequent free channel for its data type; a group on a circular element
becomes an embedded chart (pie, donut, heatmap for proportional data, star
otherwise); a group on a non-circular element replicates it per member with
rotation and color telling members apart and size carrying the value.
Pruned elements are then reinstated or dropped depending on what their
overlapping partner encodes, glyphs are placed (timeline, map, axes, or an
ordered grid), and the scene serializes to byte-stable SVG with an embedded
mapping-metadata island.
"""

from __future__ import annotations

import json
import math
import warnings
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from enum import Enum
from typing import Callable
from xml.sax.saxutils import escape

from . import geometry, regions
from .config import RenderConfig
from .dataset import Dataset, DataType
from .errors import ChannelExhausted
from .geometry import fmt
from .metaphor import Element, ElementList, StructureKind
from .search import (
    MappingSolution,
    MappingSpace,
    MappingTarget,
    Slot,
    TargetKind,
    overlap_score,
)

SVG_NS = "http://www.w3.org/2000/svg"


class Channel(str, Enum):
    SIZE_AREA = "size_area"
    SIZE_LENGTH = "size_length"
    SIZE_HEIGHT = "size_height"
    COLOR_HUE = "color_hue"
    COLOR_LIGHTNESS = "color_lightness"
    ANGLE = "angle"
    ROTATION = "rotation"
    POSITION_OFFSET = "position_offset"


SIZE_CHANNELS = {Channel.SIZE_AREA, Channel.SIZE_LENGTH, Channel.SIZE_HEIGHT}


@dataclass(frozen=True)
class ScaleSpec:
    domain: tuple[float, float]
    range: tuple[float, float]
    units: str
    labels: tuple[str, ...] = ()   # category labels for hue/rotation/offset

    def to_json(self) -> dict:
        return {"domain": list(self.domain), "range": list(self.range),
                "units": self.units, "labels": list(self.labels)}

    @staticmethod
    def from_json(d: dict) -> "ScaleSpec":
        return ScaleSpec(tuple(d["domain"]), tuple(d["range"]), d["units"],
                         tuple(d.get("labels", ())))


@dataclass(frozen=True)
class ChannelAssignment:
    dimension_id: str
    element_index: int
    channel: Channel
    scale: ScaleSpec
    group_id: str | None = None
    member_index: int | None = None
    member_count: int | None = None

    def to_json(self) -> dict:
        return {
            "dimension_id": self.dimension_id,
            "element_index": self.element_index,
            "channel": self.channel.value,
            "scale": self.scale.to_json(),
            "group_id": self.group_id,
            "member_index": self.member_index,
            "member_count": self.member_count,
        }

    @staticmethod
    def from_json(d: dict) -> "ChannelAssignment":
        return ChannelAssignment(
            dimension_id=d["dimension_id"], element_index=d["element_index"],
            channel=Channel(d["channel"]), scale=ScaleSpec.from_json(d["scale"]),
            group_id=d.get("group_id"), member_index=d.get("member_index"),
            member_count=d.get("member_count"))


@dataclass(frozen=True)
class ChartAugmentation:
    element_index: int
    chart: str                       # pie | donut | star | heatmap
    group_id: str
    series: tuple[str, ...]          # member dimension ids in draw order

    def to_json(self) -> dict:
        return {"element_index": self.element_index, "chart": self.chart,
                "group_id": self.group_id, "series": list(self.series)}


class ReinstateAction(str, Enum):
    SCALE_WITH_PARTNER = "scale_with_partner"
    DELETE = "delete"
    KEEP_ORIGINAL = "keep_original"


@dataclass(frozen=True)
class Reinstatement:
    element_index: int
    action: ReinstateAction
    partner_index: int | None = None


# --------------------------------------------------------------------------
# channel assignment


def resolve_size_channel(element_list: ElementList) -> Channel:
    """Size specializes by structure: radial images scale by area, shallow
    non-radial ones by length, steep ones by height."""
    if element_list.structure is StructureKind.RADIAL:
        return Channel.SIZE_AREA
    slope = element_list.slope
    if slope is not None and abs(slope) <= 1.0:
        return Channel.SIZE_LENGTH
    return Channel.SIZE_HEIGHT


def _numeric_values(ds: Dataset, dim_id: str) -> list[float]:
    dim = ds.dimension(dim_id)
    if dim.data_type is DataType.TEMPORAL:
        return [v.timestamp() for v in dim.values]
    return [float(v) for v in dim.values]


def _domain(values: list[float]) -> tuple[float, float]:
    return (min(values), max(values))


def _categories(ds: Dataset, dim_id: str) -> list[str]:
    return sorted(set(str(v) for v in ds.dimension(dim_id).values))


def _scale_for(channel: Channel, ds: Dataset, dim_id: str,
               cfg: RenderConfig) -> ScaleSpec:
    if channel in SIZE_CHANNELS:
        metric = {Channel.SIZE_AREA: "area-factor",
                  Channel.SIZE_LENGTH: "width-factor",
                  Channel.SIZE_HEIGHT: "height-factor"}[channel]
        return ScaleSpec(_domain(_numeric_values(ds, dim_id)),
                         (cfg.size_floor, 1.0), metric)
    if channel is Channel.ANGLE:
        return ScaleSpec(_domain(_numeric_values(ds, dim_id)),
                         cfg.angle_range_deg, "degrees")
    if channel is Channel.COLOR_LIGHTNESS:
        return ScaleSpec(_domain(_numeric_values(ds, dim_id)),
                         (0, len(cfg.sequential_ramp) - 1), "ramp-step")
    cats = _categories(ds, dim_id)
    if channel is Channel.COLOR_HUE:
        return ScaleSpec((0, max(len(cats) - 1, 1)), (0, max(len(cats) - 1, 1)),
                         "palette-index", tuple(cats))
    if channel is Channel.ROTATION:
        return ScaleSpec((0, max(len(cats) - 1, 1)), (0.0, 360.0), "degrees",
                         tuple(cats))
    return ScaleSpec((0, max(len(cats) - 1, 1)), (-0.25, 0.25),
                     "bbox-width-offset", tuple(cats))


def _proportional(ds: Dataset, member_ids: tuple[str, ...]) -> bool:
    return all(v >= 0 for mid in member_ids for v in _numeric_values(ds, mid))


def assign_channels(solution: MappingSolution, space: MappingSpace,
                    ds: Dataset, element_list: ElementList,
                    config: RenderConfig | None = None,
                    ) -> tuple[list[ChannelAssignment], list[ChartAugmentation]]:
    """Resolve encoding channels and chart augmentations for a solution.

    Slots sharing an element are served in descending reward-contribution
    order, so stronger pairs take the more frequent channels.  Raises
    ChannelExhausted when an element runs out of distinct channels.
    """
    cfg = config or RenderConfig()
    size_channel = resolve_size_channel(element_list)

    by_element: dict[int, list[int]] = {}
    for d, target in enumerate(solution.pairs):
        if target.kind is TargetKind.ELEMENT:
            by_element.setdefault(target.index, []).append(d)

    assignments: list[ChannelAssignment] = []
    augmentations: list[ChartAugmentation] = []
    charts_used: list[str] = []

    def resolve(name: str) -> Channel:
        return size_channel if name == "size" else Channel(name)

    for element_index, slot_ids in sorted(by_element.items()):
        order = sorted(
            slot_ids,
            key=lambda d: (-solution.reward.pair_products[d], d),
        )
        used: set[Channel] = set()
        host = element_list.element(element_index)
        for d in order:
            slot = space.slots[d]
            if slot.kind == "group":
                if host.augmentable:
                    chart = _pick_chart(ds, slot.member_ids, charts_used, cfg)
                    charts_used.append(chart)
                    augmentations.append(ChartAugmentation(
                        element_index=element_index, chart=chart,
                        group_id=slot.id, series=tuple(slot.member_ids)))
                    continue
                needed = (Channel.ROTATION, Channel.COLOR_HUE, size_channel)
                if any(ch in used for ch in needed):
                    raise ChannelExhausted(
                        f"element {element_index} cannot host group {slot.id}")
                used.update(needed)
                count = len(slot.member_ids)
                # one shared scale across members so sizes stay comparable
                pool = [v for mid in slot.member_ids
                        for v in _numeric_values(ds, mid)]
                domain = (min(pool), max(pool))
                for j, mid in enumerate(slot.member_ids):
                    member_common = dict(group_id=slot.id, member_index=j,
                                         member_count=count)
                    assignments.extend([
                        ChannelAssignment(mid, element_index, Channel.ROTATION,
                                          ScaleSpec((0, count - 1), (0.0, 360.0),
                                                    "degrees"),
                                          **member_common),
                        ChannelAssignment(mid, element_index, Channel.COLOR_HUE,
                                          ScaleSpec((0, count - 1),
                                                    (0, count - 1),
                                                    "palette-index"),
                                          **member_common),
                        ChannelAssignment(mid, element_index, size_channel,
                                          ScaleSpec(domain,
                                                    (cfg.size_floor, 1.0),
                                                    "size-factor"),
                                          **member_common),
                    ])
                continue
            preferences = cfg.channel_table[slot.data_type.value]
            channel = next(
                (resolve(name) for name in preferences if resolve(name) not in used),
                None)
            if channel is None:
                raise ChannelExhausted(
                    f"no free channel on element {element_index} for {slot.id}")
            used.add(channel)
            assignments.append(ChannelAssignment(
                dimension_id=slot.id, element_index=element_index,
                channel=channel, scale=_scale_for(channel, ds, slot.id, cfg)))
    return assignments, augmentations


def _pick_chart(ds: Dataset, member_ids: tuple[str, ...],
                charts_used: list[str], cfg: RenderConfig) -> str:
    if not _proportional(ds, member_ids):
        return "star"
    for chart in cfg.chart_priority:
        if chart not in charts_used:
            return chart
    return cfg.chart_priority[0]


# --------------------------------------------------------------------------
# reinstatement of pruned elements


def reinstate_removed(element_list: ElementList,
                      assignments: list[ChannelAssignment],
                      augmentations: list[ChartAugmentation],
                      ) -> list[Reinstatement]:
    """Decide what happens to each pruned element.

    The overlapping preserved partner (largest bbox intersection) rules:
    size-encoding partner scales the element along; chart-augmented or
    non-encoding partner deletes it; any other encoding keeps the original.
    """
    augmented = {a.element_index for a in augmentations}
    encoded: dict[int, set[Channel]] = {}
    for a in assignments:
        encoded.setdefault(a.element_index, set()).add(a.channel)
    out: list[Reinstatement] = []
    for removed in element_list.removed:
        partner: Element | None = None
        best_area = 0.0
        for candidate in element_list.essential:
            inter = geometry.rect_intersection(removed.bbox, candidate.bbox)
            if inter is None:
                continue
            area = geometry.rect_area(inter)
            if area > best_area:
                best_area, partner = area, candidate
        if partner is None:
            out.append(Reinstatement(removed.index, ReinstateAction.KEEP_ORIGINAL))
            continue
        if partner.index in augmented:
            out.append(Reinstatement(removed.index, ReinstateAction.DELETE,
                                     partner.index))
        elif encoded.get(partner.index, set()) & SIZE_CHANNELS:
            out.append(Reinstatement(removed.index,
                                     ReinstateAction.SCALE_WITH_PARTNER,
                                     partner.index))
        elif encoded.get(partner.index):
            out.append(Reinstatement(removed.index, ReinstateAction.KEEP_ORIGINAL,
                                     partner.index))
        else:
            out.append(Reinstatement(removed.index, ReinstateAction.DELETE,
                                     partner.index))
    return out


# --------------------------------------------------------------------------
# placement


@dataclass(frozen=True)
class AxisSpec:
    dimension_id: str
    name: str
    data_type: DataType
    domain: tuple[float, float]
    pixel_range: tuple[float, float]


@dataclass(frozen=True)
class Placement:
    kind: str                          # cartesian | horizontal_axis | timeline | map | ordered
    positions: tuple[tuple[float, float], ...]
    base_size: float
    x_axis: AxisSpec | None = None
    y_axis: AxisSpec | None = None
    unlocated_rows: tuple[int, ...] = ()


def glyph_base_size(canvas: tuple[float, float], rows: int,
                    cfg: RenderConfig) -> float:
    raw = min(canvas) / math.ceil(math.sqrt(max(rows, 1))) * cfg.grid_fill_factor
    return min(max(raw, cfg.glyph_min_size), cfg.glyph_max_size)


def _linear(values: list[float], lo_px: float, hi_px: float) -> list[float]:
    lo, hi = min(values), max(values)
    if hi - lo <= 0:
        return [(lo_px + hi_px) / 2 for _ in values]
    return [lo_px + (v - lo) / (hi - lo) * (hi_px - lo_px) for v in values]


def place_glyphs(axis_dims: dict[int, str], ds: Dataset,
                 config: RenderConfig | None = None) -> Placement:
    """Position one glyph per data row.

    A temporal axis lays rows on a timeline, a geospatial one on the
    bundled map, one numerical axis on a horizontal scale, two on a
    Cartesian plane; otherwise rows fall into an ordered grid (sorted by a
    categorical axis key when one is mapped, else input order).
    """
    cfg = config or RenderConfig()
    canvas = (cfg.canvas_width, cfg.canvas_height)
    w, h = canvas
    pad_x, pad_y = w * cfg.padding_fraction, h * cfg.padding_fraction
    rows = ds.rows
    base = glyph_base_size(canvas, rows, cfg)

    dim1 = ds.dimension(axis_dims[1]) if 1 in axis_dims else None
    dim2 = ds.dimension(axis_dims[2]) if 2 in axis_dims else None

    def axis_spec(dim, px):
        vals = _numeric_values(ds, dim.id)
        return AxisSpec(dim.id, dim.name, dim.data_type, _domain(vals), px)

    if dim1 is not None and dim1.data_type is DataType.GEOSPATIAL:
        positions = []
        unlocated = []
        slot_w = (w - 2 * pad_x) / max(rows, 1)
        for i, cell in enumerate(ds.dimension(dim1.id).values):
            centroid = regions.lookup_region(str(cell))
            if centroid is None:
                warnings.warn(
                    f"row {i}: unknown region {cell!r}, placed in the margin strip",
                    stacklevel=2)
                positions.append((pad_x + slot_w * (len(unlocated) + 0.5),
                                  h - pad_y / 2))
                unlocated.append(i)
                continue
            lon, lat = centroid
            x = pad_x + (lon + 180.0) / 360.0 * (w - 2 * pad_x)
            y = pad_y + (90.0 - lat) / 180.0 * (h - 2 * pad_y)
            positions.append((x, y))
        return Placement("map", tuple(positions), base,
                         unlocated_rows=tuple(unlocated))

    if dim1 is not None and dim1.data_type is DataType.TEMPORAL:
        xs = _linear([v.timestamp() for v in dim1.values], pad_x, w - pad_x)
        if dim2 is not None:
            ys = _linear(_numeric_values(ds, dim2.id), h - pad_y, pad_y)
            return Placement("timeline", tuple(zip(xs, ys)), base,
                             x_axis=axis_spec(dim1, (pad_x, w - pad_x)),
                             y_axis=axis_spec(dim2, (h - pad_y, pad_y)))
        return Placement("timeline", tuple((x, h / 2) for x in xs), base,
                         x_axis=axis_spec(dim1, (pad_x, w - pad_x)))

    if dim1 is not None and dim1.data_type is DataType.NUMERICAL:
        xs = _linear(_numeric_values(ds, dim1.id), pad_x, w - pad_x)
        if dim2 is not None:
            ys = _linear(_numeric_values(ds, dim2.id), h - pad_y, pad_y)
            return Placement("cartesian", tuple(zip(xs, ys)), base,
                             x_axis=axis_spec(dim1, (pad_x, w - pad_x)),
                             y_axis=axis_spec(dim2, (h - pad_y, pad_y)))
        return Placement("horizontal_axis", tuple((x, h / 2) for x in xs), base,
                         x_axis=axis_spec(dim1, (pad_x, w - pad_x)))

    # ordered grid: categorical axis sorts rows, otherwise input order
    order = list(range(rows))
    if dim1 is not None and dim1.data_type is DataType.CATEGORICAL:
        order.sort(key=lambda i: (str(dim1.values[i]), i))
    cols = math.ceil(math.sqrt(max(rows, 1)))
    grid_rows = math.ceil(rows / cols)
    cell_w = (w - 2 * pad_x) / cols
    cell_h = (h - 2 * pad_y) / max(grid_rows, 1)
    positions: list[tuple[float, float]] = [(0.0, 0.0)] * rows
    for slot, row_index in enumerate(order):
        r, c = divmod(slot, cols)
        positions[row_index] = (pad_x + (c + 0.5) * cell_w,
                                pad_y + (r + 0.5) * cell_h)
    return Placement("ordered", tuple(positions), base)


def make_overlap_probe(space: MappingSpace, ds: Dataset,
                       config: RenderConfig | None = None,
                       overlap_threshold: float = 0.30):
    """Cheap glyph-bbox overlap oracle for reward evaluation.

    Takes the axis signature ((axis_k, slot_index), ...) used by the search
    and returns (O, P_overlap) from the placement this solution implies,
    memoized per signature.
    """
    cfg = config or RenderConfig()
    cache: dict[tuple, tuple[float, float]] = {}

    def probe(signature: tuple[tuple[int, int], ...]) -> tuple[float, float]:
        hit = cache.get(signature)
        if hit is not None:
            return hit
        axis_dims = {k: space.slots[d].id for k, d in signature}
        placement = place_glyphs(axis_dims, ds, cfg)
        half = placement.base_size / 2
        boxes = [(x - half, y - half, x + half, y + half)
                 for x, y in placement.positions]
        ok, p = overlap_score(boxes, overlap_threshold)
        result = (float(ok), p)
        cache[signature] = result
        return result

    return probe


# --------------------------------------------------------------------------
# scene construction


@dataclass(frozen=True)
class ElementOp:
    element_index: int
    scale_x: float = 1.0
    scale_y: float = 1.0
    rotate_deg: float = 0.0
    # fixed point for scale/rotate; None means the element's own center
    fixed_point: tuple[float, float] | None = None
    offset: tuple[float, float] = (0.0, 0.0)
    fill: str | None = None
    replica: int | None = None          # member index for group replication

    def size_metric(self) -> float:
        return self.scale_x * self.scale_y


@dataclass(frozen=True)
class Sector:
    start_deg: float
    end_deg: float
    color: str
    label: str


@dataclass(frozen=True)
class ChartInstance:
    element_index: int
    chart: str
    sectors: tuple[Sector, ...] = ()            # pie / donut
    star_values: tuple[float, ...] = ()         # radius fractions per axis
    cells: tuple[str, ...] = ()                 # heatmap cell colors
    hatch: bool = False                          # zero-sum proportional row


@dataclass(frozen=True)
class GlyphInstance:
    row: int
    position: tuple[float, float]
    element_ops: tuple[ElementOp, ...]
    charts: tuple[ChartInstance, ...]


@dataclass(frozen=True)
class GlyphScene:
    topic: str
    placement: Placement
    canvas: tuple[float, float]
    glyphs: tuple[GlyphInstance, ...]
    assignments: tuple[ChannelAssignment, ...]
    augmentations: tuple[ChartAugmentation, ...]
    reinstatements: tuple[Reinstatement, ...]
    solution_json: dict
    reward: float


def _t_of(value: float, domain: tuple[float, float]) -> float:
    lo, hi = domain
    if hi - lo <= 0:
        return 1.0
    return (value - lo) / (hi - lo)


def _scaled(t: float, rng: tuple[float, float]) -> float:
    return rng[0] + t * (rng[1] - rng[0])


def build_scene(solution: MappingSolution, space: MappingSpace, ds: Dataset,
                element_list: ElementList,
                config: RenderConfig | None = None) -> GlyphScene:
    """Resolve every data-driven attribute for every row."""
    cfg = config or RenderConfig()
    assignments, augmentations = assign_channels(solution, space, ds,
                                                 element_list, cfg)
    reinstatements = reinstate_removed(element_list, assignments, augmentations)
    axis_dims = {t.index: space.slots[d].id
                 for d, t in enumerate(solution.pairs)
                 if t.kind is TargetKind.AXIS}
    placement = place_glyphs(axis_dims, ds, cfg)
    ramp = cfg.sequential_ramp
    palette = cfg.categorical_palette
    augmented = {a.element_index for a in augmentations}
    replicated = {a.element_index for a in assignments if a.member_index is not None}

    reinstate_by_index = {r.element_index: r for r in reinstatements}
    drawable_removed = [
        e for e in element_list.removed
        if reinstate_by_index[e.index].action is not ReinstateAction.DELETE
    ]

    origin = element_list.whole_image.center

    def ops_for_row(row: int) -> list[ElementOp]:
        ops: dict[int, list[ElementOp]] = {}
        plain = {e.index for e in element_list.essential} - augmented - replicated
        for idx in plain:
            ops[idx] = [ElementOp(element_index=idx)]
        # scalar channel assignments compose onto the element's single op
        for a in assignments:
            if a.member_index is not None:
                continue
            if a.element_index == 0:
                targets = sorted(plain)  # whole image: applies to all elements
            else:
                targets = [a.element_index]
            dim = ds.dimension(a.dimension_id)
            for idx in targets:
                if idx not in ops:
                    continue
                base = ops[idx][0]
                host = element_list.element(a.element_index)
                updated = _apply_channel(base, a, dim, row, cfg, host)
                if a.element_index == 0:
                    updated = _dc_replace(updated, fixed_point=origin)
                ops[idx][0] = updated
        # group replication on non-augmentable hosts; replicas pivot on the
        # whole-image center so rotated copies fan out like petals
        members: dict[tuple[int, str], dict[int, dict]] = {}
        for a in assignments:
            if a.member_index is None:
                continue
            key = (a.element_index, a.group_id)
            members.setdefault(key, {}).setdefault(a.member_index, {})[
                a.channel] = a
        for (idx, _gid), per_member in sorted(members.items()):
            replicas = []
            for j in sorted(per_member):
                spec = per_member[j]
                count = next(iter(spec.values())).member_count or len(per_member)
                rotate = 360.0 * j / count
                fill = palette[j % len(palette)]
                sx = sy = 1.0
                for ch, a in spec.items():
                    if ch in SIZE_CHANNELS:
                        dim = ds.dimension(a.dimension_id)
                        value = _numeric_of(dim, row)
                        f = _scaled(_t_of(value, a.scale.domain), a.scale.range)
                        if ch is Channel.SIZE_AREA:
                            sx = sy = math.sqrt(f)
                        elif ch is Channel.SIZE_LENGTH:
                            sx = f
                        else:
                            sy = f
                replicas.append(ElementOp(
                    element_index=idx, scale_x=sx, scale_y=sy,
                    rotate_deg=rotate, fixed_point=origin,
                    fill=fill, replica=j))
            ops[idx] = replicas
        # reinstated removed elements
        for e in drawable_removed:
            r = reinstate_by_index[e.index]
            if r.action is ReinstateAction.SCALE_WITH_PARTNER and r.partner_index in ops:
                partner_op = ops[r.partner_index][0]
                partner = element_list.element(r.partner_index)
                ops[e.index] = [ElementOp(
                    element_index=e.index, scale_x=partner_op.scale_x,
                    scale_y=partner_op.scale_y, fixed_point=partner.center)]
            else:
                ops[e.index] = [ElementOp(element_index=e.index)]
        flat: list[ElementOp] = []
        for idx in sorted(ops):
            flat.extend(ops[idx])
        return flat

    def charts_for_row(row: int) -> list[ChartInstance]:
        out = []
        for aug in augmentations:
            values = [_numeric_of(ds.dimension(mid), row) for mid in aug.series]
            names = [ds.dimension(mid).name for mid in aug.series]
            if aug.chart in ("pie", "donut"):
                total = sum(values)
                if total <= 0:
                    out.append(ChartInstance(aug.element_index, aug.chart,
                                             hatch=True))
                    continue
                sectors = []
                start = -90.0
                for j, (v, name) in enumerate(zip(values, names)):
                    span = 360.0 * v / total
                    sectors.append(Sector(start, start + span,
                                          palette[j % len(palette)], name))
                    start += span
                out.append(ChartInstance(aug.element_index, aug.chart,
                                         sectors=tuple(sectors)))
            elif aug.chart == "star":
                pool = [v for mid in aug.series for v in _numeric_values(ds, mid)]
                lo, hi = min(pool), max(pool)
                if hi - lo <= 0:
                    star = tuple(1.0 for _ in values)
                else:
                    star = tuple((v - lo) / (hi - lo) for v in values)
                out.append(ChartInstance(aug.element_index, "star",
                                         star_values=star))
            else:  # heatmap
                peak = max(
                    (max(_numeric_values(ds, mid)) for mid in aug.series),
                    default=0.0)
                cells = []
                for v in values:
                    t = v / peak if peak > 0 else 0.0
                    cells.append(ramp[round(t * (len(ramp) - 1))])
                out.append(ChartInstance(aug.element_index, "heatmap",
                                         cells=tuple(cells)))
        return out

    glyphs = tuple(
        GlyphInstance(row=i, position=placement.positions[i],
                      element_ops=tuple(ops_for_row(i)),
                      charts=tuple(charts_for_row(i)))
        for i in range(ds.rows)
    )
    return GlyphScene(
        topic=ds.topic,
        placement=placement,
        canvas=(cfg.canvas_width, cfg.canvas_height),
        glyphs=glyphs,
        assignments=tuple(assignments),
        augmentations=tuple(augmentations),
        reinstatements=tuple(reinstatements),
        solution_json=solution.to_json(space),
        reward=solution.reward.r,
    )


def _numeric_of(dim, row: int) -> float:
    if dim.data_type is DataType.TEMPORAL:
        return dim.values[row].timestamp()
    if dim.data_type is DataType.NUMERICAL:
        return float(dim.values[row])
    return float(row)


from dataclasses import replace as _dc_replace  # noqa: E402


def _apply_channel(op: ElementOp, a: ChannelAssignment, dim, row: int,
                   cfg: RenderConfig, host: Element) -> ElementOp:
    if a.channel in SIZE_CHANNELS:
        value = _numeric_of(dim, row)
        f = _scaled(_t_of(value, a.scale.domain), a.scale.range)
        if a.channel is Channel.SIZE_AREA:
            s = math.sqrt(f)
            return _dc_replace(op, scale_x=s, scale_y=s)
        if a.channel is Channel.SIZE_LENGTH:
            return _dc_replace(op, scale_x=f)
        return _dc_replace(op, scale_y=f)
    if a.channel is Channel.ANGLE:
        value = _numeric_of(dim, row)
        return _dc_replace(op, rotate_deg=_scaled(_t_of(value, a.scale.domain),
                                                  a.scale.range))
    if a.channel is Channel.COLOR_LIGHTNESS:
        value = _numeric_of(dim, row)
        t = _t_of(value, a.scale.domain)
        idx = round(t * (len(cfg.sequential_ramp) - 1))
        return _dc_replace(op, fill=cfg.sequential_ramp[idx])
    label = str(dim.values[row])
    labels = list(a.scale.labels)
    idx = labels.index(label) if label in labels else 0
    if a.channel is Channel.COLOR_HUE:
        return _dc_replace(op, fill=cfg.categorical_palette[
            idx % len(cfg.categorical_palette)])
    if a.channel is Channel.ROTATION:
        k = max(len(labels), 1)
        return _dc_replace(op, rotate_deg=360.0 * idx / k)
    # position offset: fraction of the host's bbox width along x
    width = host.bbox[2] - host.bbox[0]
    frac = _scaled(idx / max(len(labels) - 1, 1), a.scale.range)
    return _dc_replace(op, offset=(frac * width, 0.0))


# --------------------------------------------------------------------------
# SVG emission


def _transform_attr(op: ElementOp, default_center: tuple[float, float]) -> str:
    parts = []
    if op.offset != (0.0, 0.0):
        parts.append(f"translate({fmt(op.offset[0])} {fmt(op.offset[1])})")
    fx, fy = op.fixed_point if op.fixed_point is not None else default_center
    if op.rotate_deg:
        parts.append(f"rotate({fmt(op.rotate_deg)} {fmt(fx)} {fmt(fy)})")
    if op.scale_x != 1.0 or op.scale_y != 1.0:
        parts.append(f"translate({fmt(fx)} {fmt(fy)}) "
                     f"scale({fmt(op.scale_x, 6)} {fmt(op.scale_y, 6)}) "
                     f"translate({fmt(-fx)} {fmt(-fy)})")
    return " ".join(parts)


def _element_markup(e: Element, op: ElementOp) -> str:
    attrs = [f'd="{e.path_data()}"']
    fill = op.fill if op.fill is not None else (e.style.fill or "none")
    attrs.append(f'fill="{escape(fill)}"')
    if e.style.stroke:
        attrs.append(f'stroke="{escape(e.style.stroke)}"')
        attrs.append(f'stroke-width="{fmt(e.style.stroke_width)}"')
    if e.style.opacity is not None:
        attrs.append(f'opacity="{fmt(e.style.opacity)}"')
    tf = _transform_attr(op, e.center)
    if tf:
        attrs.append(f'transform="{tf}"')
    return f"<path {' '.join(attrs)}/>"


def _sector_path(cx: float, cy: float, r_outer: float, r_inner: float,
                 a0: float, a1: float) -> str:
    span = a1 - a0
    if span <= 1e-9:
        return ""
    if span >= 360.0 - 1e-9:
        if r_inner <= 0:
            return (f'M {fmt(cx - r_outer)} {fmt(cy)} '
                    f'A {fmt(r_outer)} {fmt(r_outer)} 0 1 1 {fmt(cx + r_outer)} {fmt(cy)} '
                    f'A {fmt(r_outer)} {fmt(r_outer)} 0 1 1 {fmt(cx - r_outer)} {fmt(cy)} Z')
        return (f'M {fmt(cx - r_outer)} {fmt(cy)} '
                f'A {fmt(r_outer)} {fmt(r_outer)} 0 1 1 {fmt(cx + r_outer)} {fmt(cy)} '
                f'A {fmt(r_outer)} {fmt(r_outer)} 0 1 1 {fmt(cx - r_outer)} {fmt(cy)} Z '
                f'M {fmt(cx - r_inner)} {fmt(cy)} '
                f'A {fmt(r_inner)} {fmt(r_inner)} 0 1 0 {fmt(cx + r_inner)} {fmt(cy)} '
                f'A {fmt(r_inner)} {fmt(r_inner)} 0 1 0 {fmt(cx - r_inner)} {fmt(cy)} Z')
    rad0, rad1 = math.radians(a0), math.radians(a1)
    large = 1 if span > 180.0 else 0
    ox0 = cx + r_outer * math.cos(rad0)
    oy0 = cy + r_outer * math.sin(rad0)
    ox1 = cx + r_outer * math.cos(rad1)
    oy1 = cy + r_outer * math.sin(rad1)
    if r_inner <= 0:
        return (f'M {fmt(cx)} {fmt(cy)} L {fmt(ox0)} {fmt(oy0)} '
                f'A {fmt(r_outer)} {fmt(r_outer)} 0 {large} 1 {fmt(ox1)} {fmt(oy1)} Z')
    ix0 = cx + r_inner * math.cos(rad0)
    iy0 = cy + r_inner * math.sin(rad0)
    ix1 = cx + r_inner * math.cos(rad1)
    iy1 = cy + r_inner * math.sin(rad1)
    return (f'M {fmt(ix0)} {fmt(iy0)} L {fmt(ox0)} {fmt(oy0)} '
            f'A {fmt(r_outer)} {fmt(r_outer)} 0 {large} 1 {fmt(ox1)} {fmt(oy1)} '
            f'L {fmt(ix1)} {fmt(iy1)} '
            f'A {fmt(r_inner)} {fmt(r_inner)} 0 {large} 0 {fmt(ix0)} {fmt(iy0)} Z')


def _chart_markup(chart: ChartInstance, host: Element, cfg: RenderConfig) -> str:
    bx0, by0, bx1, by1 = host.bbox
    cx, cy = host.center
    radius = min(bx1 - bx0, by1 - by0) / 2
    out = []
    if chart.hatch:
        out.append(f'<circle cx="{fmt(cx)}" cy="{fmt(cy)}" r="{fmt(radius)}" '
                   f'fill="none" stroke="#999999" stroke-width="1"/>')
        d = radius * math.sqrt(0.5)
        out.append(f'<path d="M {fmt(cx - d)} {fmt(cy - d)} L {fmt(cx + d)} {fmt(cy + d)} '
                   f'M {fmt(cx - d)} {fmt(cy + d)} L {fmt(cx + d)} {fmt(cy - d)}" '
                   f'stroke="#999999" stroke-width="1"/>')
        return "".join(out)
    if chart.chart in ("pie", "donut"):
        inner = radius * cfg.donut_inner_ratio if chart.chart == "donut" else 0.0
        for sector in chart.sectors:
            d = _sector_path(cx, cy, radius, inner, sector.start_deg, sector.end_deg)
            if d:
                out.append(f'<path d="{d}" fill="{sector.color}" '
                           f'stroke="#ffffff" stroke-width="1"/>')
        return "".join(out)
    if chart.chart == "star":
        k = len(chart.star_values)
        pts = []
        for j, t in enumerate(chart.star_values):
            ang = math.radians(-90.0 + 360.0 * j / k)
            spoke_x = cx + radius * math.cos(ang)
            spoke_y = cy + radius * math.sin(ang)
            out.append(f'<path d="M {fmt(cx)} {fmt(cy)} L {fmt(spoke_x)} {fmt(spoke_y)}" '
                       f'stroke="#bbbbbb" stroke-width="0.8"/>')
            pts.append((cx + radius * t * math.cos(ang),
                        cy + radius * t * math.sin(ang)))
        point_str = " ".join(f"{fmt(x)},{fmt(y)}" for x, y in pts)
        out.append(f'<polygon points="{point_str}" fill="{cfg.categorical_palette[0]}" '
                   f'fill-opacity="0.55" stroke="{cfg.categorical_palette[0]}" '
                   f'stroke-width="1.2"/>')
        return "".join(out)
    # heatmap: a k x 1 cell strip over the host bbox, clipped to its outline
    k = len(chart.cells)
    cell_w = (bx1 - bx0) / max(k, 1)
    out.append(f'<g clip-path="url(#clip-e{host.index})">')
    for j, color in enumerate(chart.cells):
        out.append(f'<rect x="{fmt(bx0 + j * cell_w)}" y="{fmt(by0)}" '
                   f'width="{fmt(cell_w)}" height="{fmt(by1 - by0)}" fill="{color}"/>')
    out.append("</g>")
    out.append(f'<path d="{host.path_data()}" fill="none" '
               f'stroke="#888888" stroke-width="1"/>')
    return "".join(out)


def _axis_markup(placement: Placement, canvas: tuple[float, float]) -> str:
    from datetime import datetime

    w, h = canvas
    out = []

    def label(axis: AxisSpec, value: float) -> str:
        if axis.data_type is DataType.TEMPORAL:
            return datetime.fromtimestamp(value).date().isoformat()
        return fmt(value, 2)

    x_axis, y_axis = placement.x_axis, placement.y_axis
    if x_axis is not None:
        x0, x1 = x_axis.pixel_range
        y = h * 0.97
        out.append(f'<path d="M {fmt(x0)} {fmt(y)} L {fmt(x1)} {fmt(y)}" '
                   f'stroke="#666666" stroke-width="1"/>')
        out.append(f'<text x="{fmt(x0)}" y="{fmt(y - 4)}" font-size="12" '
                   f'fill="#666666">{escape(label(x_axis, x_axis.domain[0]))}</text>')
        out.append(f'<text x="{fmt(x1)}" y="{fmt(y - 4)}" font-size="12" '
                   f'fill="#666666" text-anchor="end">'
                   f'{escape(label(x_axis, x_axis.domain[1]))}</text>')
        out.append(f'<text x="{fmt((x0 + x1) / 2)}" y="{fmt(y - 4)}" font-size="12" '
                   f'fill="#333333" text-anchor="middle">{escape(x_axis.name)}</text>')
    if y_axis is not None:
        y0, y1 = y_axis.pixel_range
        x = w * 0.03
        out.append(f'<path d="M {fmt(x)} {fmt(y0)} L {fmt(x)} {fmt(y1)}" '
                   f'stroke="#666666" stroke-width="1"/>')
        out.append(f'<text x="{fmt(x + 4)}" y="{fmt(y0)}" font-size="12" '
                   f'fill="#666666">{escape(label(y_axis, y_axis.domain[0]))}</text>')
        out.append(f'<text x="{fmt(x + 4)}" y="{fmt(y1 + 12)}" font-size="12" '
                   f'fill="#666666">{escape(label(y_axis, y_axis.domain[1]))}</text>')
        out.append(f'<text x="{fmt(x + 4)}" y="{fmt((y0 + y1) / 2)}" font-size="12" '
                   f'fill="#333333">{escape(y_axis.name)}</text>')
    return "".join(out)


def _basemap_markup(canvas: tuple[float, float], cfg: RenderConfig) -> str:
    w, h = canvas
    pad_x, pad_y = w * cfg.padding_fraction, h * cfg.padding_fraction
    out = []
    for ring in regions.WORLD_OUTLINE:
        pts = []
        for lon, lat in ring:
            x = pad_x + (lon + 180.0) / 360.0 * (w - 2 * pad_x)
            y = pad_y + (90.0 - lat) / 180.0 * (h - 2 * pad_y)
            pts.append(f"{fmt(x)},{fmt(y)}")
        out.append(f'<polygon points="{" ".join(pts)}" fill="#eef3f6" '
                   f'stroke="#c9d6de" stroke-width="1"/>')
    return "".join(out)


def scene_metadata(scene: GlyphScene) -> dict:
    return {
        "topic": scene.topic,
        "placement": scene.placement.kind,
        "reward": scene.reward,
        "solution": scene.solution_json,
        "assignments": [a.to_json() for a in scene.assignments],
        "augmentations": [a.to_json() for a in scene.augmentations],
        "reinstatements": [
            {"element_index": r.element_index, "action": r.action.value,
             "partner_index": r.partner_index}
            for r in scene.reinstatements
        ],
    }


def render_mgv(scene: GlyphScene, element_list: ElementList, ds: Dataset) -> bytes:
    """Serialize the scene to a standalone SVG document.

    Byte-stable for identical inputs: floats go through one formatter and
    the metadata island is dumped with sorted keys.
    """
    w, h = scene.canvas
    e0 = element_list.whole_image
    glyph_extent = max(e0.bbox[2] - e0.bbox[0], e0.bbox[3] - e0.bbox[1])
    scale = scene.placement.base_size / glyph_extent if glyph_extent > 0 else 1.0

    out = [
        f'<svg xmlns="{SVG_NS}" width="{fmt(w)}" height="{fmt(h)}" '
        f'viewBox="0 0 {fmt(w)} {fmt(h)}">',
        "<metadata id=\"mgv-mapping\">"
        + escape(json.dumps(scene_metadata(scene), sort_keys=True,
                            separators=(",", ":")))
        + "</metadata>",
    ]
    heat_hosts = {a.element_index for a in scene.augmentations
                  if a.chart == "heatmap"}
    if heat_hosts:
        out.append("<defs>")
        for idx in sorted(heat_hosts):
            host = element_list.element(idx)
            out.append(f'<clipPath id="clip-e{idx}">'
                       f'<path d="{host.path_data()}"/></clipPath>')
        out.append("</defs>")
    out.append(f'<rect x="0" y="0" width="{fmt(w)}" height="{fmt(h)}" '
               f'fill="#ffffff"/>')
    if scene.placement.kind == "map":
        out.append(_basemap_markup(scene.canvas, RenderConfig(
            canvas_width=w, canvas_height=h)))
    out.append(_axis_markup(scene.placement, scene.canvas))

    for glyph in scene.glyphs:
        px, py = glyph.position
        out.append(
            f'<g class="glyph" data-row="{glyph.row}" '
            f'transform="translate({fmt(px)} {fmt(py)}) scale({fmt(scale, 6)}) '
            f'translate({fmt(-e0.center[0])} {fmt(-e0.center[1])})">')
        charts_by_host = {c.element_index: c for c in glyph.charts}
        for op in glyph.element_ops:
            e = element_list.element(op.element_index)
            out.append(_element_markup(e, op))
        for idx in sorted(charts_by_host):
            host = element_list.element(idx)
            out.append(_chart_markup(charts_by_host[idx], host, RenderConfig()))
        out.append("</g>")
    out.append("</svg>")
    return "\n".join(out).encode("utf-8")


def decode_metadata(svg_bytes: bytes) -> dict:
    """Recover the mapping metadata island from a rendered document."""
    root = ET.fromstring(svg_bytes)
    for node in root.iter():
        if node.tag.rsplit("}", 1)[-1] == "metadata" \
                and node.attrib.get("id") == "mgv-mapping":
            return json.loads(node.text or "{}")
    raise ValueError("no mapping metadata found in SVG")


def decode_assignments(svg_bytes: bytes) -> list[ChannelAssignment]:
    meta = decode_metadata(svg_bytes)
    return [ChannelAssignment.from_json(a) for a in meta["assignments"]]


# --------------------------------------------------------------------------
# legend and thumbnails


def _thumbnail_markup(e: Element, x: float, y: float, box: float) -> str:
    bx0, by0, bx1, by1 = e.bbox
    extent = max(bx1 - bx0, by1 - by0)
    s = box * 0.9 / extent if extent > 0 else 1.0
    cx, cy = e.center
    fill = e.style.fill if e.style.filled else "none"
    stroke = e.style.stroke or ("#333333" if not e.style.filled else None)
    attrs = [f'd="{e.path_data()}"', f'fill="{escape(fill or "none")}"']
    if stroke:
        attrs.append(f'stroke="{escape(stroke)}" '
                     f'stroke-width="{fmt(e.style.stroke_width)}"')
    attrs.append(
        f'transform="translate({fmt(x + box / 2)} {fmt(y + box / 2)}) '
        f'scale({fmt(s, 6)}) translate({fmt(-cx)} {fmt(-cy)})"')
    return f"<path {' '.join(attrs)}/>"


def _legend_channel_glyph(channel: Channel, scale: ScaleSpec, x: float, y: float,
                          cfg: RenderConfig, swatch_colors: list[str]) -> str:
    out = []
    if channel in SIZE_CHANNELS:
        for j, s in enumerate((0.4, 0.7, 1.0)):
            side = 14 * s
            out.append(f'<rect x="{fmt(x + j * 18)}" y="{fmt(y + 14 - side)}" '
                       f'width="{fmt(side)}" height="{fmt(side)}" fill="#888888"/>')
    elif channel is Channel.COLOR_LIGHTNESS:
        ramp = cfg.sequential_ramp
        for j, color in enumerate((ramp[0], ramp[len(ramp) // 2], ramp[-1])):
            out.append(f'<rect x="{fmt(x + j * 18)}" y="{fmt(y)}" width="14" '
                       f'height="14" fill="{color}" stroke="#cccccc"/>')
    elif channel in (Channel.COLOR_HUE,):
        for j, color in enumerate(swatch_colors):
            out.append(f'<rect x="{fmt(x + j * 18)}" y="{fmt(y)}" width="14" '
                       f'height="14" fill="{color}"/>')
    elif channel in (Channel.ANGLE, Channel.ROTATION):
        for j, ang in enumerate((0, 45, 90)):
            cxj, cyj = x + j * 18 + 7, y + 7
            out.append(f'<path d="M {fmt(cxj)} {fmt(cyj + 6)} L {fmt(cxj)} {fmt(cyj - 6)}" '
                       f'stroke="#888888" stroke-width="2" '
                       f'transform="rotate({ang} {fmt(cxj)} {fmt(cyj)})"/>')
    else:  # position offset
        for j in range(3):
            out.append(f'<circle cx="{fmt(x + j * 18 + 7)}" cy="{fmt(y + 7 + (j - 1) * 4)}" '
                       f'r="4" fill="#888888"/>')
    return "".join(out)


def render_legend(scene: GlyphScene, element_list: ElementList,
                  ds: Dataset, config: RenderConfig | None = None) -> bytes:
    """One legend row per assignment (group member roles consolidated) and
    per chart augmentation: thumbnail, dimension name, channel key."""
    cfg = config or RenderConfig()
    rows: list[tuple[Element, str, Channel | None, ScaleSpec | None, list[str]]] = []
    seen_groups: set[tuple[str, Channel]] = set()
    for a in scene.assignments:
        e = element_list.element(a.element_index)
        if a.group_id is not None:
            key = (a.group_id, a.channel)
            if key in seen_groups:
                continue
            seen_groups.add(key)
            members = [m for m in scene.assignments
                       if m.group_id == a.group_id and m.channel == a.channel]
            names = ", ".join(ds.dimension(m.dimension_id).name for m in members)
            colors = [cfg.categorical_palette[m.member_index % len(cfg.categorical_palette)]
                      for m in members] if a.channel is Channel.COLOR_HUE else []
            rows.append((e, f"{names} ({a.channel.value})", a.channel, a.scale, colors))
        else:
            name = ds.dimension(a.dimension_id).name
            colors = []
            if a.channel is Channel.COLOR_HUE:
                colors = [cfg.categorical_palette[j % len(cfg.categorical_palette)]
                          for j in range(len(a.scale.labels))]
            rows.append((e, f"{name} ({a.channel.value})", a.channel, a.scale, colors))
    for aug in scene.augmentations:
        e = element_list.element(aug.element_index)
        names = ", ".join(ds.dimension(mid).name for mid in aug.series)
        colors = [cfg.categorical_palette[j % len(cfg.categorical_palette)]
                  for j in range(len(aug.series))]
        rows.append((e, f"{names} ({aug.chart} chart)", None, None, colors))

    row_h = 30.0
    width = 560.0
    height = max(row_h * len(rows) + 10, row_h)
    out = [f'<svg xmlns="{SVG_NS}" width="{fmt(width)}" height="{fmt(height)}" '
           f'viewBox="0 0 {fmt(width)} {fmt(height)}">',
           f'<rect x="0" y="0" width="{fmt(width)}" height="{fmt(height)}" '
           f'fill="#ffffff"/>']
    for i, (e, text, channel, scale, colors) in enumerate(rows):
        y = 5 + i * row_h
        out.append(_thumbnail_markup(e, 6, y, 22))
        out.append(f'<text x="36" y="{fmt(y + 15)}" font-size="13" '
                   f'fill="#222222">{escape(text)}</text>')
        if channel is not None and scale is not None:
            out.append(_legend_channel_glyph(channel, scale, 380, y + 3, cfg, colors))
        elif colors:
            for j, color in enumerate(colors):
                out.append(f'<rect x="{fmt(380 + j * 18)}" y="{fmt(y + 3)}" '
                           f'width="14" height="14" fill="{color}"/>')
    out.append("</svg>")
    return "\n".join(out).encode("utf-8")


def render_element_thumbnail(element_list: ElementList, index: int,
                             size: float = 64.0) -> bytes:
    """Standalone SVG of one element, for galleries and export bundles."""
    e = element_list.element(index)
    out = [f'<svg xmlns="{SVG_NS}" width="{fmt(size)}" height="{fmt(size)}" '
           f'viewBox="0 0 {fmt(size)} {fmt(size)}">',
           _thumbnail_markup(e, 0, 0, size),
           "</svg>"]
    return "\n".join(out).encode("utf-8")


# svg bytes -> png bytes; deployments plug in e.g. cairosvg.svg2png here,
# no rasterizer is bundled
PngRasterizer = Callable[[bytes], bytes]


def render_png(scene: GlyphScene, element_list: ElementList, ds: Dataset,
               rasterizer: PngRasterizer) -> bytes:
    """Rasterize the rendered scene through a deployment-provided hook."""
    return rasterizer(render_mgv(scene, element_list, ds))
