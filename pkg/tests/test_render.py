import dataclasses
import warnings

import pytest

from metaglyph import dataset as D
from metaglyph import metaphor, render as R, search as S, semantics
from metaglyph.config import EngineConfig, RenderConfig
from metaglyph.errors import ChannelExhausted

from conftest import candidate, collinear_svg, radial_svg, stacked_svg


def load(csv: bytes, name: str, groups=False, threshold=0.8):
    ds = D.load_spreadsheet(csv, name)
    if groups:
        ds = D.with_groups(ds, D.propose_groups(ds, threshold))
    table = semantics.importance_score(ds)
    return semantics.apply_importance(ds, table), table


def space_for(ds, table, element_list, pins=None):
    return S.build_mapping_space(ds, element_list, table.ranking, table.scores,
                                 pins)


def solution_for(space, mapping):
    """Build a complete MappingSolution from {slot_id: target}."""
    choices = []
    for slot, opts in zip(space.slots, space.options):
        target = mapping.get(slot.id, S.MappingTarget.none())
        choices.append(opts.index(target))
    products = [[0.5 if t.kind is not S.TargetKind.NONE else 0.0 for t in opts]
                for opts in space.options]
    ev = S.RewardEvaluator(space, products)
    return ev.solution(tuple(choices))


@pytest.fixture
def burger_elements():
    return metaphor.build_element_list(candidate(stacked_svg(), "burger.svg"))


@pytest.fixture
def radial_elements():
    return metaphor.build_element_list(candidate(radial_svg(), "badge.svg"))


@pytest.fixture
def rail_elements():
    return metaphor.build_element_list(candidate(collinear_svg(), "rail.svg"))


# --- size channel resolution -------------------------------------------------

def test_resolve_size_channel_by_structure(burger_elements, radial_elements,
                                           rail_elements):
    assert R.resolve_size_channel(radial_elements) is R.Channel.SIZE_AREA
    assert R.resolve_size_channel(rail_elements) is R.Channel.SIZE_LENGTH
    # stacked layers sit on a vertical line: |slope| > 1 -> height
    assert R.resolve_size_channel(burger_elements) is R.Channel.SIZE_HEIGHT


# --- assign_channels -----------------------------------------------------------

def test_single_numerical_dimension_takes_size_height(burger_elements):
    ds, table = load(b"name,sugars\nA,9\nB,5\nC,7\n", "burger.csv")
    space = space_for(ds, table, burger_elements)
    sol = solution_for(space, {"d1": S.MappingTarget.element(1)})
    assignments, augmentations = R.assign_channels(sol, space, ds, burger_elements)
    assert augmentations == []
    assert len(assignments) == 1
    a = assignments[0]
    assert a.channel is R.Channel.SIZE_HEIGHT
    assert a.element_index == 1
    assert a.scale.domain == (5.0, 9.0)
    assert a.scale.range == (0.25, 1.0)


def test_shared_element_orders_by_reward_product(burger_elements):
    ds, table = load(b"name,sugars,fat\nA,9,30\nB,5,10\nC,7,20\n", "burger.csv")
    space = space_for(ds, table, burger_elements)
    choices = []
    for slot, opts in zip(space.slots, space.options):
        target = (S.MappingTarget.element(2)
                  if slot.id in ("d1", "d2") else S.MappingTarget.none())
        choices.append(opts.index(target))
    products = []
    for slot, opts in zip(space.slots, space.options):
        row = []
        for t in opts:
            value = 0.0
            if t.kind is not S.TargetKind.NONE:
                value = 0.9 if slot.id == "d2" else 0.4  # fat outranks sugars
            row.append(value)
        products.append(row)
    sol = S.RewardEvaluator(space, products).solution(tuple(choices))
    assignments, _ = R.assign_channels(sol, space, ds, burger_elements)
    by_dim = {a.dimension_id: a.channel for a in assignments}
    assert by_dim["d2"] is R.Channel.SIZE_HEIGHT      # higher product: size first
    assert by_dim["d1"] is R.Channel.ANGLE            # next most frequent


def test_group_on_augmentable_element_becomes_chart(radial_elements):
    csv = b"name,iron pct,calcium pct,vitamin a pct,vitamin c pct\nA,2,10,4,6\nB,3,12,5,7\n"
    ds, table = load(csv, "nutrients.csv", groups=True)
    assert ds.groups, "expected a proposed group over the pct columns"
    gid = ds.groups[0].id
    space = space_for(ds, table, radial_elements)
    sol = solution_for(space, {gid: S.MappingTarget.element(1)})
    assignments, augmentations = R.assign_channels(sol, space, ds, radial_elements)
    assert len(augmentations) == 1
    aug = augmentations[0]
    assert aug.chart in ("pie", "donut", "heatmap")
    assert aug.element_index == 1
    assert aug.series == ds.groups[0].member_dimension_ids
    assert [a for a in assignments if a.group_id == gid] == []


def test_group_chart_respects_priority_config(radial_elements):
    csv = b"name,iron pct,calcium pct\nA,2,10\nB,3,12\n"
    ds, table = load(csv, "nutrients.csv", groups=True)
    gid = ds.groups[0].id
    space = space_for(ds, table, radial_elements)
    sol = solution_for(space, {gid: S.MappingTarget.element(1)})
    cfg = RenderConfig(chart_priority=("heatmap", "pie", "donut"))
    _, augmentations = R.assign_channels(sol, space, ds, radial_elements, cfg)
    assert augmentations[0].chart == "heatmap"


def test_group_with_negative_values_becomes_star(radial_elements):
    csv = b"name,delta score,gain score\nA,-2,10\nB,3,-12\n"
    ds, table = load(csv, "scores.csv", groups=True)
    gid = ds.groups[0].id
    space = space_for(ds, table, radial_elements)
    sol = solution_for(space, {gid: S.MappingTarget.element(1)})
    _, augmentations = R.assign_channels(sol, space, ds, radial_elements)
    assert augmentations[0].chart == "star"


def test_group_on_plain_element_replicates_with_three_roles(burger_elements):
    csv = b"name,area 2001,area 2002,area 2003\nA,5,6,7\nB,8,9,10\n"
    ds, table = load(csv, "forest.csv", groups=True)
    gid = ds.groups[0].id
    members = ds.groups[0].member_dimension_ids
    space = space_for(ds, table, burger_elements)
    sol = solution_for(space, {gid: S.MappingTarget.element(2)})
    assignments, augmentations = R.assign_channels(sol, space, ds, burger_elements)
    assert augmentations == []
    for j, mid in enumerate(members):
        roles = sorted(a.channel for a in assignments
                       if a.dimension_id == mid and a.member_index == j)
        assert roles == sorted([R.Channel.ROTATION, R.Channel.COLOR_HUE,
                                R.Channel.SIZE_HEIGHT])
    assert len(assignments) == 3 * len(members)


def test_channel_exhausted_on_overloaded_element(burger_elements):
    csv = b"a,b,c,d\n1,2,3,4\n5,6,7,8\n"
    ds, table = load(csv, "x.csv")
    space = space_for(ds, table, burger_elements)
    sol = solution_for(space, {sid: S.MappingTarget.element(1)
                               for sid in ("d0", "d1", "d2", "d3")})
    with pytest.raises(ChannelExhausted):
        R.assign_channels(sol, space, ds, burger_elements)


def test_channel_uniqueness_invariant(burger_elements):
    csv = b"name,sugars,fat,rating\nA,9,30,4\nB,5,10,3\nC,7,20,5\n"
    ds, table = load(csv, "burger.csv")
    space = space_for(ds, table, burger_elements)
    sol = solution_for(space, {"d1": S.MappingTarget.element(1),
                               "d2": S.MappingTarget.element(1),
                               "d3": S.MappingTarget.element(1)})
    assignments, _ = R.assign_channels(sol, space, ds, burger_elements)
    per_element = {}
    for a in assignments:
        key = (a.element_index, a.member_index)
        assert a.channel not in per_element.get(key, set())
        per_element.setdefault(key, set()).add(a.channel)


# --- reinstatement ---------------------------------------------------------------

def _reinstate_case(action_channel, burger_elements):
    ds, table = load(b"name,sugars\nA,9\nB,5\nC,7\n", "burger.csv")
    space = space_for(ds, table, burger_elements)
    sol = solution_for(space, {"d1": S.MappingTarget.element(1)})
    assignments, augmentations = R.assign_channels(sol, space, ds, burger_elements)
    if action_channel is not None:
        assignments = [dataclasses.replace(a, channel=action_channel)
                       for a in assignments]
    return R.reinstate_removed(burger_elements, assignments, augmentations)


def test_reinstate_scale_with_size_partner(burger_elements):
    # seeds overlap the top bun (element 1), which encodes size
    actions = {r.element_index: r for r in _reinstate_case(None, burger_elements)}
    for removed in burger_elements.removed:
        assert actions[removed.element_index if hasattr(removed, "element_index")
                       else removed.index].action is R.ReinstateAction.SCALE_WITH_PARTNER


def test_reinstate_keep_when_partner_encodes_color(burger_elements):
    actions = _reinstate_case(R.Channel.COLOR_LIGHTNESS, burger_elements)
    assert all(r.action is R.ReinstateAction.KEEP_ORIGINAL for r in actions)


def test_reinstate_delete_when_partner_unencoded(burger_elements):
    ds, table = load(b"name,sugars\nA,9\nB,5\nC,7\n", "burger.csv")
    space = space_for(ds, table, burger_elements)
    sol = solution_for(space, {"d1": S.MappingTarget.element(3)})  # patty only
    assignments, augmentations = R.assign_channels(sol, space, ds, burger_elements)
    actions = R.reinstate_removed(burger_elements, assignments, augmentations)
    assert all(r.action is R.ReinstateAction.DELETE for r in actions)


def test_reinstate_delete_when_partner_becomes_chart(radial_elements):
    csv = b"name,iron pct,calcium pct\nA,2,10\nB,3,12\n"
    ds, table = load(csv, "nutrients.csv", groups=True)
    gid = ds.groups[0].id
    space = space_for(ds, table, radial_elements)
    sol = solution_for(space, {gid: S.MappingTarget.element(1)})
    assignments, augmentations = R.assign_channels(sol, space, ds, radial_elements)
    actions = R.reinstate_removed(radial_elements, assignments, augmentations)
    # the tiny dots overlap ring-a (element 1), now a chart host
    assert all(r.action is R.ReinstateAction.DELETE for r in actions)


# --- placement --------------------------------------------------------------------

def test_cartesian_corners_with_padding():
    ds, _ = load(b"x,y\n0,0\n1,1\n", "xy.csv")
    placement = R.place_glyphs({1: "d0", 2: "d1"}, ds)
    assert placement.kind == "cartesian"
    assert placement.positions[0] == (50.0, 950.0)   # data (0,0): bottom-left
    assert placement.positions[1] == (950.0, 50.0)   # data (1,1): top-right


def test_timeline_equidistant_dates():
    ds, _ = load(b"when,v\n2020-01-01,1\n2020-01-11,2\n2020-01-21,3\n", "t.csv")
    placement = R.place_glyphs({1: "d0"}, ds)
    assert placement.kind == "timeline"
    xs = [p[0] for p in placement.positions]
    assert xs[1] - xs[0] == pytest.approx(xs[2] - xs[1])
    assert {p[1] for p in placement.positions} == {500.0}


def test_ordered_grid_nine_rows():
    csv = b"name\n" + b"\n".join(b"r%d" % i for i in range(9)) + b"\n"
    ds, _ = load(csv, "grid.csv")
    placement = R.place_glyphs({}, ds)
    assert placement.kind == "ordered"
    xs = sorted({round(p[0], 6) for p in placement.positions})
    ys = sorted({round(p[1], 6) for p in placement.positions})
    assert len(xs) == 3 and len(ys) == 3


def test_categorical_axis_sorts_rows():
    ds, _ = load(b"kind,v\nzebra,1\napple,2\nmango,3\n", "k.csv")
    placement = R.place_glyphs({1: "d0"}, ds)
    assert placement.kind == "ordered"
    # apple (row 1) takes the first grid cell, zebra (row 0) the last
    first = min(placement.positions, key=lambda p: (p[1], p[0]))
    assert placement.positions[1] == first


def test_map_placement_and_unknown_region_margin():
    known = ["Japan", "Brazil", "France", "Kenya", "Canada", "India", "Peru",
             "Norway", "Egypt", "Chile", "Spain", "Italy", "Ghana", "Cuba",
             "Oman", "Nepal", "Malta", "Laos", "Mali", "Chad"]
    rows = known + ["Atlantis"]  # 20 of 21 known: the 95% rule still holds
    csv = b"country,v\n" + b"\n".join(
        f"{c},{i}".encode() for i, c in enumerate(rows)) + b"\n"
    ds, _ = load(csv, "world.csv")
    assert ds.dimension("d0").data_type is D.DataType.GEOSPATIAL
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        placement = R.place_glyphs({1: "d0"}, ds)
    assert placement.kind == "map"
    assert placement.unlocated_rows == (20,)
    assert any("atlantis" in str(w.message).lower() for w in caught)
    japan, brazil = placement.positions[0], placement.positions[1]
    assert japan[0] > brazil[0]      # Japan lies far east of Brazil
    assert japan[1] < brazil[1]      # and north of it
    assert placement.positions[20][1] > 900  # margin strip at the bottom


def test_placement_scale_equivariance():
    csv = b"x,y\n" + b"\n".join(b"%d,%d" % (i, i * 2) for i in range(100)) + b"\n"
    ds, _ = load(csv, "xy.csv")
    small = R.place_glyphs({1: "d0", 2: "d1"}, ds, RenderConfig())
    big = R.place_glyphs({1: "d0", 2: "d1"}, ds,
                         RenderConfig(canvas_width=2000.0, canvas_height=2000.0))
    assert big.base_size == pytest.approx(2 * small.base_size)
    for (sx, sy), (bx, by) in zip(small.positions, big.positions):
        assert (bx, by) == (pytest.approx(2 * sx), pytest.approx(2 * sy))


def test_base_size_clamps():
    few, _ = load(b"v\n1\n2\n", "x.csv")
    assert R.place_glyphs({}, few).base_size == 160.0
    many_csv = b"v\n" + b"\n".join(b"%d" % i for i in range(2000)) + b"\n"
    many, _ = load(many_csv, "x.csv")
    assert R.place_glyphs({}, many).base_size == 24.0


def test_overlap_probe_gates_stacked_rows():
    ds, table = load(b"x,y\n5,5\n5,5\n5,5\n", "xy.csv")
    el = metaphor.build_element_list(candidate(stacked_svg()))
    space = space_for(ds, table, el)
    probe = R.make_overlap_probe(space, ds)
    x_slot = next(i for i, s in enumerate(space.slots) if s.id == "d0")
    y_slot = next(i for i, s in enumerate(space.slots) if s.id == "d1")
    ok, p = probe(((1, x_slot), (2, y_slot)))
    assert (ok, p) == (0.0, 1.0)    # all rows stack on one spot
    ok_grid, p_grid = probe(())
    assert (ok_grid, p_grid) == (1.0, 0.0)


# --- scene + SVG -------------------------------------------------------------------

def build_everything(csv, name, svg_bytes, mapping, groups=False,
                     config=None):
    ds, table = load(csv, name, groups=groups)
    el = metaphor.build_element_list(candidate(svg_bytes, "img.svg"))
    space = space_for(ds, table, el)
    sol = solution_for(space, mapping)
    cfg = config or EngineConfig()
    scene = R.build_scene(sol, space, ds, el, cfg.render)
    svg = R.render_mgv(scene, el, ds)
    return ds, el, space, scene, svg


def test_pie_sectors_sum_to_360():
    csv = b"name,iron pct,calcium pct,zinc pct\nA,2,10,3\nB,3,12,4\nC,1,1,1\n"
    ds, table = load(csv, "nutrients.csv", groups=True)
    gid = ds.groups[0].id
    el = metaphor.build_element_list(candidate(radial_svg(), "badge.svg"))
    space = space_for(ds, table, el)
    sol = solution_for(space, {gid: S.MappingTarget.element(1)})
    cfg = RenderConfig(chart_priority=("pie",))
    scene = R.build_scene(sol, space, ds, el, cfg)
    for glyph in scene.glyphs:
        for chart in glyph.charts:
            assert chart.chart == "pie"
            total = sum(s.end_deg - s.start_deg for s in chart.sectors)
            assert total == pytest.approx(360.0, abs=1e-6)


def test_pie_equal_split_two_sectors():
    csv = b"name,iron pct,calcium pct\nA,5,5\n"
    ds, table = load(csv, "nutrients.csv", groups=True)
    gid = ds.groups[0].id
    el = metaphor.build_element_list(candidate(radial_svg(), "badge.svg"))
    space = space_for(ds, table, el)
    sol = solution_for(space, {gid: S.MappingTarget.element(1)})
    scene = R.build_scene(sol, space, ds, el, RenderConfig(chart_priority=("pie",)))
    sectors = scene.glyphs[0].charts[0].sectors
    assert len(sectors) == 2
    assert all(s.end_deg - s.start_deg == pytest.approx(180.0) for s in sectors)


def test_zero_sum_row_renders_hatch():
    csv = b"name,iron pct,calcium pct\nA,5,5\nB,0,0\n"
    ds, table = load(csv, "nutrients.csv", groups=True)
    gid = ds.groups[0].id
    el = metaphor.build_element_list(candidate(radial_svg(), "badge.svg"))
    space = space_for(ds, table, el)
    sol = solution_for(space, {gid: S.MappingTarget.element(1)})
    scene = R.build_scene(sol, space, ds, el, RenderConfig(chart_priority=("pie",)))
    assert not scene.glyphs[0].charts[0].hatch
    assert scene.glyphs[1].charts[0].hatch


def test_star_vertex_count_equals_group_size():
    csv = b"name,delta score,gain score,loss score\nA,-1,2,3\nB,4,-5,6\n"
    ds, table = load(csv, "scores.csv", groups=True)
    gid = ds.groups[0].id
    el = metaphor.build_element_list(candidate(radial_svg(), "badge.svg"))
    space = space_for(ds, table, el)
    sol = solution_for(space, {gid: S.MappingTarget.element(1)})
    scene = R.build_scene(sol, space, ds, el)
    for glyph in scene.glyphs:
        assert glyph.charts[0].chart == "star"
        assert len(glyph.charts[0].star_values) == 3


def test_size_channel_strictly_monotone():
    csv = b"name,sugars\nA,9\nB,5\nC,7\nD,6\n"
    ds, el, space, scene, svg = build_everything(
        csv, "burger.csv", stacked_svg(), {"d1": S.MappingTarget.element(1)})
    values = [float(v) for v in ds.dimension("d1").values]
    metrics = []
    for glyph in scene.glyphs:
        op = next(o for o in glyph.element_ops if o.element_index == 1)
        metrics.append(op.scale_y)
    order_by_value = sorted(range(4), key=lambda i: values[i])
    for a, b in zip(order_by_value, order_by_value[1:]):
        assert metrics[a] < metrics[b]


def test_size_area_hits_floor_and_ceiling():
    csv = b"name,v\nA,10\nB,20\n"
    ds, table = load(csv, "disc.csv")
    el = metaphor.build_element_list(candidate(radial_svg(), "badge.svg"))
    space = space_for(ds, table, el)
    sol = solution_for(space, {"d1": S.MappingTarget.element(2)})
    scene = R.build_scene(sol, space, ds, el)
    ops = [next(o for o in g.element_ops if o.element_index == 2)
           for g in scene.glyphs]
    # area factor = scale_x * scale_y: min -> 0.25, max -> 1.0
    assert ops[0].scale_x * ops[0].scale_y == pytest.approx(0.25)
    assert ops[1].scale_x * ops[1].scale_y == pytest.approx(1.0)


def test_render_byte_stable_and_metadata_roundtrip():
    csv = b"name,sugars,fat\nA,9,30\nB,5,10\nC,7,20\n"
    ds, el, space, scene, svg = build_everything(
        csv, "burger.csv", stacked_svg(),
        {"d1": S.MappingTarget.element(1), "d2": S.MappingTarget.element(3)})
    svg2 = R.render_mgv(scene, el, ds)
    assert svg == svg2
    decoded = R.decode_assignments(svg)
    assert [a.to_json() for a in decoded] == [a.to_json() for a in scene.assignments]
    meta = R.decode_metadata(svg)
    assert meta["topic"] == "burger"
    assert meta["placement"] == scene.placement.kind


def test_group_replication_rotates_and_scales(burger_elements):
    csv = b"name,area 2001,area 2002,area 2003\nA,5,6,7\nB,8,9,10\n"
    ds, table = load(csv, "forest.csv", groups=True)
    gid = ds.groups[0].id
    space = space_for(ds, table, burger_elements)
    sol = solution_for(space, {gid: S.MappingTarget.element(2)})
    scene = R.build_scene(sol, space, ds, burger_elements)
    replicas = [o for o in scene.glyphs[0].element_ops if o.element_index == 2]
    assert len(replicas) == 3
    assert [o.rotate_deg for o in replicas] == [0.0, 120.0, 240.0]
    fills = {o.fill for o in replicas}
    assert len(fills) == 3
    scales = {round(o.scale_y, 6) for o in replicas}
    assert len(scales) == 3            # distinct member values -> distinct sizes


def test_heatmap_chart_clips_to_host_outline():
    csv = b"name,iron pct,calcium pct\nA,2,10\nB,3,12\n"
    ds, table = load(csv, "nutrients.csv", groups=True)
    gid = ds.groups[0].id
    el = metaphor.build_element_list(candidate(radial_svg(), "badge.svg"))
    space = space_for(ds, table, el)
    sol = solution_for(space, {gid: S.MappingTarget.element(1)})
    scene = R.build_scene(sol, space, ds, el,
                          RenderConfig(chart_priority=("heatmap",)))
    svg = R.render_mgv(scene, el, ds)
    text = svg.decode()
    assert '<clipPath id="clip-e1">' in text
    assert 'clip-path="url(#clip-e1)"' in text


def test_legend_row_counts():
    csv = b"name,sugars,fat,rating\nA,9,30,4\nB,5,10,3\nC,7,20,5\n"
    ds, el, space, scene, svg = build_everything(
        csv, "burger.csv", stacked_svg(),
        {"d1": S.MappingTarget.element(1), "d2": S.MappingTarget.element(3),
         "d3": S.MappingTarget.element(4)})
    legend = R.render_legend(scene, el, ds).decode()
    assert legend.count("<text") == 3


def test_legend_group_color_row_has_member_swatches(burger_elements):
    csv = b"name,v 2001,v 2002,v 2003,v 2004\nA,5,6,7,8\nB,8,9,10,11\n"
    ds, table = load(csv, "forest.csv", groups=True)
    gid = ds.groups[0].id
    space = space_for(ds, table, burger_elements)
    sol = solution_for(space, {gid: S.MappingTarget.element(2)})
    scene = R.build_scene(sol, space, ds, burger_elements)
    legend = R.render_legend(scene, ds=ds, element_list=burger_elements).decode()
    color_row = [line for line in legend.splitlines() if "color_hue" in line]
    assert len(color_row) == 1
    palette = RenderConfig().categorical_palette
    assert sum(line.count(palette[j]) for j in range(4)
               for line in legend.splitlines() if "rect" in line) >= 4


def test_element_thumbnail_is_valid_svg(burger_elements):
    thumb = R.render_element_thumbnail(burger_elements, 1)
    import xml.etree.ElementTree as ET

    root = ET.fromstring(thumb)
    assert root.tag.endswith("svg")


def test_render_png_uses_the_hook(burger_elements):
    ds, table = load(b"name,sugars\nA,9\nB,5\nC,7\n", "burger.csv")
    space = space_for(ds, table, burger_elements)
    sol = solution_for(space, {"d1": S.MappingTarget.element(1)})
    scene = R.build_scene(sol, space, ds, burger_elements)
    seen = {}

    def fake_rasterizer(svg_bytes: bytes) -> bytes:
        seen["svg"] = svg_bytes
        return b"PNG!" + svg_bytes[:8]

    png = R.render_png(scene, burger_elements, ds, fake_rasterizer)
    assert png.startswith(b"PNG!")
    assert seen["svg"] == R.render_mgv(scene, burger_elements, ds)
