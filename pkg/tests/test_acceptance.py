"""Acceptance criteria, one test per criterion at its stated tolerance.

Run with ``pytest -v tests/test_acceptance.py`` for one pass/fail line per
criterion; each test also prints an explicit PASS line.
"""

import dataclasses
import math
import random
import time

import pytest

from metaglyph import dataset as D
from metaglyph import geometry, metaphor, pipeline, render as R, search as S, semantics
from metaglyph.config import EngineConfig, SearchConfig
from metaglyph.dataset import DataType
from metaglyph.errors import TooComplex, TooSimple

from conftest import (
    candidate,
    collinear_svg,
    many_elements_svg,
    pruning_svg,
    radial_svg,
    stacked_svg,
)


def _synthetic_space(n_dims, n_elements):
    slots = tuple(
        S.Slot(id=f"d{i}", name=f"dim{i}", kind="dimension",
               data_type=DataType.NUMERICAL, importance=1.0)
        for i in range(n_dims))
    elements = [S.MappingTarget.element(j) for j in range(n_elements + 1)]
    options = tuple(
        tuple(elements + [S.MappingTarget.axis(1), S.MappingTarget.axis(2),
                          S.MappingTarget.none()])
        for _ in range(n_dims))
    return S.MappingSpace(slots, options)


def test_mcts_oracle_equivalence_50_instances():
    """50 random instances: MCTS(10x space budget) == exhaustive max, <5s."""
    agree = 0
    search_elapsed = 0.0
    for instance in range(50):
        inst_rng = random.Random(9000 + instance)
        space = _synthetic_space(inst_rng.choice([2, 3, 4]),
                                 inst_rng.choice([2, 3, 4]))
        products = [[inst_rng.random() for _ in opts] for opts in space.options]
        evaluator = S.RewardEvaluator(space, products, SearchConfig())
        optimum, _ = S.enumerate_optimum(space, evaluator)
        budget = S.SearchBudget(iterations=10 * space.size(), time_ms=None)
        t0 = time.monotonic()
        outcome = S.run_search(space, evaluator, budget, seed=instance)
        search_elapsed += time.monotonic() - t0
        if abs(outcome.best.reward.r - optimum) <= 1e-9:
            agree += 1
    assert agree >= 49, f"only {agree}/50 matched the exhaustive optimum"
    assert search_elapsed < 5.0, f"search took {search_elapsed:.2f}s"
    print(f"PASS: MCTS oracle equivalence ({agree}/50, {search_elapsed:.2f}s)")


def test_uct_formula_and_default_constant():
    node = S.SearchNode(0, 0, 0)
    node.r, node.n = 2.0, 2
    expected = 1 + 4 * math.sqrt(math.log(4) / 2)
    assert S.uct(node, 4, 4.0) == pytest.approx(expected, abs=1e-9)
    assert SearchConfig().exploration_c == 4.0
    print("PASS: UCT formula at (r=2, n=2, N=4, c=4) and default c = 4")


def test_pruning_half_percent_boundary():
    elements = metaphor.segment(candidate(pruning_svg((0.004, 0.006))))
    whole = metaphor.whole_image_element(elements)
    essential, removed = metaphor.prune(
        elements, 0.005, geometry.rect_area(whole.bbox))
    assert [e.index for e in removed] == [2]
    assert {e.index for e in essential} == {1, 3}
    print("PASS: pruning removes exactly the 0.4% element at the 0.5% rule")


def test_overlap_gate_thresholds():
    cases = [
        ([(0, 0, 1, 1), (5, 5, 6, 6)], 0.0, 1),
        ([(0, 0, 1, 1), (0.8, 0, 1.8, 1)], 0.2, 1),
        ([(0, 0, 1, 1), (0.5, 0, 1.5, 1)], 0.5, 0),
        ([(0, 0, 1, 1), (0, 0, 1, 1)], 1.0, 0),
    ]
    for boxes, p_expected, o_expected in cases:
        o, p = S.overlap_score(boxes)
        assert p == pytest.approx(p_expected, abs=1e-12)
        assert o == o_expected
    print("PASS: overlap gate O = {1,1,0,0} at P = {0, 0.2, 0.5, 1.0}")


def test_reward_gates_and_hand_built_value():
    space = _synthetic_space(2, 2)
    none_idx = len(space.options[0]) - 1

    # duplicate axes score exactly 0
    ones = [[1.0] * len(o) for o in space.options]
    ev = S.RewardEvaluator(space, ones, SearchConfig())
    axis1 = space.options[0].index(S.MappingTarget.axis(1))
    assert ev.value((axis1, axis1)) == 0.0

    # axis count outside the configured valid set scores exactly 0
    strict = S.RewardEvaluator(space, ones, SearchConfig().strict())
    axis2 = space.options[1].index(S.MappingTarget.axis(2))
    assert strict.value((axis1, axis2)) == 0.0

    # the all-empty solution scores exactly 0
    assert ev.value((none_idx, none_idx)) == 0.0

    # hand-built 2-pair solution: I*S = {1.0, 0.5}, O = 1 -> 0.75
    products = [[0.0] * len(o) for o in space.options]
    e1 = space.options[0].index(S.MappingTarget.element(1))
    e2 = space.options[1].index(S.MappingTarget.element(2))
    products[0][e1] = 1.0
    products[1][e2] = 0.5
    ev2 = S.RewardEvaluator(space, products, SearchConfig())
    breakdown = ev2.breakdown((e1, e2))
    assert breakdown.overlap_ok == 1
    assert breakdown.r == pytest.approx(0.75, abs=1e-12)
    print("PASS: reward gates (dup axis, axis count, all-empty) and 0.75 value")


def test_structure_detection_with_invariance():
    for make, dx, dy in ((radial_svg, 37.0, -12.0), (collinear_svg, 5.0, 9.0)):
        base = metaphor.build_element_list(candidate(make()))
        scaled = metaphor.build_element_list(candidate(make(scale=10.0)))
        moved = metaphor.build_element_list(candidate(make(dx=dx, dy=dy)))
        assert base.structure is scaled.structure is moved.structure
    radial = metaphor.build_element_list(candidate(radial_svg()))
    assert radial.structure is metaphor.StructureKind.RADIAL
    rail = metaphor.build_element_list(candidate(collinear_svg()))
    assert rail.structure is metaphor.StructureKind.NON_RADIAL
    assert abs(rail.slope) < 1e-9
    print("PASS: radial/collinear structure detection, scale & translation invariant")


def test_element_count_gate():
    with pytest.raises(TooSimple):
        metaphor.build_element_list(candidate(many_elements_svg(1)))
    with pytest.raises(TooComplex):
        metaphor.build_element_list(candidate(many_elements_svg(40)))
    for n in range(2, 9):
        el = metaphor.build_element_list(candidate(many_elements_svg(n)))
        assert len(el.essential) == n
    print("PASS: element-count gate rejects 1 and 40, accepts 2-8")


def _desk_corpus(tmp_path):
    corpus = tmp_path / "corpus"
    corpus.mkdir()
    (corpus / "burger.svg").write_bytes(stacked_svg())
    (corpus / "badge.svg").write_bytes(radial_svg())
    (corpus / "rail.svg").write_bytes(collinear_svg())
    metaphor.LocalCorpus(corpus).write_tags({
        "burger.svg": ["burger"], "badge.svg": ["burger"], "rail.svg": ["burger"]})
    return corpus


DESK_CSV = (
    b"name,calories,sugars,protein,fat,rating\n"
    + b"\n".join(
        b"%s,%d,%d,%d,%d,%d" % (name, 300 + 47 * i, 4 + i, 12 + 3 * i,
                                10 + 4 * i, 1 + (i % 5))
        for i, name in enumerate([b"Classic", b"Slim", b"Veggie", b"Double",
                                  b"Spicy", b"Bacon", b"Fish", b"Chicken",
                                  b"Deluxe", b"Mini"]))
    + b"\n"
)


def test_full_pipeline_determinism(tmp_path):
    corpus = _desk_corpus(tmp_path)
    ds = D.load_spreadsheet(DESK_CSV, "burger.csv")
    cfg = dataclasses.replace(
        EngineConfig(),
        search=SearchConfig(iterations=800, time_budget_ms=None))
    candidates = metaphor.search_images(
        ds.topic, corpus=metaphor.LocalCorpus(corpus), limit=5)
    a = pipeline.generate(ds, candidates, config=cfg, seed=42)
    b = pipeline.generate(ds, candidates, config=cfg, seed=42)
    assert [r.candidate_id for r in a.results] == [r.candidate_id for r in b.results]
    assert [r.reward for r in a.results] == [r.reward for r in b.results]
    for ra, rb in zip(a.results, b.results):
        assert ra.svg == rb.svg
        assert ra.legend == rb.legend
    print(f"PASS: determinism, {len(a.results)} ranked results byte-identical")


def test_encoding_correctness():
    # pie sector angles sum to 360 +- 1e-6
    csv = b"name,iron pct,calcium pct,zinc pct\nA,2,10,3\nB,3,12,4\nC,5,0,2\n"
    ds = D.load_spreadsheet(csv, "nutrients.csv")
    ds = D.with_groups(ds, D.propose_groups(ds, 0.8))
    gid = ds.groups[0].id
    table = semantics.importance_score(ds)
    ds = semantics.apply_importance(ds, table)
    el = metaphor.build_element_list(candidate(radial_svg(), "badge.svg"))
    space = S.build_mapping_space(ds, el, table.ranking, table.scores)
    choices = []
    for slot, opts in zip(space.slots, space.options):
        target = (S.MappingTarget.element(1) if slot.id == gid
                  else S.MappingTarget.none())
        choices.append(opts.index(target))
    products = [[0.5 if t.kind is not S.TargetKind.NONE else 0.0 for t in opts]
                for opts in space.options]
    sol = S.RewardEvaluator(space, products).solution(tuple(choices))
    scene = R.build_scene(sol, space, ds, el,
                          dataclasses.replace(EngineConfig().render,
                                              chart_priority=("pie",)))
    for glyph in scene.glyphs:
        total = sum(s.end_deg - s.start_deg for s in glyph.charts[0].sectors)
        assert total == pytest.approx(360.0, abs=1e-6)

    # size channels strictly monotone in the data
    csv2 = b"name,sugars\nA,9\nB,5\nC,7\nD,6\nE,8\n"
    ds2 = D.load_spreadsheet(csv2, "burger.csv")
    table2 = semantics.importance_score(ds2)
    ds2 = semantics.apply_importance(ds2, table2)
    el2 = metaphor.build_element_list(candidate(stacked_svg(), "burger.svg"))
    space2 = S.build_mapping_space(ds2, el2, table2.ranking, table2.scores)
    choices2 = []
    for slot, opts in zip(space2.slots, space2.options):
        target = (S.MappingTarget.element(1) if slot.id == "d1"
                  else S.MappingTarget.none())
        choices2.append(opts.index(target))
    products2 = [[0.5 if t.kind is not S.TargetKind.NONE else 0.0 for t in opts]
                 for opts in space2.options]
    sol2 = S.RewardEvaluator(space2, products2).solution(tuple(choices2))
    scene2 = R.build_scene(sol2, space2, ds2, el2)
    values = [float(v) for v in ds2.dimension("d1").values]
    metrics = [next(o for o in glyph.element_ops if o.element_index == 1).scale_y
               for glyph in scene2.glyphs]
    ordered = sorted(range(len(values)), key=values.__getitem__)
    for lo, hi in zip(ordered, ordered[1:]):
        assert metrics[lo] < metrics[hi]

    # group on a non-augmentable element: exactly rotation+color+size per member
    csv3 = b"name,area 2001,area 2002,area 2003\nA,5,6,7\nB,8,9,10\n"
    ds3 = D.load_spreadsheet(csv3, "forest.csv")
    ds3 = D.with_groups(ds3, D.propose_groups(ds3, 0.8))
    gid3 = ds3.groups[0].id
    members = ds3.groups[0].member_dimension_ids
    table3 = semantics.importance_score(ds3)
    ds3 = semantics.apply_importance(ds3, table3)
    space3 = S.build_mapping_space(ds3, el2, table3.ranking, table3.scores)
    choices3 = []
    for slot, opts in zip(space3.slots, space3.options):
        target = (S.MappingTarget.element(2) if slot.id == gid3
                  else S.MappingTarget.none())
        choices3.append(opts.index(target))
    products3 = [[0.5 if t.kind is not S.TargetKind.NONE else 0.0 for t in opts]
                 for opts in space3.options]
    sol3 = S.RewardEvaluator(space3, products3).solution(tuple(choices3))
    assignments, augmentations = R.assign_channels(sol3, space3, ds3, el2)
    assert augmentations == []
    size_channel = R.resolve_size_channel(el2)
    for mid in members:
        roles = sorted(a.channel.value for a in assignments
                       if a.dimension_id == mid)
        assert roles == sorted([R.Channel.ROTATION.value,
                                R.Channel.COLOR_HUE.value, size_channel.value])
    assert len(assignments) == 3 * len(members)
    print("PASS: pie angle sum, strict size monotonicity, (rotation, color, size) roles")


def test_end_to_end_desk_scale_under_10s(tmp_path):
    corpus = _desk_corpus(tmp_path)
    ds = D.load_spreadsheet(DESK_CSV, "burger.csv")   # 10 rows x 6 columns
    assert ds.rows == 10 and len(ds.dimensions) == 6
    started = time.monotonic()
    candidates = metaphor.search_images(
        ds.topic, corpus=metaphor.LocalCorpus(corpus),
        limit=EngineConfig().service.candidates_per_generate)
    assert len(candidates) == 3
    report = pipeline.generate(
        ds, candidates, config=EngineConfig(), seed=0,
        total_budget_ms=EngineConfig().service.total_budget_ms)
    elapsed = time.monotonic() - started
    assert len(report.results) >= 1
    assert elapsed < 10.0, f"end-to-end took {elapsed:.2f}s"
    print(f"PASS: end-to-end {len(report.results)} results in {elapsed:.2f}s")
