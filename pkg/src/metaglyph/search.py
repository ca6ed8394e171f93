"""Mapping-space search: UCT-guided Monte Carlo tree search plus an
exhaustive oracle.

Dimensions and groups, ordered by importance, form the tree depths; each
depth's options are the essential elements (plus the whole image), the two
placement axes (dimensions only), and the empty target.  One search
iteration selects by maximum UCT, expands one random unexpanded option,
rolls out uniformly to a complete solution, scores it, and backpropagates
the best-seen reward.
"""

from __future__ import annotations

import json
import math
import random
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterable

from .config import SearchConfig
from .dataset import Dataset, DataType
from .errors import NoValidSolution, SpaceTooLarge, TreeExhausted
from .metaphor import ElementList


class TargetKind(str, Enum):
    ELEMENT = "element"
    AXIS = "axis"
    NONE = "none"


@dataclass(frozen=True)
class MappingTarget:
    kind: TargetKind
    index: int = 0  # element index (0 = whole image) or axis number (1 | 2)

    @staticmethod
    def element(index: int) -> "MappingTarget":
        return MappingTarget(TargetKind.ELEMENT, index)

    @staticmethod
    def axis(k: int) -> "MappingTarget":
        return MappingTarget(TargetKind.AXIS, k)

    @staticmethod
    def none() -> "MappingTarget":
        return MappingTarget(TargetKind.NONE, 0)

    def to_json(self) -> dict:
        return {"kind": self.kind.value, "index": self.index}

    @staticmethod
    def from_json(payload: dict) -> "MappingTarget":
        return MappingTarget(TargetKind(payload["kind"]), int(payload.get("index", 0)))


@dataclass(frozen=True)
class Slot:
    """One tree depth: an individual dimension or a data group."""

    id: str
    name: str
    kind: str                      # "dimension" | "group"
    data_type: DataType | None
    importance: float
    member_ids: tuple[str, ...] = ()


@dataclass(frozen=True)
class MappingSpace:
    slots: tuple[Slot, ...]
    options: tuple[tuple[MappingTarget, ...], ...]

    def size(self) -> int:
        total = 1
        for opts in self.options:
            total *= len(opts)
        return total


@dataclass(frozen=True)
class RewardBreakdown:
    r: float
    pair_products: tuple[float, ...]   # I*S per slot, 0.0 for empty targets
    n_axes: int
    overlap_ok: int                    # O in {0, 1}
    p_overlap: float | None
    gate_passed: bool
    axis_conflict: bool                # duplicate axis or type-incompatible axis

    def to_json(self) -> dict:
        return {
            "r": self.r,
            "pair_products": list(self.pair_products),
            "n_axes": self.n_axes,
            "overlap_ok": self.overlap_ok,
            "p_overlap": self.p_overlap,
            "gate_passed": self.gate_passed,
            "axis_conflict": self.axis_conflict,
        }


@dataclass(frozen=True)
class MappingSolution:
    pairs: tuple[MappingTarget, ...]   # one per slot, in slot order
    reward: RewardBreakdown
    choices: tuple[int, ...] = ()      # option indices, for reproducibility

    def to_json(self, space: MappingSpace | None = None) -> dict:
        payload = {
            "pairs": [t.to_json() for t in self.pairs],
            "reward": self.reward.to_json(),
        }
        if space is not None:
            payload["slots"] = [
                {"id": s.id, "name": s.name, "kind": s.kind,
                 "data_type": s.data_type.value if s.data_type else None,
                 "importance": s.importance}
                for s in space.slots
            ]
        return payload


# --------------------------------------------------------------------------
# space construction


def build_mapping_space(ds: Dataset, element_list: ElementList,
                        ranking: Iterable[str] | None = None,
                        scores: dict[str, float] | None = None,
                        pins: dict[str, MappingTarget] | None = None,
                        ) -> MappingSpace:
    """Depths are groups by ranking then ungrouped dimensions by ranking.

    Every depth offers the essential elements plus the whole image and an
    empty target; individual dimensions additionally offer both axes.
    A pinned slot offers only its pinned target.  When no importance
    ranking is supplied, one is computed with the default text backend.
    """
    if ranking is None or scores is None:
        from . import semantics

        table = semantics.importance_score(ds)
        ranking, scores = table.ranking, table.scores
    pins = pins or {}
    grouped = ds.grouped_dimension_ids()
    slots: list[Slot] = []
    for sid in ranking:
        if sid.startswith("g"):
            g = ds.group(sid)
            slots.append(Slot(id=g.id, name=g.name, kind="group", data_type=None,
                              importance=scores[g.id],
                              member_ids=g.member_dimension_ids))
    for sid in ranking:
        if not sid.startswith("g") and sid not in grouped:
            d = ds.dimension(sid)
            slots.append(Slot(id=d.id, name=d.name, kind="dimension",
                              data_type=d.data_type, importance=scores[d.id]))

    element_targets = [MappingTarget.element(0)] + [
        MappingTarget.element(e.index) for e in element_list.essential
    ]
    options: list[tuple[MappingTarget, ...]] = []
    for slot in slots:
        if slot.id in pins:
            options.append((pins[slot.id],))
            continue
        opts = list(element_targets)
        if slot.kind == "dimension":
            opts.extend([MappingTarget.axis(1), MappingTarget.axis(2)])
        opts.append(MappingTarget.none())
        options.append(tuple(opts))
    return MappingSpace(slots=tuple(slots), options=tuple(options))


# --------------------------------------------------------------------------
# reward


#: data types a dimension may carry on each axis; axis 2 is the vertical
#: coordinate of a Cartesian layout and only takes numbers
AXIS1_TYPES = (DataType.NUMERICAL, DataType.TEMPORAL,
               DataType.GEOSPATIAL, DataType.CATEGORICAL)
AXIS2_TYPES = (DataType.NUMERICAL,)
#: with both axes in play the horizontal one must carry a linear scale
AXIS1_WITH_AXIS2_TYPES = (DataType.NUMERICAL, DataType.TEMPORAL)

OverlapProbe = Callable[[tuple[tuple[int, int], ...]], tuple[float, float]]


class RewardEvaluator:
    """Scores complete option-index vectors against one mapping space.

    ``is_products[d][o]`` holds I(slot d) * S(slot d, option o); the probe
    maps an axis assignment ((k, slot_index), ...) to (O, P_overlap).
    Without a probe every layout counts as non-overlapping.
    """

    def __init__(self, space: MappingSpace,
                 is_products: list[list[float]],
                 config: SearchConfig | None = None,
                 probe: OverlapProbe | None = None):
        self.space = space
        self.config = config or SearchConfig()
        self.probe = probe
        self.n_slots = len(space.slots)
        self.valid_axis_counts = frozenset(self.config.valid_axis_counts)
        self.products: list[tuple[float, ...]] = []
        self.kinds: list[tuple[int, ...]] = []      # 0 element, 1|2 axis k, 3 none
        self.compat: list[tuple[bool, ...]] = []
        for d, opts in enumerate(space.options):
            slot = space.slots[d]
            prods, kinds, compat = [], [], []
            for o, target in enumerate(opts):
                if target.kind is TargetKind.NONE:
                    prods.append(0.0)
                    kinds.append(3)
                    compat.append(True)
                elif target.kind is TargetKind.AXIS:
                    prods.append(is_products[d][o])
                    kinds.append(target.index)
                    allowed = AXIS1_TYPES if target.index == 1 else AXIS2_TYPES
                    compat.append(slot.data_type in allowed)
                else:
                    prods.append(is_products[d][o])
                    kinds.append(0)
                    compat.append(True)
            self.products.append(tuple(prods))
            self.kinds.append(tuple(kinds))
            self.compat.append(tuple(compat))
        self._axis1_both_ok: list[tuple[bool, ...]] = [
            tuple(space.slots[d].data_type in AXIS1_WITH_AXIS2_TYPES
                  for _ in space.options[d])
            for d in range(self.n_slots)
        ]

    def value(self, choices: tuple[int, ...]) -> float:
        return self._evaluate(choices)[0]

    def _evaluate(self, choices) -> tuple[float, int, float, float | None, bool, bool]:
        total = 0.0
        n_axes = 0
        axis_slots = [-1, -1]  # slot index occupying axis 1 / axis 2
        conflict = False
        for d in range(self.n_slots):
            o = choices[d]
            k = self.kinds[d][o]
            if k == 3:
                continue
            total += self.products[d][o]
            if k:
                if not self.compat[d][o] or axis_slots[k - 1] >= 0:
                    conflict = True
                    break
                axis_slots[k - 1] = d
                n_axes += 1
        if not conflict and axis_slots[1] >= 0 and axis_slots[0] >= 0:
            d1 = axis_slots[0]
            if not self._axis1_both_ok[d1][choices[d1]]:
                conflict = True
        if conflict:
            return (0.0, n_axes, 0.0, None, False, True)
        if n_axes not in self.valid_axis_counts:
            return (0.0, n_axes, 0.0, None, False, False)
        if self.probe is not None:
            sig = tuple((k + 1, s) for k, s in enumerate(axis_slots) if s >= 0)
            overlap_ok, p_overlap = self.probe(sig)
        else:
            overlap_ok, p_overlap = 1.0, 0.0
        r = overlap_ok * total / self.n_slots if self.n_slots else 0.0
        return (r, n_axes, overlap_ok, p_overlap, True, False)

    def breakdown(self, choices: tuple[int, ...]) -> RewardBreakdown:
        r, n_axes, overlap_ok, p_overlap, gate_passed, conflict = self._evaluate(choices)
        prods = tuple(self.products[d][choices[d]] for d in range(self.n_slots))
        return RewardBreakdown(
            r=r, pair_products=prods, n_axes=n_axes, overlap_ok=int(overlap_ok),
            p_overlap=p_overlap, gate_passed=gate_passed, axis_conflict=conflict)

    def solution(self, choices: tuple[int, ...]) -> MappingSolution:
        pairs = tuple(self.space.options[d][choices[d]] for d in range(self.n_slots))
        return MappingSolution(pairs=pairs, reward=self.breakdown(choices),
                               choices=tuple(choices))


def reward(solution: "MappingSolution | tuple[int, ...]",
           evaluator: RewardEvaluator) -> RewardBreakdown:
    """Reward of a complete solution: (1/n) * O * sum of I*S over non-empty
    pairs, gated to 0 on bad axis counts, duplicate axes, or heavy overlap."""
    choices = solution.choices if isinstance(solution, MappingSolution) else solution
    return evaluator.breakdown(tuple(choices))


def overlap_score(glyph_bboxes: list[tuple[float, float, float, float]],
                  threshold: float = 0.30) -> tuple[int, float]:
    """Binary overlap gate over glyph bounding boxes.

    Each glyph's overlap fraction is the area of the union of its
    intersections with every other box, divided by its own area;
    P_overlap is the mean fraction and O is 1 iff P_overlap <= threshold.
    """
    from . import geometry

    if not glyph_bboxes:
        raise ValueError("need at least one glyph bbox")
    fractions = []
    for i, box in enumerate(glyph_bboxes):
        own = geometry.rect_area(box)
        if own <= 0:
            fractions.append(0.0)
            continue
        cuts = []
        for j, other in enumerate(glyph_bboxes):
            if i == j:
                continue
            inter = geometry.rect_intersection(box, other)
            if inter is not None:
                cuts.append(inter)
        fractions.append(geometry.union_area(cuts) / own if cuts else 0.0)
    p_overlap = sum(fractions) / len(fractions)
    return (1 if p_overlap <= threshold else 0, p_overlap)


# --------------------------------------------------------------------------
# tree


class SearchNode:
    __slots__ = ("option_index", "depth", "r", "n", "children", "unexpanded",
                 "exhausted")

    def __init__(self, option_index: int, depth: int, n_options_below: int):
        self.option_index = option_index
        self.depth = depth          # -1 for the root
        self.r = 0.0                # best reward seen
        self.n = 1                  # visit count (creation counts once)
        self.children: list[SearchNode | None] = [None] * n_options_below
        self.unexpanded: list[int] = list(range(n_options_below))
        self.exhausted = n_options_below == 0


class SearchTree:
    def __init__(self, space: MappingSpace):
        self.space = space
        self.depths = len(space.slots)
        root_options = len(space.options[0]) if self.depths else 0
        self.root = SearchNode(-1, -1, root_options)
        self.solutions: dict[tuple[int, ...], float] = {}
        self.iterations = 0


def uct(node: SearchNode, parent_visits: int, c: float) -> float:
    """Upper confidence bound: r/n + c * sqrt(ln(N) / n); infinity when
    the node is unvisited so it gets explored first."""
    if node.n == 0:
        return math.inf
    return node.r / node.n + c * math.sqrt(math.log(parent_visits) / node.n)


def _select_child(node: SearchNode, c: float) -> SearchNode:
    best: SearchNode | None = None
    best_score = -math.inf
    log_n = math.log(node.n)
    for child in node.children:
        if child is None or child.exhausted:
            continue
        score = (math.inf if child.n == 0
                 else child.r / child.n + c * math.sqrt(log_n / child.n))
        if score > best_score:
            best, best_score = child, score
    assert best is not None, "selection reached a dead end"
    return best


def mcts_step(tree: SearchTree, rng: random.Random, evaluator: RewardEvaluator,
              c: float = 4.0) -> tuple[float, tuple[int, ...]]:
    """One full iteration: select, expand, simulate, backpropagate.

    Exactly one new node joins the tree per step; the rollout below it is
    transient.  Backpropagation bumps every visited node's count and keeps
    the maximum reward seen.  Returns (rollout reward, rollout choices).
    """
    if tree.root.exhausted:
        raise TreeExhausted("every option has been expanded")
    space = tree.space
    node = tree.root
    path = [node]
    while not node.unexpanded:
        node = _select_child(node, c)
        path.append(node)

    pick = node.unexpanded.pop(rng.randrange(len(node.unexpanded)))
    child_depth = node.depth + 1
    below = (len(space.options[child_depth + 1])
             if child_depth + 1 < tree.depths else 0)
    child = SearchNode(pick, child_depth, below)
    node.children[pick] = child

    choices = [0] * tree.depths
    for p in path[1:]:
        choices[p.depth] = p.option_index
    choices[child_depth] = pick
    for d in range(child_depth + 1, tree.depths):
        choices[d] = rng.randrange(len(space.options[d]))
    key = tuple(choices)
    value = tree.solutions.get(key)
    if value is None:
        value = evaluator.value(key)
        tree.solutions[key] = value

    child.r = value
    if child_depth == tree.depths - 1:
        child.exhausted = True
    for ancestor in reversed(path):
        ancestor.n += 1
        if value > ancestor.r:
            ancestor.r = value
    for ancestor in reversed(path):
        if not ancestor.unexpanded and all(
                ch is not None and ch.exhausted for ch in ancestor.children):
            ancestor.exhausted = True
    tree.iterations += 1
    return value, key


# --------------------------------------------------------------------------
# search drivers


@dataclass(frozen=True)
class SearchBudget:
    iterations: int = 2000
    time_ms: int | None = 2000


@dataclass
class SearchOutcome:
    best: MappingSolution
    alternatives: list[MappingSolution] = field(default_factory=list)
    iterations: int = 0
    exhausted: bool = False


def run_search(space: MappingSpace, evaluator: RewardEvaluator,
               budget: SearchBudget, seed: int = 0, top_k: int = 5,
               trace_path: str | None = None) -> SearchOutcome:
    """Run MCTS under the budget; best solution plus distinct runner-ups.

    Deterministic for a fixed (seed, space, iteration budget).  Raises
    NoValidSolution when nothing scored above zero.
    """
    if not space.slots:
        raise NoValidSolution("mapping space has no dimensions")
    rng = random.Random(seed)
    tree = SearchTree(space)
    c = evaluator.config.exploration_c
    deadline = (time.monotonic() + budget.time_ms / 1000.0
                if budget.time_ms is not None else None)
    trace = open(trace_path, "w", encoding="utf-8") if trace_path else None
    exhausted = False
    try:
        for i in range(budget.iterations):
            if deadline is not None and time.monotonic() >= deadline:
                break
            try:
                value, rollout = mcts_step(tree, rng, evaluator, c)
            except TreeExhausted:
                exhausted = True
                break
            if trace is not None:
                trace.write(json.dumps(
                    {"iteration": i, "path": list(rollout), "reward": value}) + "\n")
    finally:
        if trace is not None:
            trace.close()

    exhausted = exhausted or tree.root.exhausted
    scored = sorted(tree.solutions.items(), key=lambda kv: (-kv[1], kv[0]))
    if not scored or scored[0][1] <= 0.0:
        raise NoValidSolution(
            "no mapping scored above zero for this candidate image")
    best = evaluator.solution(scored[0][0])
    alternatives = [evaluator.solution(ch) for ch, val in scored[1:1 + top_k]
                    if val > 0.0]
    return SearchOutcome(best=best, alternatives=alternatives,
                         iterations=tree.iterations, exhausted=exhausted)


def search_mapping(ds: Dataset, element_list: ElementList,
                   budget: SearchBudget | None = None,
                   config: SearchConfig | None = None,
                   pins: dict[str, MappingTarget] | None = None,
                   embedding_backend=None, relevance_backend=None,
                   seed: int = 0, top_k: int | None = None,
                   trace_path: str | None = None) -> SearchOutcome:
    """Find the best mapping of this dataset onto one decomposed image.

    Builds the mapping space and reward inputs (importance and relevance
    scores, plus the glyph-overlap probe) and runs MCTS under the budget.
    Deterministic for a fixed (seed, inputs, iteration budget).
    """
    from . import render, semantics
    from .config import EngineConfig, RenderConfig

    config = config or SearchConfig()
    budget = budget or SearchBudget(iterations=config.iterations,
                                    time_ms=config.time_budget_ms)
    backend = embedding_backend or semantics.LexicalBackend()
    table = semantics.importance_score(ds, backend)
    ds = semantics.apply_importance(ds, table)
    space = build_mapping_space(ds, element_list, table.ranking, table.scores,
                                pins)
    scorer = semantics.RelevanceScorer(backend=relevance_backend,
                                       embedding_backend=backend,
                                       config=EngineConfig().semantics)
    products: list[list[float]] = []
    for d, slot in enumerate(space.slots):
        row = []
        for target in space.options[d]:
            if target.kind is TargetKind.NONE:
                row.append(0.0)
                continue
            key = (("element", target.index)
                   if target.kind is TargetKind.ELEMENT
                   else ("axis", target.index))
            score = scorer.score(element_list, key, slot.name, slot.data_type)
            row.append(slot.importance * score.value)
        products.append(row)
    probe = render.make_overlap_probe(space, ds, RenderConfig(),
                                      config.overlap_threshold)
    evaluator = RewardEvaluator(space, products, config, probe)
    return run_search(space, evaluator, budget, seed=seed,
                      top_k=top_k if top_k is not None else config.top_k,
                      trace_path=trace_path)


def enumerate_optimum(space: MappingSpace, evaluator: RewardEvaluator,
                      limit: int = 1_000_000) -> tuple[float, tuple[int, ...]]:
    """Exhaustively score every complete solution; the MCTS test oracle.

    Returns (max reward, lexicographically smallest argmax choices).
    """
    size = space.size()
    if size > limit:
        raise SpaceTooLarge(f"{size} complete solutions exceed the {limit} cap")
    counts = [len(opts) for opts in space.options]
    best_value = -math.inf
    best_choices: tuple[int, ...] | None = None
    choices = [0] * len(counts)
    while True:
        key = tuple(choices)
        value = evaluator.value(key)
        if value > best_value:
            best_value, best_choices = value, key
        for d in range(len(counts) - 1, -1, -1):
            choices[d] += 1
            if choices[d] < counts[d]:
                break
            choices[d] = 0
        else:
            break
    assert best_choices is not None
    return best_value, best_choices
