"""End-to-end generation: candidates -> element lists -> search -> scenes.

The CLI and the HTTP service both call :func:`generate` so that identical
inputs (dataset, corpus, seed, budgets) produce identical rankings and
byte-identical SVG output on either entry point.
"""

from __future__ import annotations

import hashlib
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from . import metaphor, render, search, semantics
from .config import EngineConfig
from .dataset import Dataset, DataType
from .errors import (
    CandidateRejected,
    ChannelExhausted,
    NoValidSolution,
    ParseError,
    UnsatisfiablePin,
    UnsupportedFeature,
)
from .metaphor import ElementList, MetaphorCandidate
from .search import (
    MappingSolution,
    MappingSpace,
    MappingTarget,
    RewardEvaluator,
    SearchBudget,
    TargetKind,
)


@dataclass
class CandidateReport:
    candidate_id: str
    source: str
    status: str                       # ok | rejected
    reason: str | None = None
    reward: float | None = None
    essential_elements: int | None = None
    removed_elements: int | None = None
    iterations: int | None = None
    search_exhausted: bool | None = None
    elapsed_ms: float = 0.0

    def to_json(self) -> dict:
        return {
            "candidate_id": self.candidate_id,
            "source": self.source,
            "status": self.status,
            "reason": self.reason,
            "reward": self.reward,
            "essential_elements": self.essential_elements,
            "removed_elements": self.removed_elements,
            "iterations": self.iterations,
            "search_exhausted": self.search_exhausted,
            "elapsed_ms": round(self.elapsed_ms, 3),
        }


@dataclass
class RankedResult:
    result_id: str
    candidate_id: str
    candidate_source: str
    reward: float
    reward_json: dict
    solution_json: dict
    svg: bytes
    legend: bytes
    element_svgs: list[bytes]          # aligned with elements_json
    elements_json: list[dict]          # {"index", "label", "augmentable"}
    metaphor_svg: bytes
    alternatives_json: list[dict] = field(default_factory=list)


@dataclass
class GenerationReport:
    topic: str
    seed: int
    results: list[RankedResult]
    candidates: list[CandidateReport]
    elapsed_ms: float

    def to_json(self) -> dict:
        return {
            "topic": self.topic,
            "seed": self.seed,
            "elapsed_ms": round(self.elapsed_ms, 3),
            "results": [
                {"result_id": r.result_id, "candidate_id": r.candidate_id,
                 "reward": r.reward, "reward_breakdown": r.reward_json}
                for r in self.results
            ],
            "candidates": [c.to_json() for c in self.candidates],
        }


def candidate_seed(base_seed: int, candidate_id: str) -> int:
    """Stable per-candidate seed, independent of candidate ordering."""
    digest = hashlib.sha256(f"{base_seed}:{candidate_id}".encode()).digest()
    return int.from_bytes(digest[:4], "big")


def validate_pins(ds: Dataset, pins: dict[str, MappingTarget]) -> None:
    """Reject structurally unsatisfiable pins at submission time."""
    slot_ids = {d.id for d in ds.dimensions} | {g.id for g in ds.groups}
    grouped = ds.grouped_dimension_ids()
    axis_used: dict[int, str] = {}
    for sid, target in pins.items():
        if sid not in slot_ids:
            raise UnsatisfiablePin(f"unknown dimension or group: {sid}")
        if sid in grouped:
            raise UnsatisfiablePin(
                f"{sid} is encoded through its group; pin the group instead")
        if target.kind is TargetKind.AXIS:
            if sid.startswith("g"):
                raise UnsatisfiablePin("data groups cannot map to axes")
            if target.index == 2 and ds.dimension(sid).data_type is not DataType.NUMERICAL:
                raise UnsatisfiablePin(
                    "the vertical axis takes numerical dimensions only")
            if target.index in axis_used:
                raise UnsatisfiablePin(
                    f"axis {target.index} pinned to both {axis_used[target.index]} "
                    f"and {sid}")
            axis_used[target.index] = sid


def score_products(space: MappingSpace, element_list: ElementList,
                   scorer: semantics.RelevanceScorer) -> list[list[float]]:
    """I(slot) * S(slot, option) for every option of every depth."""
    out: list[list[float]] = []
    for d, slot in enumerate(space.slots):
        row: list[float] = []
        for target in space.options[d]:
            if target.kind is TargetKind.NONE:
                row.append(0.0)
                continue
            key = (("element", target.index)
                   if target.kind is TargetKind.ELEMENT
                   else ("axis", target.index))
            s = scorer.score(element_list, key, slot.name, slot.data_type)
            row.append(slot.importance * s.value)
        out.append(row)
    return out


def prepare_candidate(ds: Dataset, candidate: MetaphorCandidate,
                      config: EngineConfig,
                      scorer: semantics.RelevanceScorer,
                      ranking, scores,
                      pins: dict[str, MappingTarget] | None = None,
                      ) -> tuple[ElementList, MappingSpace, RewardEvaluator]:
    """Decompose one candidate and wire up its reward evaluator."""
    element_list = metaphor.build_element_list(candidate, config.decompose)
    pins = dict(pins or {})
    if pins:
        valid_indices = {0} | {e.index for e in element_list.essential}
        for sid, target in pins.items():
            if target.kind is TargetKind.ELEMENT and target.index not in valid_indices:
                raise CandidateRejected(
                    f"pinned element {target.index} does not exist in this image")
    space = search.build_mapping_space(ds, element_list, ranking, scores, pins)
    products = score_products(space, element_list, scorer)
    probe = render.make_overlap_probe(space, ds, config.render,
                                      config.search.overlap_threshold)
    evaluator = RewardEvaluator(space, products, config.search, probe)
    return element_list, space, evaluator


def _build_result(ds: Dataset, candidate: MetaphorCandidate,
                  element_list: ElementList, space: MappingSpace,
                  outcome: search.SearchOutcome,
                  config: EngineConfig) -> RankedResult:
    solution = outcome.best
    scene = None
    used: MappingSolution | None = None
    for attempt in [solution, *outcome.alternatives]:
        try:
            scene = render.build_scene(attempt, space, ds, element_list,
                                       config.render)
            used = attempt
            break
        except ChannelExhausted:
            continue
    if scene is None or used is None:
        raise ChannelExhausted(
            "every found solution needs more channels than its elements offer")
    svg = render.render_mgv(scene, element_list, ds)
    legend = render.render_legend(scene, element_list, ds, config.render)
    inventory = [element_list.whole_image] + list(element_list.essential)
    element_svgs = [render.render_element_thumbnail(element_list, e.index)
                    for e in inventory]
    elements_json = [
        {"index": e.index, "label": e.label, "augmentable": e.augmentable}
        for e in inventory
    ]
    result_id = hashlib.sha256(svg).hexdigest()[:12]
    return RankedResult(
        result_id=result_id,
        candidate_id=candidate.id,
        candidate_source=candidate.source.value,
        reward=used.reward.r,
        reward_json=used.reward.to_json(),
        solution_json=used.to_json(space),
        svg=svg,
        legend=legend,
        element_svgs=element_svgs,
        elements_json=elements_json,
        metaphor_svg=candidate.svg_bytes,
        alternatives_json=[alt.to_json(space) for alt in outcome.alternatives],
    )


def generate(ds: Dataset, candidates: list[MetaphorCandidate],
             config: EngineConfig | None = None, seed: int = 0,
             pins: dict[str, MappingTarget] | None = None,
             embedding_backend=None, relevance_backend=None,
             jobs: int = 1,
             total_budget_ms: int | None = None) -> GenerationReport:
    """Search every candidate image and rank the resulting scenes.

    Deterministic for fixed (dataset, candidates, seed, iteration budgets):
    each candidate searches under a seed derived from its id, and results
    sort by reward with the candidate id breaking ties.
    """
    config = config or EngineConfig()
    started = time.monotonic()
    backend = embedding_backend or semantics.LexicalBackend()
    scorer = semantics.RelevanceScorer(backend=relevance_backend,
                                       embedding_backend=backend,
                                       config=config.semantics)
    table = semantics.importance_score(ds, backend)
    ds = semantics.apply_importance(ds, table)
    if pins:
        validate_pins(ds, pins)
    budget = SearchBudget(iterations=config.search.iterations,
                          time_ms=config.search.time_budget_ms)
    deadline = (started + total_budget_ms / 1000.0
                if total_budget_ms is not None else None)

    def run_one(candidate: MetaphorCandidate) -> tuple[RankedResult | None, CandidateReport]:
        t0 = time.monotonic()
        report = CandidateReport(candidate_id=candidate.id,
                                 source=candidate.source.value, status="rejected")
        try:
            element_list, space, evaluator = prepare_candidate(
                ds, candidate, config, scorer, table.ranking, table.scores, pins)
            report.essential_elements = len(element_list.essential)
            report.removed_elements = len(element_list.removed)
            outcome = search.run_search(
                space, evaluator, budget,
                seed=candidate_seed(seed, candidate.id),
                top_k=config.search.top_k)
            report.iterations = outcome.iterations
            report.search_exhausted = outcome.exhausted
            result = _build_result(ds, candidate, element_list, space,
                                   outcome, config)
            report.status = "ok"
            report.reward = result.reward
            return result, report
        except (CandidateRejected, ParseError, UnsupportedFeature,
                NoValidSolution, ChannelExhausted) as exc:
            report.reason = getattr(exc, "code", "rejected")
            return None, report
        finally:
            report.elapsed_ms = (time.monotonic() - t0) * 1000.0

    results: list[RankedResult] = []
    reports: list[CandidateReport] = []
    pending = list(candidates)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(run_one, pending))
    else:
        outcomes = []
        for candidate in pending:
            if deadline is not None and time.monotonic() >= deadline:
                outcomes.append((None, CandidateReport(
                    candidate_id=candidate.id, source=candidate.source.value,
                    status="rejected", reason="budget_exhausted")))
                continue
            outcomes.append(run_one(candidate))
    for result, report in outcomes:
        reports.append(report)
        if result is not None:
            results.append(result)
    results.sort(key=lambda r: (-r.reward, r.candidate_id))
    return GenerationReport(
        topic=ds.topic, seed=seed, results=results, candidates=reports,
        elapsed_ms=(time.monotonic() - started) * 1000.0)
