"""Text relevance scoring behind pluggable backends.

Importance scores rank data dimensions against the dataset topic by cosine
similarity of embeddings; semantic scores relate dimensions to visual
elements, through a heatmap backend when one is configured or through a
deterministic lexical fallback otherwise.  Everything is cached keyed by
backend and input so repeated searches stay cheap.
"""

from __future__ import annotations

import hashlib
import re
import threading
import unicodedata
import warnings
from dataclasses import dataclass, replace
from typing import NamedTuple, Protocol

import numpy as np

from .config import SemanticsConfig
from .dataset import Dataset, DataType
from .errors import BackendUnavailable, UnknownAllTokensWarning
from .metaphor import Element, ElementList
from . import geometry

_CAMEL = re.compile(r"(?<=[a-z0-9])(?=[A-Z])|(?<=[A-Z])(?=[A-Z][a-z])")


def tokenize(text: str) -> list[str]:
    """Normalize to lowercase ASCII tokens; camelCase and snake_case split."""
    text = _CAMEL.sub(" ", text)
    text = unicodedata.normalize("NFKD", text).encode("ascii", "ignore").decode()
    return [t for t in re.split(r"[^a-zA-Z0-9]+", text.casefold()) if t]


class TextEmbeddingBackend(Protocol):
    name: str
    dimensionality: int

    def embed(self, text: str) -> np.ndarray: ...


def _stable_bucket(data: str, buckets: int) -> int:
    digest = hashlib.md5(data.encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "big") % buckets


class LexicalBackend:
    """Deterministic bag-of-tokens embedding with character-trigram hashing.

    No model files, no network: tokens contribute hashed trigram counts of
    their padded form, so sharing a word (or most of one) yields high
    cosine similarity.  The default backend for fully offline runs.
    """

    def __init__(self, dimensionality: int = 256):
        self.name = f"lexical-{dimensionality}"
        self.dimensionality = dimensionality
        self._cache: dict[str, np.ndarray] = {}

    def embed(self, text: str) -> np.ndarray:
        cached = self._cache.get(text)
        if cached is not None:
            return cached
        vec = np.zeros(self.dimensionality)
        for token in tokenize(text):
            padded = f"^{token}$"
            grams = [padded[i:i + 3] for i in range(max(1, len(padded) - 2))]
            for gram in grams:
                vec[_stable_bucket(gram, self.dimensionality)] += 1.0
        norm = np.linalg.norm(vec)
        if norm > 0:
            vec = vec / norm
        self._cache[text] = vec
        return vec


class TableBackend:
    """Embeddings from a word-vector text file: lines of "token v1 ... vD".

    Phrases embed as the mean of in-vocabulary token vectors.  A phrase
    whose tokens are all out of vocabulary embeds as a zero vector with an
    UnknownAllTokensWarning.
    """

    def __init__(self, path: str):
        self.vectors: dict[str, np.ndarray] = {}
        dim = None
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                parts = line.rstrip("\n").split(" ")
                if len(parts) < 2:
                    continue
                values = np.array([float(v) for v in parts[1:]])
                if dim is None:
                    dim = len(values)
                if len(values) != dim:
                    continue
                self.vectors[parts[0]] = values
        if dim is None:
            raise BackendUnavailable(f"no vectors found in {path}")
        self.dimensionality = dim
        self.name = f"table-{hashlib.md5(path.encode()).hexdigest()[:8]}"
        self._cache: dict[str, np.ndarray] = {}

    def embed(self, text: str) -> np.ndarray:
        cached = self._cache.get(text)
        if cached is not None:
            return cached
        hits = [self.vectors[t] for t in tokenize(text) if t in self.vectors]
        if not hits:
            warnings.warn(
                f"all tokens of {text!r} are out of vocabulary",
                UnknownAllTokensWarning, stacklevel=2)
            vec = np.zeros(self.dimensionality)
        else:
            vec = np.mean(hits, axis=0)
        self._cache[text] = vec
        return vec


class RemoteEmbeddingBackend:
    """Client for an embedding HTTP service: POST {"texts": [...]}."""

    def __init__(self, url: str, dimensionality: int = 0, timeout: float = 10.0,
                 api_key: str | None = None, post=None):
        self.url = url
        self.name = f"remote-{hashlib.md5(url.encode()).hexdigest()[:8]}"
        self.dimensionality = dimensionality
        self.timeout = timeout
        self.api_key = api_key
        self._post = post
        self._cache: dict[str, np.ndarray] = {}

    def embed(self, text: str) -> np.ndarray:
        cached = self._cache.get(text)
        if cached is not None:
            return cached
        post = self._post
        if post is None:
            import requests

            post = requests.post
        headers = {"Authorization": f"Bearer {self.api_key}"} if self.api_key else {}
        try:
            resp = post(self.url, json={"texts": [text]}, headers=headers,
                        timeout=self.timeout)
            resp.raise_for_status()
            vec = np.array(resp.json()["vectors"][0], dtype=float)
        except Exception as exc:  # noqa: BLE001
            raise BackendUnavailable(f"embedding service failed: {exc}") from exc
        if not self.dimensionality:
            self.dimensionality = len(vec)
        self._cache[text] = vec
        return vec


def embed_text(backend: TextEmbeddingBackend, text: str) -> np.ndarray:
    """Embed a phrase; identical input yields an identical vector."""
    if not tokenize(text):
        raise ValueError(f"text {text!r} is empty after normalization")
    vec = backend.embed(text)
    if len(vec) != backend.dimensionality:
        raise BackendUnavailable(
            f"backend {backend.name} emitted {len(vec)} dims, "
            f"declared {backend.dimensionality}")
    return vec


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    denom = float(np.linalg.norm(a) * np.linalg.norm(b))
    if denom == 0:
        return 0.0
    return float(np.dot(a, b) / denom)


def name_similarity(a: str, b: str, backend: TextEmbeddingBackend | None = None) -> float:
    """Similarity of two column names in [0, 1].

    Two names count as similar when they share a strongly similar token
    (math score / music score both carry "score"), so the score is the best
    clamped cosine over cross-product token pairs.
    """
    backend = backend or LexicalBackend()
    tokens_a, tokens_b = tokenize(a), tokenize(b)
    if not tokens_a or not tokens_b:
        return 0.0
    best = 0.0
    for ta in tokens_a:
        for tb in tokens_b:
            if ta == tb:
                return 1.0
            best = max(best, cosine(backend.embed(ta), backend.embed(tb)))
    return max(0.0, min(1.0, best))


# --------------------------------------------------------------------------
# importance


@dataclass(frozen=True)
class ImportanceTable:
    scores: dict[str, float]       # dimension and group ids -> I in [0, 1]
    raw: dict[str, float]          # raw cosine similarities
    ranking: tuple[str, ...]       # ids sorted by score desc, ties by column


def _minmax(values: dict[str, float]) -> dict[str, float]:
    if len(values) == 1:
        return {k: 1.0 for k in values}
    lo, hi = min(values.values()), max(values.values())
    if hi - lo < 1e-12:
        return {k: 1.0 for k in values}
    return {k: (v - lo) / (hi - lo) for k, v in values.items()}


def importance_score(ds: Dataset, backend: TextEmbeddingBackend | None = None
                     ) -> ImportanceTable:
    """Score every dimension and group against the topic.

    Raw score is the cosine similarity between name and topic embeddings;
    a group's raw score is the mean over its members.  Raw scores are then
    min-max normalized over all dimensions plus groups, so the most topical
    entry gets 1 and the least gets 0 (a single entry gets 1).
    """
    backend = backend or LexicalBackend()
    topic_vec = embed_text(backend, ds.topic)
    raw: dict[str, float] = {}
    for dim in ds.dimensions:
        raw[dim.id] = cosine(embed_text(backend, dim.name), topic_vec)
    for group in ds.groups:
        raw[group.id] = sum(raw[m] for m in group.member_dimension_ids) / len(
            group.member_dimension_ids)
    scores = _minmax(raw)

    column = {d.id: i for i, d in enumerate(ds.dimensions)}
    for g in ds.groups:
        column[g.id] = min(column[m] for m in g.member_dimension_ids)
    ranking = tuple(sorted(
        scores,
        key=lambda k: (-scores[k], column[k], 0 if k.startswith("g") else 1),
    ))
    return ImportanceTable(scores=scores, raw=raw, ranking=ranking)


def apply_importance(ds: Dataset, table: ImportanceTable) -> Dataset:
    dims = tuple(replace(d, importance=table.scores[d.id]) for d in ds.dimensions)
    groups = tuple(replace(g, importance=table.scores[g.id]) for g in ds.groups)
    return replace(ds, dimensions=dims, groups=groups)


# --------------------------------------------------------------------------
# relevance


class HeatmapBackend(Protocol):
    """Vision-model slot: a relevance heatmap over the rasterized image."""

    name: str

    def heatmap(self, element_list: ElementList, text: str) -> np.ndarray: ...


class RemoteRelevanceBackend:
    """Client for a heatmap HTTP service.

    POSTs the rasterized image (PNG via the injected ``render_png`` hook)
    plus the dimension text; expects a row-major float grid in [0, 1] of
    any size, which is resampled to the working raster.
    """

    def __init__(self, url: str, render_png, timeout: float = 20.0,
                 api_key: str | None = None, post=None, raster_size: int = 256):
        self.url = url
        self.name = f"remote-relevance-{hashlib.md5(url.encode()).hexdigest()[:8]}"
        self.render_png = render_png
        self.timeout = timeout
        self.api_key = api_key
        self.raster_size = raster_size
        self._post = post

    def heatmap(self, element_list: ElementList, text: str) -> np.ndarray:
        post = self._post
        if post is None:
            import requests

            post = requests.post
        headers = {"Authorization": f"Bearer {self.api_key}"} if self.api_key else {}
        try:
            png = self.render_png(element_list)
            resp = post(self.url, files={"image": ("image.png", png, "image/png")},
                        data={"text": text}, headers=headers, timeout=self.timeout)
            resp.raise_for_status()
            grid = np.array(resp.json()["grid"], dtype=float)
        except Exception as exc:  # noqa: BLE001
            raise BackendUnavailable(f"relevance service failed: {exc}") from exc
        grid = np.clip(grid, 0.0, 1.0)
        return resample_bilinear(grid, self.raster_size)


def resample_bilinear(grid: np.ndarray, size: int) -> np.ndarray:
    """Resample a 2D grid to size x size with bilinear interpolation."""
    if grid.shape == (size, size):
        return grid
    src_y, src_x = grid.shape
    ys = (np.arange(size) + 0.5) / size * src_y - 0.5
    xs = (np.arange(size) + 0.5) / size * src_x - 0.5
    y0 = np.clip(np.floor(ys).astype(int), 0, src_y - 1)
    x0 = np.clip(np.floor(xs).astype(int), 0, src_x - 1)
    y1 = np.clip(y0 + 1, 0, src_y - 1)
    x1 = np.clip(x0 + 1, 0, src_x - 1)
    wy = np.clip(ys - y0, 0.0, 1.0)[:, None]
    wx = np.clip(xs - x0, 0.0, 1.0)[None, :]
    top = grid[np.ix_(y0, x0)] * (1 - wx) + grid[np.ix_(y0, x1)] * wx
    bot = grid[np.ix_(y1, x0)] * (1 - wx) + grid[np.ix_(y1, x1)] * wx
    return top * (1 - wy) + bot * wy


class RelevanceResult(NamedTuple):
    value: float
    provenance: str


ElementTarget = tuple[str, int]  # ("element", index) or ("axis", 1|2)


class RelevanceScorer:
    """Computes semantic scores S(d, target) with caching and fallback.

    With a heatmap backend: an element's score is the mean heatmap value
    over the pixels it covers; an axis scores 1 for temporal/geospatial
    dimensions (such placements are inherently resonant) and the mean over
    the entire image otherwise.  Without one (or when the backend fails),
    the deterministic fallback scores labeled elements by lexical name
    similarity and everything else with a uniform prior.
    """

    def __init__(self, backend: HeatmapBackend | None = None,
                 embedding_backend: TextEmbeddingBackend | None = None,
                 config: SemanticsConfig | None = None):
        self.backend = backend
        self.embedding = embedding_backend or LexicalBackend()
        self.config = config or SemanticsConfig()
        self._heatmaps: dict[tuple, np.ndarray] = {}
        self._masks: dict[tuple, np.ndarray] = {}
        self._scores: dict[tuple, RelevanceResult] = {}
        # backends may declare `reentrant = False`; their calls then funnel
        # through one lock instead of running concurrently
        self._backend_lock = (
            threading.Lock()
            if backend is not None and not getattr(backend, "reentrant", True)
            else None)

    # -- masks -------------------------------------------------------------

    def element_mask(self, element_list: ElementList, index: int,
                     size: int | None = None) -> np.ndarray:
        size = size or self.config.raster_size
        key = (element_list.source_id, index, size)
        cached = self._masks.get(key)
        if cached is not None:
            return cached
        frame = element_list.whole_image.bbox
        if index == 0:
            mask = np.zeros((size, size), dtype=bool)
            for e in element_list.elements:
                mask |= self._raw_mask(e, frame, size)
        else:
            mask = self._raw_mask(element_list.element(index), frame, size)
        if not mask.any():
            # degenerate sliver: fall back to the pixel under its center
            e = element_list.element(index) if index else element_list.whole_image
            cx = int((e.center[0] - frame[0]) / max(frame[2] - frame[0], 1e-9) * size)
            cy = int((e.center[1] - frame[1]) / max(frame[3] - frame[1], 1e-9) * size)
            mask[min(max(cy, 0), size - 1), min(max(cx, 0), size - 1)] = True
        self._masks[key] = mask
        return mask

    @staticmethod
    def _raw_mask(e: Element, frame, size: int) -> np.ndarray:
        return geometry.rasterize_mask(
            list(e.flat), frame, size,
            filled=e.style.filled, stroke_width=e.style.stroke_width)

    # -- heatmaps ----------------------------------------------------------

    def _heatmap(self, element_list: ElementList, text: str) -> np.ndarray:
        key = (self.backend.name, element_list.source_id, text)
        cached = self._heatmaps.get(key)
        if cached is not None:
            return cached
        if self._backend_lock is not None:
            with self._backend_lock:
                grid = self.backend.heatmap(element_list, text)
        else:
            grid = self.backend.heatmap(element_list, text)
        grid = np.clip(np.asarray(grid, dtype=float), 0.0, 1.0)
        grid = resample_bilinear(grid, self.config.raster_size)
        self._heatmaps[key] = grid
        return grid

    # -- scoring -----------------------------------------------------------

    def score(self, element_list: ElementList, target: ElementTarget,
              dimension_name: str, data_type: DataType | None = None,
              ) -> RelevanceResult:
        kind, idx = target
        key = (getattr(self.backend, "name", "fallback"),
               element_list.source_id, kind, idx, dimension_name, data_type)
        cached = self._scores.get(key)
        if cached is not None:
            return cached
        if kind == "axis" and data_type in (DataType.TEMPORAL, DataType.GEOSPATIAL):
            result = RelevanceResult(1.0, "axis-resonant")
        elif self.backend is not None:
            try:
                grid = self._heatmap(element_list, dimension_name)
                if kind == "axis":
                    result = RelevanceResult(float(grid.mean()), self.backend.name)
                else:
                    mask = self.element_mask(element_list, idx)
                    result = RelevanceResult(float(grid[mask].mean()), self.backend.name)
            except BackendUnavailable:
                result = self._fallback(element_list, target, dimension_name)
        else:
            result = self._fallback(element_list, target, dimension_name)
        result = RelevanceResult(max(0.0, min(1.0, result.value)), result.provenance)
        self._scores[key] = result
        return result

    def _fallback(self, element_list: ElementList, target: ElementTarget,
                  dimension_name: str) -> RelevanceResult:
        kind, idx = target
        if kind == "element":
            label = element_list.element(idx).label
            if label and tokenize(label) and tokenize(dimension_name):
                sim = name_similarity(dimension_name, label, self.embedding)
                return RelevanceResult(sim, "lexical-fallback")
        return RelevanceResult(self.config.fallback_prior, "uniform-prior")


def relevance_score(element_list: ElementList, target: ElementTarget,
                    dimension_name: str, data_type: DataType | None = None,
                    scorer: RelevanceScorer | None = None) -> RelevanceResult:
    """Convenience wrapper over RelevanceScorer for one-off scores."""
    scorer = scorer or RelevanceScorer()
    return scorer.score(element_list, target, dimension_name, data_type)
