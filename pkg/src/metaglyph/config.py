"""Engine configuration as plain dataclasses.

Defaults follow the calibration baked into the generation pipeline: the
0.5% pruning floor, the 30% overlap ceiling, exploration constant 4, a
[2, 8] essential-element band, and "a few seconds" time budgets.  Every
value can be overridden from a JSON config file and, for the deployment
knobs, from environment variables (``METAGLYPH_CORPUS_DIR``,
``METAGLYPH_IMG_API_KEY``, ``METAGLYPH_SEED``).
"""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, field
from pathlib import Path


@dataclass(frozen=True)
class TypingConfig:
    # fraction of non-empty cells that must parse for a type to win
    parse_threshold: float = 0.95


@dataclass(frozen=True)
class GroupingConfig:
    similarity_threshold: float = 0.8


@dataclass(frozen=True)
class DecomposeConfig:
    # elements smaller than this fraction of the whole-image bbox area are
    # pruning candidates (they must also overlap a larger element)
    min_area_fraction: float = 0.005
    # radius for the radial-origin test and the collinearity test, as a
    # fraction of the whole-image bbox diagonal
    origin_radius_fraction: float = 0.05
    # curve flattening tolerance in user units
    flatten_tolerance: float = 0.1
    min_essential: int = 2
    max_essential: int = 8
    # circular if outline radial distances have CV at or below this
    circularity_cv: float = 0.1
    ellipse_ratio_band: tuple[float, float] = (0.9, 1.1)
    # reject candidates whose largest element fills more than this fraction
    # of the canvas (multi-layer images render badly when scaled)
    dominant_cover_fraction: float = 0.9


@dataclass(frozen=True)
class SearchConfig:
    exploration_c: float = 4.0
    # axis-count values that keep a solution alive; {0, 1} is the strict
    # single-axis gate, the default also admits Cartesian two-axis layouts
    valid_axis_counts: tuple[int, ...] = (0, 1, 2)
    iterations: int = 2000
    time_budget_ms: int | None = 2000
    overlap_threshold: float = 0.30
    top_k: int = 5

    def strict(self) -> "SearchConfig":
        return dataclasses.replace(self, valid_axis_counts=(0, 1))


#: preferred encoding channels per data type, most frequent first.  "size"
#: is resolved to area / length / height from the image structure.
DEFAULT_CHANNEL_TABLE: dict[str, tuple[str, ...]] = {
    "numerical": ("size", "angle", "color_lightness"),
    "temporal": ("size", "angle", "color_lightness"),
    "categorical": ("color_hue", "rotation", "position_offset"),
    "geospatial": ("color_hue", "rotation", "position_offset"),
}

CATEGORICAL_PALETTE: tuple[str, ...] = (
    "#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f",
    "#edc948", "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac",
)

SEQUENTIAL_RAMP: tuple[str, ...] = (
    "#f7fbff", "#deebf7", "#c6dbef", "#9ecae1", "#6baed6",
    "#4292c6", "#2171b5", "#08519c", "#08306b",
)


@dataclass(frozen=True)
class RenderConfig:
    canvas_width: float = 1000.0
    canvas_height: float = 1000.0
    # padding on each side as a fraction of the canvas dimension
    padding_fraction: float = 0.05
    # size channels scale the element's metric within this band so the
    # silhouette stays recognizable at the domain minimum
    size_floor: float = 0.25
    glyph_min_size: float = 24.0
    glyph_max_size: float = 160.0
    grid_fill_factor: float = 0.8
    angle_range_deg: tuple[float, float] = (0.0, 270.0)
    donut_inner_ratio: float = 0.5
    chart_priority: tuple[str, ...] = ("pie", "donut", "heatmap")
    channel_table: dict[str, tuple[str, ...]] = field(
        default_factory=lambda: dict(DEFAULT_CHANNEL_TABLE)
    )
    categorical_palette: tuple[str, ...] = CATEGORICAL_PALETTE
    sequential_ramp: tuple[str, ...] = SEQUENTIAL_RAMP


@dataclass(frozen=True)
class SemanticsConfig:
    raster_size: int = 256
    lexical_dim: int = 256
    # relevance for an unlabeled element when no heatmap backend is up
    fallback_prior: float = 0.5


@dataclass(frozen=True)
class ServiceConfig:
    candidates_per_generate: int = 5
    per_candidate_budget_ms: int = 2000
    total_budget_ms: int = 10_000
    session_ttl_s: int = 24 * 3600
    cors_origins: tuple[str, ...] = ("*",)


@dataclass(frozen=True)
class EngineConfig:
    typing: TypingConfig = field(default_factory=TypingConfig)
    grouping: GroupingConfig = field(default_factory=GroupingConfig)
    decompose: DecomposeConfig = field(default_factory=DecomposeConfig)
    search: SearchConfig = field(default_factory=SearchConfig)
    render: RenderConfig = field(default_factory=RenderConfig)
    semantics: SemanticsConfig = field(default_factory=SemanticsConfig)
    service: ServiceConfig = field(default_factory=ServiceConfig)
    corpus_dir: str | None = None
    image_api_url: str | None = None
    image_api_key_env: str = "METAGLYPH_IMG_API_KEY"
    cache_dir: str | None = None
    seed: int | None = None


def _replace_section(cfg: EngineConfig, name: str, values: dict) -> EngineConfig:
    section = getattr(cfg, name)
    known = {f.name for f in dataclasses.fields(section)}
    unknown = set(values) - known
    if unknown:
        raise ValueError(f"unknown {name} config keys: {sorted(unknown)}")
    coerced = {
        k: tuple(v) if isinstance(getattr(section, k), tuple) and isinstance(v, list) else v
        for k, v in values.items()
    }
    return dataclasses.replace(cfg, **{name: dataclasses.replace(section, **coerced)})


def load_config(path: str | Path | None = None, env: dict | None = None) -> EngineConfig:
    """Build an EngineConfig from an optional JSON file plus env overrides.

    The JSON file mirrors the dataclass layout: top-level scalar fields plus
    one object per section (``{"search": {"iterations": 500}, ...}``).
    Environment variables win over the file.
    """
    cfg = EngineConfig()
    if path is not None:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        sections = {f.name for f in dataclasses.fields(EngineConfig)
                    if dataclasses.is_dataclass(getattr(cfg, f.name))}
        for key, value in data.items():
            if key in sections:
                cfg = _replace_section(cfg, key, value)
            elif key in {f.name for f in dataclasses.fields(EngineConfig)}:
                cfg = dataclasses.replace(cfg, **{key: value})
            else:
                raise ValueError(f"unknown config key: {key}")
    env = os.environ if env is None else env
    if env.get("METAGLYPH_CORPUS_DIR"):
        cfg = dataclasses.replace(cfg, corpus_dir=env["METAGLYPH_CORPUS_DIR"])
    if env.get("METAGLYPH_SEED"):
        cfg = dataclasses.replace(cfg, seed=int(env["METAGLYPH_SEED"]))
    return cfg
