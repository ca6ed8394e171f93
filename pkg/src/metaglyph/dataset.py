"""Spreadsheet ingestion: column typing, dimension groups, dataset topic.

The spreadsheet name doubles as the dataset topic.  Columns are typed by a
95% parse-rate rule with a fixed precedence (temporal > geospatial >
numerical > categorical) so typing is deterministic on dirty data.
"""

from __future__ import annotations

import csv
import io
import math
import re
from dataclasses import dataclass, replace
from datetime import datetime
from enum import Enum

from . import regions
from .config import EngineConfig, GroupingConfig, TypingConfig
from .errors import AllEmpty, EmptyFile, RaggedRows, ZeroRows


class DataType(str, Enum):
    NUMERICAL = "numerical"
    CATEGORICAL = "categorical"
    TEMPORAL = "temporal"
    GEOSPATIAL = "geospatial"


@dataclass(frozen=True)
class DataDimension:
    id: str
    name: str
    data_type: DataType
    raw: tuple[str, ...]                 # original cells, round-trip source
    values: tuple = ()                   # parsed cells (floats, datetimes, str)
    missing: tuple[int, ...] = ()        # row indices imputed or unparsed
    importance: float | None = None


@dataclass(frozen=True)
class DataGroup:
    id: str
    name: str
    member_dimension_ids: tuple[str, ...]
    importance: float | None = None


@dataclass(frozen=True)
class Dataset:
    topic: str
    dimensions: tuple[DataDimension, ...]
    groups: tuple[DataGroup, ...] = ()
    rows: int = 0

    def dimension(self, dim_id: str) -> DataDimension:
        for d in self.dimensions:
            if d.id == dim_id:
                return d
        raise KeyError(dim_id)

    def group(self, group_id: str) -> DataGroup:
        for g in self.groups:
            if g.id == group_id:
                return g
        raise KeyError(group_id)

    def grouped_dimension_ids(self) -> set[str]:
        out: set[str] = set()
        for g in self.groups:
            out.update(g.member_dimension_ids)
        return out

    def validate(self) -> None:
        assert self.topic, "topic must be non-empty"
        assert self.rows >= 1
        seen: set[str] = set()
        for g in self.groups:
            assert len(g.member_dimension_ids) >= 2
            for mid in g.member_dimension_ids:
                assert mid not in seen, f"{mid} belongs to two groups"
                seen.add(mid)
                assert self.dimension(mid).data_type is DataType.NUMERICAL
        for d in self.dimensions:
            assert len(d.raw) == self.rows


# --------------------------------------------------------------------------
# cell parsers

_THOUSANDS = re.compile(r"^[-+]?\d{1,3}(,\d{3})+(\.\d+)?$")

_DATE_FORMATS = (
    "%Y-%m-%d", "%Y/%m/%d", "%m/%d/%Y", "%d.%m.%Y",
    "%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M",
    "%Y-%m", "%b %Y", "%B %Y", "%d %b %Y", "%b %d, %Y", "%B %d, %Y",
)


def parse_number(cell: str) -> float | None:
    text = cell.strip()
    if not text:
        return None
    if text.endswith("%"):
        text = text[:-1].strip()
    if _THOUSANDS.match(text):
        text = text.replace(",", "")
    try:
        value = float(text)
    except ValueError:
        return None
    return value if math.isfinite(value) else None


def parse_temporal(cell: str) -> datetime | None:
    text = cell.strip()
    if not text:
        return None
    for fmt in _DATE_FORMATS:
        try:
            return datetime.strptime(text, fmt)
        except ValueError:
            continue
    return None


# --------------------------------------------------------------------------
# operations


def infer_dimension_type(values: list[str] | tuple[str, ...],
                         config: TypingConfig | None = None) -> DataType:
    """Type a column from its raw cells.

    A pure function of the multiset of cells: parse rates are computed over
    non-empty cells against the 95% threshold, with precedence
    temporal > geospatial > numerical on ties.
    """
    config = config or TypingConfig()
    non_empty = [c for c in values if c.strip()]
    if not non_empty:
        raise AllEmpty("column has no non-empty cells")
    n = len(non_empty)
    rate_temporal = sum(parse_temporal(c) is not None for c in non_empty) / n
    rate_geo = sum(regions.is_region(c) for c in non_empty) / n
    rate_num = sum(parse_number(c) is not None for c in non_empty) / n
    threshold = config.parse_threshold
    if rate_temporal >= threshold:
        return DataType.TEMPORAL
    if rate_geo >= threshold:
        return DataType.GEOSPATIAL
    if rate_num >= threshold:
        return DataType.NUMERICAL
    return DataType.CATEGORICAL


def _detect_delimiter(first_line: str) -> str:
    counts = [(first_line.count(d), -i, d) for i, d in enumerate([",", "\t", ";"])]
    best = max(counts)
    return best[2] if best[0] > 0 else ","


def topic_from_name(name: str) -> str:
    stem = name.rsplit("/", 1)[-1].rsplit("\\", 1)[-1]
    if "." in stem[1:]:
        stem = stem.rsplit(".", 1)[0]
    topic = re.sub(r"[_\-.]+", " ", stem).strip()
    topic = re.sub(r"\s+", " ", topic)
    return topic or name.strip()


def _typed_values(raw: tuple[str, ...], data_type: DataType):
    """Parse cells per type; numerical/temporal gaps are mean-imputed and flagged."""
    missing: list[int] = []
    if data_type is DataType.NUMERICAL:
        parsed = [parse_number(c) for c in raw]
        good = [v for v in parsed if v is not None]
        mean = sum(good) / len(good) if good else 0.0
        values = []
        for i, v in enumerate(parsed):
            if v is None:
                missing.append(i)
                values.append(mean)
            else:
                values.append(v)
        return tuple(values), tuple(missing)
    if data_type is DataType.TEMPORAL:
        parsed = [parse_temporal(c) for c in raw]
        good = [v for v in parsed if v is not None]
        mean_ts = sum(v.timestamp() for v in good) / len(good) if good else 0.0
        fill = datetime.fromtimestamp(mean_ts)
        values = []
        for i, v in enumerate(parsed):
            if v is None:
                missing.append(i)
                values.append(fill)
            else:
                values.append(v)
        return tuple(values), tuple(missing)
    if data_type is DataType.GEOSPATIAL:
        return tuple(regions.normalize_region(c) for c in raw), ()
    return tuple(c.strip() for c in raw), ()


def load_spreadsheet(data: bytes, name: str,
                     config: EngineConfig | None = None) -> Dataset:
    """Parse CSV/TSV bytes (RFC-4180-style quoting, UTF-8) into a Dataset.

    The delimiter is auto-detected from {comma, tab, semicolon} by
    first-row frequency.  The file name, extension stripped and separators
    spaced, becomes the topic.
    """
    if not name or not name.strip():
        raise EmptyFile("spreadsheet name must be non-empty")
    typing_cfg = (config or EngineConfig()).typing
    text = data.decode("utf-8-sig", errors="replace")
    if not text.strip():
        raise EmptyFile("no header row")
    delimiter = _detect_delimiter(text.splitlines()[0])
    rows = [r for r in csv.reader(io.StringIO(text), delimiter=delimiter) if r]
    if not rows:
        raise EmptyFile("no header row")
    header = [c.strip() for c in rows[0]]
    body = rows[1:]
    if not body:
        raise ZeroRows("spreadsheet has a header but no data rows")
    for idx, row in enumerate(body):
        if len(row) != len(header):
            raise RaggedRows(
                f"row {idx + 2} has {len(row)} cells, header has {len(header)}",
                detail={"row": idx + 2},
            )
    dims = []
    for col, raw_name in enumerate(header):
        cells = tuple(row[col].strip() for row in body)
        dim_name = raw_name or f"column {col + 1}"
        dtype = infer_dimension_type(cells, typing_cfg)
        values, missing = _typed_values(cells, dtype)
        dims.append(DataDimension(
            id=f"d{col}", name=dim_name, data_type=dtype,
            raw=cells, values=values, missing=missing,
        ))
    ds = Dataset(topic=topic_from_name(name), dimensions=tuple(dims), rows=len(body))
    ds.validate()
    return ds


def propose_groups(dataset: Dataset,
                   similarity_threshold: float | None = None,
                   backend=None,
                   config: GroupingConfig | None = None) -> list[DataGroup]:
    """Suggest groups of numerical dimensions with similar names.

    Returns maximal sets (cliques under pairwise name similarity at or above
    the threshold) of two or more numerical dimensions.  Proposals are
    suggestions only; callers accept, edit, or reject them.
    """
    import networkx as nx

    from . import semantics

    threshold = similarity_threshold
    if threshold is None:
        threshold = (config or GroupingConfig()).similarity_threshold
    backend = backend or semantics.LexicalBackend()
    numeric = [d for d in dataset.dimensions if d.data_type is DataType.NUMERICAL]
    graph = nx.Graph()
    graph.add_nodes_from(d.id for d in numeric)
    for i, a in enumerate(numeric):
        for b in numeric[i + 1:]:
            if semantics.name_similarity(a.name, b.name, backend) >= threshold:
                graph.add_edge(a.id, b.id)
    order = {d.id: i for i, d in enumerate(dataset.dimensions)}
    cliques = [sorted(c, key=order.get) for c in nx.find_cliques(graph) if len(c) >= 2]
    cliques.sort(key=lambda c: (-len(c), tuple(order[m] for m in c)))
    proposals = []
    for k, members in enumerate(cliques):
        token_sets = [set(semantics.tokenize(dataset.dimension(m).name)) for m in members]
        shared = sorted(set.intersection(*token_sets)) if token_sets else []
        name = " ".join(shared) if shared else f"group {k + 1}"
        proposals.append(DataGroup(
            id=f"g{k}", name=name, member_dimension_ids=tuple(members),
        ))
    return proposals


def with_groups(dataset: Dataset, groups: list[DataGroup] | tuple[DataGroup, ...]) -> Dataset:
    """Return a copy with the accepted groups installed (validated)."""
    ds = replace(dataset, groups=tuple(groups))
    ds.validate()
    return ds


# --------------------------------------------------------------------------
# JSON shape for the service layer


def to_json_dict(dataset: Dataset) -> dict:
    return {
        "topic": dataset.topic,
        "rows": dataset.rows,
        "dimensions": [
            {
                "id": d.id,
                "name": d.name,
                "data_type": d.data_type.value,
                "raw": list(d.raw),
                "missing": list(d.missing),
                "importance": d.importance,
            }
            for d in dataset.dimensions
        ],
        "groups": [
            {
                "id": g.id,
                "name": g.name,
                "members": list(g.member_dimension_ids),
                "importance": g.importance,
            }
            for g in dataset.groups
        ],
    }


def from_json_dict(payload: dict) -> Dataset:
    dims = []
    for d in payload["dimensions"]:
        raw = tuple(d["raw"])
        dtype = DataType(d["data_type"])
        values, missing = _typed_values(raw, dtype)
        dims.append(DataDimension(
            id=d["id"], name=d["name"], data_type=dtype, raw=raw,
            values=values, missing=missing, importance=d.get("importance"),
        ))
    groups = tuple(
        DataGroup(id=g["id"], name=g["name"],
                  member_dimension_ids=tuple(g["members"]),
                  importance=g.get("importance"))
        for g in payload.get("groups", [])
    )
    ds = Dataset(topic=payload["topic"], dimensions=tuple(dims),
                 groups=groups, rows=payload["rows"])
    ds.validate()
    return ds
