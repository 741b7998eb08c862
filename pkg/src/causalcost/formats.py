"""File formats: JSON model documents and CSV project tables.

Both formats round-trip losslessly (parse -> serialize -> parse is a fixed
point) and reject unknown fields with position information.  All writes are
atomic (temp file + rename) and locale-independent.
"""

from __future__ import annotations

import csv
import json
import os
import tempfile
from collections.abc import Sequence
from pathlib import Path

from .calibration import ProjectRecord
from .model import (
    CausalModel,
    CostFactor,
    DirectInfluence,
    InteractionInfluence,
    OrdinalScale,
    TriangularParams,
    validate_model,
)

__all__ = [
    "FormatError",
    "load_model",
    "save_model",
    "model_to_dict",
    "load_projects",
    "save_projects",
    "parse_ratings",
    "atomic_write_text",
]


class FormatError(ValueError):
    """Malformed or structurally invalid input file."""


def atomic_write_text(path: "str | Path", text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _expect(value, expected_type, where: str):
    if expected_type is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise FormatError(f"{where}: expected a number, got {value!r}")
        return float(value)
    if expected_type is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise FormatError(f"{where}: expected an integer, got {value!r}")
        return value
    if not isinstance(value, expected_type):
        raise FormatError(f"{where}: expected {expected_type.__name__}, got {type(value).__name__}")
    return value


def _checked_object(obj, where: str, required: dict, optional: dict | None = None) -> dict:
    optional = optional or {}
    _expect(obj, dict, where)
    unknown = sorted(set(obj) - set(required) - set(optional))
    if unknown:
        raise FormatError(f"{where}: unknown field(s) {', '.join(repr(k) for k in unknown)}")
    out = {}
    for key, expected_type in required.items():
        if key not in obj:
            raise FormatError(f"{where}: missing required field {key!r}")
        out[key] = _expect(obj[key], expected_type, f"{where}.{key}")
    for key, (expected_type, default) in optional.items():
        out[key] = _expect(obj[key], expected_type, f"{where}.{key}") if key in obj else default
    return out


def _triangular(fields: dict) -> TriangularParams:
    return TriangularParams(fields["min"], fields["likely"], fields["max"])


def load_model(path: "str | Path") -> CausalModel:
    """Parse and validate a model document; any structural violation rejects it."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc}") from exc
    try:
        document = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc

    root = _checked_object(
        document,
        "document",
        {"factors": list, "direct": list},
        {"interactions": (list, [])},
    )
    factors = []
    for index, item in enumerate(root["factors"]):
        where = f"factors[{index}]"
        fields = _checked_object(
            item,
            where,
            {"id": str, "name": str, "level_count": int, "level_anchors": list},
            {"direction": (str, "+"), "description": (str, "")},
        )
        anchors = tuple(
            _expect(anchor, str, f"{where}.level_anchors[{i}]")
            for i, anchor in enumerate(fields["level_anchors"])
        )
        factors.append(
            CostFactor(
                id=fields["id"],
                name=fields["name"],
                scale=OrdinalScale(fields["level_count"], anchors),
                direction=fields["direction"],
                description=fields["description"],
            )
        )
    direct = []
    for index, item in enumerate(root["direct"]):
        where = f"direct[{index}]"
        fields = _checked_object(
            item, where, {"factor_id": str, "min": float, "likely": float, "max": float}
        )
        direct.append(DirectInfluence(fields["factor_id"], _triangular(fields)))
    interactions = []
    for index, item in enumerate(root["interactions"]):
        where = f"interactions[{index}]"
        fields = _checked_object(
            item,
            where,
            {
                "direct_factor_id": str,
                "indirect_factor_id": str,
                "sign": int,
                "min": float,
                "likely": float,
                "max": float,
            },
        )
        interactions.append(
            InteractionInfluence(
                fields["direct_factor_id"],
                fields["indirect_factor_id"],
                fields["sign"],
                _triangular(fields),
            )
        )
    model = CausalModel(tuple(factors), tuple(direct), tuple(interactions))
    violations = validate_model(model)
    if violations:
        details = "\n".join(f"  - {v}" for v in violations)
        raise FormatError(f"{path}: model fails validation:\n{details}")
    return model


def model_to_dict(model: CausalModel) -> dict:
    """Canonical document form: elements sorted by id, fixed key order."""
    return {
        "factors": [
            {
                "id": f.id,
                "name": f.name,
                "direction": f.direction,
                "level_count": f.scale.level_count,
                "level_anchors": list(f.scale.level_anchors),
                "description": f.description,
            }
            for f in sorted(model.factors, key=lambda f: f.id)
        ],
        "direct": [
            {
                "factor_id": d.factor_id,
                "min": d.extreme_overhead.min,
                "likely": d.extreme_overhead.likely,
                "max": d.extreme_overhead.max,
            }
            for d in sorted(model.direct, key=lambda d: d.factor_id)
        ],
        "interactions": [
            {
                "direct_factor_id": ia.direct_factor_id,
                "indirect_factor_id": ia.indirect_factor_id,
                "sign": ia.sign,
                "min": ia.extreme_overhead.min,
                "likely": ia.extreme_overhead.likely,
                "max": ia.extreme_overhead.max,
            }
            for ia in sorted(
                model.interactions, key=lambda ia: (ia.direct_factor_id, ia.indirect_factor_id)
            )
        ],
    }


def save_model(model: CausalModel, path: "str | Path") -> None:
    atomic_write_text(path, json.dumps(model_to_dict(model), indent=2) + "\n")


_EFFORT_PREFIX = "effort_"
_FACTOR_PREFIX = "factor_"
_ATTR_PREFIX = "attr_"
_EXPERT_MARKER = "_expert_"


def _parse_number(cell: str, where: str) -> float:
    try:
        return float(cell)
    except ValueError as exc:
        raise FormatError(f"{where}: malformed number {cell!r}") from exc


def _parse_rating(cell: str, where: str) -> int:
    try:
        return int(cell)
    except ValueError as exc:
        raise FormatError(f"{where}: malformed rating {cell!r} (integer required)") from exc


def load_projects(path: "str | Path") -> list[ProjectRecord]:
    """Parse a project table; blank cells mean "not measured", never zero."""
    path = Path(path)
    try:
        with open(path, newline="", encoding="utf-8") as handle:
            rows = list(csv.reader(handle))
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise FormatError(f"{path}: empty file")
    header = rows[0]
    columns: list[tuple[str, ...]] = []
    for col, name in enumerate(header):
        where = f"{path}: header column {col + 1} ({name!r})"
        if name == "project_id":
            columns.append(("project_id",))
        elif name == "size":
            columns.append(("size",))
        elif name.startswith(_EFFORT_PREFIX):
            phase = name[len(_EFFORT_PREFIX):]
            if not phase:
                raise FormatError(f"{where}: empty phase name")
            columns.append(("effort", phase))
        elif name.startswith(_FACTOR_PREFIX):
            body = name[len(_FACTOR_PREFIX):]
            if _EXPERT_MARKER not in body:
                raise FormatError(f"{where}: factor column needs an {_EXPERT_MARKER.strip('_')!r} part")
            factor_id, expert_id = body.rsplit(_EXPERT_MARKER, 1)
            if not factor_id or not expert_id:
                raise FormatError(f"{where}: empty factor or expert id")
            columns.append(("factor", factor_id, expert_id))
        elif name.startswith(_ATTR_PREFIX):
            attr = name[len(_ATTR_PREFIX):]
            if not attr:
                raise FormatError(f"{where}: empty attribute name")
            columns.append(("attr", attr))
        else:
            raise FormatError(f"{where}: unknown column prefix")
    if ("project_id",) not in columns:
        raise FormatError(f"{path}: missing required column 'project_id'")
    if ("size",) not in columns:
        raise FormatError(f"{path}: missing required column 'size'")

    records = []
    seen_ids: set[str] = set()
    for row_number, row in enumerate(rows[1:], start=2):
        if not row or all(cell.strip() == "" for cell in row):
            continue
        if len(row) != len(columns):
            raise FormatError(
                f"{path}: row {row_number}: expected {len(columns)} cells, got {len(row)}"
            )
        project_id = None
        size = None
        efforts: dict[str, float] = {}
        ratings: dict[str, dict[str, int]] = {}
        attributes: dict[str, float | str] = {}
        for col, (kind, *rest) in enumerate(columns):
            cell = row[col].strip()
            where = f"{path}: row {row_number}, column {header[col]!r}"
            if kind == "project_id":
                if not cell:
                    raise FormatError(f"{where}: project id must not be blank")
                project_id = cell
            elif kind == "size":
                size = _parse_number(cell, where) if cell else None
            elif kind == "effort":
                if cell:
                    efforts[rest[0]] = _parse_number(cell, where)
            elif kind == "factor":
                if cell:
                    factor_id, expert_id = rest
                    ratings.setdefault(expert_id, {})[factor_id] = _parse_rating(cell, where)
            elif kind == "attr":
                if cell:
                    try:
                        attributes[rest[0]] = float(cell)
                    except ValueError:
                        attributes[rest[0]] = cell
        if project_id in seen_ids:
            raise FormatError(f"{path}: row {row_number}: duplicate project id {project_id!r}")
        seen_ids.add(project_id)
        records.append(ProjectRecord(project_id, size, efforts, ratings, attributes))
    return records


def _format_value(value: "float | str") -> str:
    if isinstance(value, str):
        return value
    return repr(float(value))


def save_projects(projects: Sequence[ProjectRecord], path: "str | Path") -> None:
    """Write records with a header covering every phase, rating cell, and attribute."""
    phases = sorted({ph for p in projects for ph in p.phase_efforts})
    rating_cells = sorted(
        {(fid, eid) for p in projects for eid, r in p.ratings.items() for fid in r}
    )
    attrs = sorted({a for p in projects for a in p.attributes})
    header = (
        ["project_id", "size"]
        + [f"effort_{ph}" for ph in phases]
        + [f"factor_{fid}_expert_{eid}" for fid, eid in rating_cells]
        + [f"attr_{a}" for a in attrs]
    )
    lines = [",".join(header)]
    for p in projects:
        row = [p.id, "" if p.size is None else repr(float(p.size))]
        for ph in phases:
            row.append(repr(float(p.phase_efforts[ph])) if ph in p.phase_efforts else "")
        for fid, eid in rating_cells:
            rating = p.ratings.get(eid, {}).get(fid)
            row.append("" if rating is None else str(rating))
        for a in attrs:
            row.append(_format_value(p.attributes[a]) if a in p.attributes else "")
        lines.append(",".join(row))
    atomic_write_text(path, "\n".join(lines) + "\n")


def parse_ratings(spec: str) -> dict[str, int]:
    """Ratings from either a JSON file path or an inline "id=level,id=level" spec."""
    if "=" in spec:
        ratings = {}
        for chunk in spec.split(","):
            chunk = chunk.strip()
            if not chunk:
                continue
            key, _, value = chunk.partition("=")
            if not key or not value:
                raise FormatError(f"malformed inline rating {chunk!r} (expected id=level)")
            try:
                ratings[key.strip()] = int(value.strip())
            except ValueError as exc:
                raise FormatError(f"malformed rating level in {chunk!r}") from exc
        if not ratings:
            raise FormatError("inline ratings are empty")
        return ratings
    path = Path(spec)
    try:
        document = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise FormatError(f"cannot read ratings file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    if not isinstance(document, dict):
        raise FormatError(f"{path}: ratings file must hold one JSON object")
    ratings = {}
    for key, value in document.items():
        if isinstance(value, bool) or not isinstance(value, int):
            raise FormatError(f"{path}: rating for {key!r} must be an integer, got {value!r}")
        ratings[key] = value
    return ratings
