"""Generalization hierarchies, level schemes and record suppression.

A hierarchy with top level ``L`` maps every level-0 value to one label per
level; level 0 is the value itself and level ``L`` is full suppression.
Categorical hierarchies come from ``v0;v1;...;vL`` text rows, interval
hierarchies from JSON lists of half-open ranges.
"""
from __future__ import annotations

import bisect
import csv
import io
import json
from dataclasses import dataclass, field
from decimal import Decimal
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .dataset import (
    SUPPRESSED,
    SUPPRESSED_TOKEN,
    AttributeSchema,
    DataType,
    Dataset,
    Ordinal,
    format_value,
    select_rows,
)
from .errors import (
    HierarchyError,
    IndexOutOfRange,
    InputError,
    InvalidParameter,
    MissingHierarchy,
    NonFunctionalMapping,
    NonMonotone,
    RangeGap,
    RangeOverlap,
    UnmappedValue,
)

CATEGORICAL = "categorical"
INTERVAL = "interval"


@dataclass(frozen=True)
class Range:
    lo: Decimal
    hi: Decimal
    label: str

    def __contains__(self, value) -> bool:
        return self.lo <= value < self.hi


@dataclass(frozen=True, eq=False)
class Hierarchy:
    """Per-attribute generalization hierarchy.

    For ``categorical`` hierarchies ``table`` maps each level-0 token to its
    labels at levels ``1..L-1``. For ``interval`` hierarchies ``ranges[l-1]``
    holds the sorted ranges of level ``l`` for ``l`` in ``1..L-1``.
    """

    attribute_name: str
    kind: str
    levels: int
    table: Mapping[str, tuple[str, ...]] = field(default_factory=dict)
    ranges: tuple[tuple[Range, ...], ...] = ()

    def __post_init__(self):
        if self.levels < 1:
            raise HierarchyError(f"hierarchy for {self.attribute_name!r} needs at least one level")
        if self.kind == CATEGORICAL:
            lifts = []
            for lvl in range(1, self.levels - 1):
                up = {}
                for labels in self.table.values():
                    up[labels[lvl - 1]] = labels[lvl]
                lifts.append(up)
            object.__setattr__(self, "_lifts", lifts)
        elif self.kind == INTERVAL:
            object.__setattr__(self, "_los", [[r.lo for r in level] for level in self.ranges])
            object.__setattr__(self, "_by_label", [{r.label: r for r in level} for level in self.ranges])
        else:
            raise HierarchyError(f"unknown hierarchy kind {self.kind!r}")

    def lift(self, cell, src: int, dst: int):
        """Map a cell sitting at level ``src`` to level ``dst >= src``.

        Raises ``KeyError`` if the cell is not covered.
        """
        if dst == src or (cell is None and dst < self.levels):
            return cell
        if dst >= self.levels or cell is SUPPRESSED:
            return SUPPRESSED
        if self.kind == CATEGORICAL:
            if src == 0:
                return self.table[format_value(cell)][dst - 1]
            label = cell
            for lvl in range(src, dst):
                label = self._lifts[lvl - 1][label]
            return label
        point = cell if src == 0 else self._by_label[src - 1][cell].lo
        return self._find(dst, point).label

    def _find(self, level: int, point) -> Range:
        los = self._los[level - 1]
        if isinstance(point, Ordinal):
            raise KeyError(point)
        k = bisect.bisect_right(los, point) - 1
        if k < 0:
            raise KeyError(point)
        r = self.ranges[level - 1][k]
        if point not in r:
            raise KeyError(point)
        return r

    def label(self, value, level: int):
        return self.lift(value, 0, level)


@dataclass(frozen=True, order=False)
class GeneralizationScheme:
    """One hierarchy level per quasi-identifier, in schema order."""

    attributes: tuple[str, ...]
    levels: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "attributes", tuple(self.attributes))
        object.__setattr__(self, "levels", tuple(int(v) for v in self.levels))
        if len(self.attributes) != len(self.levels):
            raise InvalidParameter("scheme needs exactly one level per quasi-identifier")
        if any(v < 0 for v in self.levels):
            raise InvalidParameter("scheme levels must be non-negative")

    @classmethod
    def zeros(cls, attributes: Sequence[str]) -> "GeneralizationScheme":
        return cls(tuple(attributes), (0,) * len(attributes))

    def as_dict(self) -> dict[str, int]:
        return dict(zip(self.attributes, self.levels))

    def __le__(self, other: "GeneralizationScheme") -> bool:
        return self.attributes == other.attributes and all(a <= b for a, b in zip(self.levels, other.levels))

    def __lt__(self, other: "GeneralizationScheme") -> bool:
        return self <= other and self.levels != other.levels

    def __str__(self) -> str:
        return "(" + ", ".join(str(v) for v in self.levels) + ")"


# --------------------------------------------------------------------- loading


def _check_monotone_table(name: str, table: dict[str, tuple[str, ...]]) -> None:
    depth = len(next(iter(table.values())))
    for lvl in range(depth - 1):
        up: dict[str, str] = {}
        for labels in table.values():
            lo, hi = labels[lvl], labels[lvl + 1]
            if up.setdefault(lo, hi) != hi:
                raise NonMonotone(
                    f"hierarchy {name!r}: values merged under {lo!r} at level {lvl + 1} split into "
                    f"{up[lo]!r} and {hi!r} at level {lvl + 2}"
                )
    # a value that was changed by generalization may not return to its raw token
    for token, labels in table.items():
        changed = False
        for lvl, lab in enumerate(labels, start=1):
            if lab != token:
                changed = True
            elif changed:
                raise NonMonotone(f"hierarchy {name!r}: value {token!r} reverts to itself at level {lvl}")


def categorical_from_rows(name: str, rows: Iterable[Sequence[str]]) -> Hierarchy:
    table: dict[str, tuple[str, ...]] = {}
    width = None
    for row in rows:
        row = [c.strip() for c in row]
        if not row or row == [""]:
            continue
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise HierarchyError(f"hierarchy {name!r}: row {row} has {len(row)} levels, expected {width}")
        v0, labels = row[0], tuple(row[1:])
        if v0 in table and table[v0] != labels:
            raise NonFunctionalMapping(f"hierarchy {name!r}: value {v0!r} has two different generalizations")
        table[v0] = labels
    if not table:
        raise HierarchyError(f"hierarchy {name!r} is empty")
    if all(labels and labels[-1] == SUPPRESSED_TOKEN for labels in table.values()):
        table = {k: v[:-1] for k, v in table.items()}
    _check_monotone_table(name, {k: (k,) + v for k, v in table.items()})
    levels = len(next(iter(table.values()))) + 1
    return Hierarchy(name, CATEGORICAL, levels, table=table)


def interval_from_levels(name: str, levels: Sequence[Sequence]) -> Hierarchy:
    """Build an interval hierarchy from per-level lists of ``[lo, hi, label]``.

    Entries may also be dicts with ``lo``/``hi``/``label`` keys. A final
    level consisting of a single ``*`` range is treated as the top.
    """
    parsed: list[tuple[Range, ...]] = []
    for lvl, entries in enumerate(levels, start=1):
        rs = []
        for e in entries:
            if isinstance(e, Mapping):
                lo, hi, lab = e["lo"], e["hi"], e.get("label")
            else:
                lo, hi = e[0], e[1]
                lab = e[2] if len(e) > 2 else None
            lo, hi = Decimal(str(lo)), Decimal(str(hi))
            if not lo < hi:
                raise HierarchyError(f"hierarchy {name!r} level {lvl}: empty range [{lo}, {hi})")
            rs.append(Range(lo, hi, lab if lab is not None else f"[{lo}, {hi})"))
        if not rs:
            raise HierarchyError(f"hierarchy {name!r} level {lvl} has no ranges")
        rs.sort(key=lambda r: (r.lo, r.hi))
        for a, b in zip(rs, rs[1:]):
            if a.hi < b.lo:
                raise RangeGap(f"hierarchy {name!r} level {lvl}: gap between {a.hi} and {b.lo}")
            if a.hi > b.lo:
                raise RangeOverlap(f"hierarchy {name!r} level {lvl}: [{a.lo}, {a.hi}) overlaps [{b.lo}, {b.hi})")
        if len({r.label for r in rs}) != len(rs):
            raise NonFunctionalMapping(f"hierarchy {name!r} level {lvl}: duplicate range labels")
        parsed.append(tuple(rs))
    if parsed and len(parsed[-1]) == 1 and parsed[-1][0].label == SUPPRESSED_TOKEN:
        parsed.pop()
    for lvl, (lower, upper) in enumerate(zip(parsed, parsed[1:]), start=1):
        if (lower[0].lo, lower[-1].hi) != (upper[0].lo, upper[-1].hi):
            raise RangeGap(f"hierarchy {name!r}: levels {lvl} and {lvl + 1} cover different spans")
        for r in lower:
            k = bisect.bisect_right([u.lo for u in upper], r.lo) - 1
            if k < 0 or r.hi > upper[k].hi:
                raise NonMonotone(f"hierarchy {name!r}: range [{r.lo}, {r.hi}) at level {lvl} is split at level {lvl + 1}")
    return Hierarchy(name, INTERVAL, len(parsed) + 1, ranges=tuple(parsed))


def load_hierarchy(path: str | Path, attribute: AttributeSchema | str) -> Hierarchy:
    """Load a hierarchy file for ``attribute``.

    ``.json`` files are interval hierarchies (``{"levels": [[[lo, hi, label], ...], ...]}``);
    anything else is a semicolon-separated categorical hierarchy.
    """
    name = attribute.name if isinstance(attribute, AttributeSchema) else attribute
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise MissingHierarchy(f"hierarchy file for {name!r} not found: {path}") from None
    if path.suffix.lower() == ".json":
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise HierarchyError(f"hierarchy file {path} is not valid JSON: {exc}") from None
        levels = raw["levels"] if isinstance(raw, dict) else raw
        h = interval_from_levels(name, levels)
    else:
        h = categorical_from_rows(name, csv.reader(io.StringIO(text), delimiter=";"))
    if isinstance(attribute, AttributeSchema):
        check_compatible(h, attribute)
    return h


def check_compatible(h: Hierarchy, attribute: AttributeSchema) -> None:
    if attribute.data_type is DataType.CONTINUOUS and h.kind != INTERVAL:
        raise HierarchyError(f"continuous attribute {attribute.name!r} needs an interval hierarchy")
    if attribute.data_type in (DataType.NOMINAL, DataType.ORDINAL) and h.kind == INTERVAL:
        raise HierarchyError(f"{attribute.data_type.value} attribute {attribute.name!r} cannot use an interval hierarchy")


def load_hierarchies(d_schema: Sequence[AttributeSchema], overrides: Mapping[str, str] | None = None) -> dict[str, Hierarchy]:
    """Load one hierarchy per quasi-identifier from schema paths or ``overrides``."""
    overrides = dict(overrides or {})
    out = {}
    for attr in d_schema:
        if not attr.is_qi:
            continue
        path = overrides.get(attr.name, attr.hierarchy)
        if path is None:
            raise MissingHierarchy(f"no hierarchy declared for quasi-identifier {attr.name!r}")
        out[attr.name] = load_hierarchy(path, attr)
    return out


# ----------------------------------------------------------------- operations


def check_scheme(d: Dataset, scheme: GeneralizationScheme, hierarchies: Mapping[str, Hierarchy]) -> None:
    if set(scheme.attributes) != set(d.quasi_identifiers):
        raise InvalidParameter(
            f"scheme attributes {scheme.attributes} do not match quasi-identifiers {d.quasi_identifiers}"
        )
    for name, lvl in zip(scheme.attributes, scheme.levels):
        if lvl == 0:
            continue
        if name not in hierarchies:
            raise MissingHierarchy(f"no hierarchy for quasi-identifier {name!r}")
        if lvl > hierarchies[name].levels:
            raise InvalidParameter(f"level {lvl} exceeds top level {hierarchies[name].levels} of {name!r}")


def generalize_column(
    values: Sequence, h: Hierarchy, src: int, dst: int, column: str = "?", row_ids: Sequence[int] | None = None
) -> list:
    if dst < src:
        raise InvalidParameter(f"column {column!r} is at level {src}; cannot generalize down to {dst}")
    out = []
    for i, v in enumerate(values):
        try:
            out.append(h.lift(v, src, dst))
        except (KeyError, TypeError):
            raise UnmappedValue(row_ids[i] if row_ids else i, column, v) from None
    return out


def generalize(d: Dataset, scheme: GeneralizationScheme, hierarchies: Mapping[str, Hierarchy]) -> Dataset:
    """Replace every quasi-identifier cell by its label at the scheme's level."""
    check_scheme(d, scheme, hierarchies)
    target = scheme.as_dict()
    columns = [list(col) for col in zip(*d.records)] if d.records else [[] for _ in d.schema]
    levels = list(d.levels)
    for j, attr in enumerate(d.schema):
        if not attr.is_qi or target[attr.name] == levels[j]:
            continue
        name, dst = attr.name, target[attr.name]
        if name not in hierarchies:
            raise MissingHierarchy(f"no hierarchy for quasi-identifier {name!r}")
        columns[j] = generalize_column(columns[j], hierarchies[name], levels[j], dst, name, d.row_ids)
        levels[j] = dst
    return d.with_records(list(zip(*columns)) if d.records else [], levels=levels)


def suppress_records(d: Dataset, rows: Iterable[int]) -> Dataset:
    """Remove the rows at the given positional indices."""
    rows = set(rows)
    for i in rows:
        if not 0 <= i < d.n:
            raise IndexOutOfRange(f"row {i} out of range for n={d.n}")
    return select_rows(d, [i for i in range(d.n) if i not in rows])


def lattice_size(hierarchies: Mapping[str, Hierarchy], attributes: Sequence[str]) -> int:
    size = 1
    for a in attributes:
        size *= hierarchies[a].levels + 1
    return size


__all__ = [
    "CATEGORICAL",
    "INTERVAL",
    "GeneralizationScheme",
    "Hierarchy",
    "InputError",
    "Range",
    "categorical_from_rows",
    "check_compatible",
    "check_scheme",
    "generalize",
    "generalize_column",
    "interval_from_levels",
    "lattice_size",
    "load_hierarchies",
    "load_hierarchy",
    "suppress_records",
]
