"""Typed tabular data model and CSV ingestion.

Cells are plain Python values:

* ``None``        missing
* ``str``         nominal label (also the display label of a generalized cell)
* ``Ordinal``     label plus its rank in the attribute's declared order
* ``int``         discrete
* ``Decimal``     continuous (keeps the source token intact on round trip)
* ``SUPPRESSED``  a fully masked cell
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from enum import Enum
from pathlib import Path
from typing import Any, Iterable, Sequence

from .errors import (
    EmptyDataset,
    HeaderMismatch,
    IndexOutOfRange,
    InputError,
    ParseError,
    UnknownAttribute,
    UnsupportedFormat,
)

SUPPRESSED_TOKEN = "*"


class _Suppressed:
    __slots__ = ()
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "SUPPRESSED"

    def __str__(self) -> str:
        return SUPPRESSED_TOKEN

    def __reduce__(self):
        return (_Suppressed, ())


SUPPRESSED = _Suppressed()


@dataclass(frozen=True)
class Ordinal:
    label: str
    rank: int

    def __str__(self) -> str:
        return self.label


class DataType(str, Enum):
    NOMINAL = "nominal"
    ORDINAL = "ordinal"
    DISCRETE = "discrete"
    CONTINUOUS = "continuous"

    @property
    def ordered(self) -> bool:
        return self is not DataType.NOMINAL


class Role(str, Enum):
    IDENTIFIER = "identifier"
    QUASI_IDENTIFIER = "quasi_identifier"
    SENSITIVE = "sensitive"
    INSENSITIVE = "insensitive"


@dataclass(frozen=True)
class AttributeSchema:
    name: str
    data_type: DataType
    role: Role
    hierarchy: str | None = None
    locale: str | None = None
    order: tuple[str, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "data_type", DataType(self.data_type))
        object.__setattr__(self, "role", Role(self.role))
        if self.order is not None:
            object.__setattr__(self, "order", tuple(self.order))
        if self.data_type is DataType.ORDINAL:
            if not self.order:
                raise InputError(f"ordinal attribute {self.name!r} needs an 'order' list")
            if len(set(self.order)) != len(self.order):
                raise InputError(f"ordinal attribute {self.name!r} has duplicate labels in its order")

    @property
    def is_qi(self) -> bool:
        return self.role is Role.QUASI_IDENTIFIER

    def rank_of(self, label: str) -> int:
        return self.order.index(label)


def format_value(value: Any, missing_token: str = "") -> str:
    """Render a cell as its CSV token."""
    if value is None:
        return missing_token
    if value is SUPPRESSED:
        return SUPPRESSED_TOKEN
    return str(value)


def parse_value(token: str, attr: AttributeSchema, missing_token: str = ""):
    """Parse one CSV token into the attribute's declared cell type.

    Raises ``ValueError`` when the token does not fit the type.
    """
    if token == missing_token:
        return None
    kind = attr.data_type
    if kind is DataType.NOMINAL:
        return token
    if kind is DataType.ORDINAL:
        if token not in attr.order:
            raise ValueError(token)
        return Ordinal(token, attr.rank_of(token))
    if kind is DataType.DISCRETE:
        stripped = token.strip()
        if not stripped.lstrip("+-").isdigit():
            raise ValueError(token)
        return int(stripped)
    try:
        value = Decimal(token.strip())
    except InvalidOperation:
        raise ValueError(token) from None
    if not value.is_finite():
        raise ValueError(token)
    return value


@dataclass(frozen=True)
class Dataset:
    """Immutable table.

    ``levels`` records the generalization level each column currently sits at
    (0 for raw data). ``row_ids`` maps each row back to its index in the
    dataset it was loaded as, so record suppression stays auditable.
    """

    schema: tuple[AttributeSchema, ...]
    records: tuple[tuple, ...]
    levels: tuple[int, ...] = None
    row_ids: tuple[int, ...] = None
    _index: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        schema = tuple(self.schema)
        records = tuple(tuple(r) for r in self.records)
        width = len(schema)
        for i, row in enumerate(records):
            if len(row) != width:
                raise InputError(f"row {i} has {len(row)} cells, schema has {width}")
        names = [a.name for a in schema]
        if len(set(names)) != len(names):
            raise InputError("duplicate attribute names in schema")
        levels = tuple(self.levels) if self.levels is not None else (0,) * width
        row_ids = tuple(self.row_ids) if self.row_ids is not None else tuple(range(len(records)))
        if len(levels) != width or len(row_ids) != len(records):
            raise InputError("levels/row_ids do not match the table shape")
        object.__setattr__(self, "schema", schema)
        object.__setattr__(self, "records", records)
        object.__setattr__(self, "levels", levels)
        object.__setattr__(self, "row_ids", row_ids)
        object.__setattr__(self, "_index", {n: i for i, n in enumerate(names)})

    @property
    def n(self) -> int:
        return len(self.records)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(a.name for a in self.schema)

    @property
    def quasi_identifiers(self) -> tuple[str, ...]:
        return tuple(a.name for a in self.schema if a.is_qi)

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise UnknownAttribute(f"unknown attribute {name!r}") from None

    def attribute(self, name: str) -> AttributeSchema:
        return self.schema[self.index(name)]

    def column(self, name: str) -> list:
        j = self.index(name)
        return [row[j] for row in self.records]

    def project(self, names: Sequence[str]) -> list[tuple]:
        idx = [self.index(n) for n in names]
        return [tuple(row[j] for j in idx) for row in self.records]

    def with_records(self, records, levels=None, row_ids=None) -> "Dataset":
        return Dataset(
            self.schema,
            records,
            levels=self.levels if levels is None else levels,
            row_ids=self.row_ids if row_ids is None else row_ids,
        )

    def digest(self) -> str:
        """Content hash over schema and cell tokens (not row ids)."""
        h = hashlib.sha256()
        for a in self.schema:
            h.update(f"{a.name}\x1f{a.data_type.value}\x1f{a.role.value}\x1e".encode())
        for row in self.records:
            for cell in row:
                h.update(_typed_token(cell).encode())
                h.update(b"\x1f")
            h.update(b"\x1e")
        return h.hexdigest()

    def check_types(self) -> None:
        """Raise ``ParseError`` if a raw (level-0) cell does not match its declared type."""
        for j, attr in enumerate(self.schema):
            if self.levels[j] != 0:
                continue
            for i, row in enumerate(self.records):
                cell = row[j]
                if cell is None or cell is SUPPRESSED:
                    continue
                if not _kind_ok(cell, attr):
                    raise ParseError(i, attr.name, format_value(cell), attr.data_type.value)


def _typed_token(cell) -> str:
    if cell is None:
        return "\x00N"
    if cell is SUPPRESSED:
        return "\x00S"
    return f"{type(cell).__name__}:{cell}"


def _kind_ok(cell, attr: AttributeSchema) -> bool:
    kind = attr.data_type
    if kind is DataType.NOMINAL:
        return isinstance(cell, str)
    if kind is DataType.ORDINAL:
        return isinstance(cell, Ordinal) and attr.order[cell.rank] == cell.label
    if kind is DataType.DISCRETE:
        return isinstance(cell, int) and not isinstance(cell, bool)
    return isinstance(cell, Decimal)


# --------------------------------------------------------------------- schema


def schema_from_dict(raw: dict | list, base_dir: Path | None = None) -> tuple[list[AttributeSchema], str]:
    """Build attribute schemas from parsed schema JSON.

    Returns the schemas and the declared dataset format.
    """
    if isinstance(raw, list):
        raw = {"attributes": raw}
    fmt = str(raw.get("format", "plaintext")).lower()
    attrs = []
    for entry in raw.get("attributes", []):
        try:
            hierarchy = entry.get("hierarchy")
            if hierarchy is not None and base_dir is not None:
                hierarchy = str((base_dir / hierarchy).resolve()) if not Path(hierarchy).is_absolute() else hierarchy
            attrs.append(
                AttributeSchema(
                    name=entry["name"],
                    data_type=entry["data_type"],
                    role=entry["role"],
                    hierarchy=hierarchy,
                    locale=entry.get("locale"),
                    order=entry.get("order"),
                )
            )
        except (KeyError, ValueError) as exc:
            raise InputError(f"bad schema entry {entry!r}: {exc}") from None
    if not attrs:
        raise InputError("schema declares no attributes")
    return attrs, fmt


def load_schema(path: str | Path) -> tuple[list[AttributeSchema], str]:
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise InputError(f"schema file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"schema file {path} is not valid JSON: {exc}") from None
    return schema_from_dict(raw, base_dir=path.parent)


# ------------------------------------------------------------------------ csv


def load_csv(
    path: str | Path,
    schema: Sequence[AttributeSchema],
    *,
    delimiter: str = ",",
    quotechar: str = '"',
    missing_token: str = "",
    data_format: str = "plaintext",
    generalized: bool = False,
) -> Dataset:
    """Read a CSV file into a ``Dataset``.

    With ``generalized=True`` quasi-identifier cells that do not parse as the
    declared type are kept as display labels and ``*`` reads as suppressed;
    this is how released (anonymized) files are read back.
    """
    if data_format.lower() not in ("plaintext", "utf-8", "csv"):
        raise UnsupportedFormat(f"dataset format {data_format!r} is not supported; only plaintext CSV is")
    path = Path(path)
    try:
        text = path.read_bytes().decode("utf-8")
    except FileNotFoundError:
        raise InputError(f"data file not found: {path}") from None
    except UnicodeDecodeError:
        raise UnsupportedFormat(f"{path} is not UTF-8 text (encrypted or proprietary formats are rejected)") from None
    return read_csv_text(
        text, schema, delimiter=delimiter, quotechar=quotechar, missing_token=missing_token, generalized=generalized
    )


def read_csv_text(
    text: str,
    schema: Sequence[AttributeSchema],
    *,
    delimiter: str = ",",
    quotechar: str = '"',
    missing_token: str = "",
    generalized: bool = False,
) -> Dataset:
    if text.startswith("\ufeff"):
        text = text[1:]
    reader = csv.reader(io.StringIO(text, newline=""), delimiter=delimiter, quotechar=quotechar)
    try:
        header = next(reader)
    except StopIteration:
        raise EmptyDataset("file is empty") from None
    expected = [a.name for a in schema]
    if [h.strip() for h in header] != expected:
        raise HeaderMismatch(f"header {header} does not match schema {expected}")
    records = []
    for row in reader:
        if not row:
            continue
        line_no = reader.line_num  # 1-based file line, header is line 1
        if len(row) != len(schema):
            raise ParseError(line_no, "*", delimiter.join(row), f"{len(schema)} cells")
        cells = []
        for attr, token in zip(schema, row):
            if generalized and attr.is_qi and token == SUPPRESSED_TOKEN:
                cells.append(SUPPRESSED)
                continue
            try:
                cells.append(parse_value(token, attr, missing_token))
            except ValueError:
                if generalized and attr.is_qi:
                    cells.append(token)
                else:
                    raise ParseError(line_no, attr.name, token, attr.data_type.value) from None
        records.append(tuple(cells))
    if not records:
        raise EmptyDataset("file contains a header but no data rows")
    return Dataset(tuple(schema), records)


def write_csv(d: Dataset, target, *, delimiter: str = ",", missing_token: str = "") -> None:
    """Write ``d`` to a path or an open text stream (``\\n`` line endings)."""
    if isinstance(target, (str, Path)):
        with open(target, "w", encoding="utf-8", newline="") as fh:
            write_csv(d, fh, delimiter=delimiter, missing_token=missing_token)
        return
    writer = csv.writer(target, delimiter=delimiter, lineterminator="\n")
    writer.writerow(d.names)
    for row in d.records:
        writer.writerow([format_value(c, missing_token) for c in row])


def csv_text(d: Dataset, **kwargs) -> str:
    buf = io.StringIO()
    write_csv(d, buf, **kwargs)
    return buf.getvalue()


# ----------------------------------------------------------------- operations


def drop_identifiers(d: Dataset) -> Dataset:
    keep = [j for j, a in enumerate(d.schema) if a.role is not Role.IDENTIFIER]
    if len(keep) == len(d.schema):
        return d
    return Dataset(
        tuple(d.schema[j] for j in keep),
        [tuple(row[j] for j in keep) for row in d.records],
        levels=tuple(d.levels[j] for j in keep),
        row_ids=d.row_ids,
    )


def qi_projection(d: Dataset, row: int) -> tuple:
    if not 0 <= row < d.n:
        raise IndexOutOfRange(f"row {row} out of range for n={d.n}")
    r = d.records[row]
    return tuple(r[j] for j, a in enumerate(d.schema) if a.is_qi)


def select_rows(d: Dataset, rows: Iterable[int]) -> Dataset:
    """Keep only ``rows`` (positional indices), preserving order."""
    rows = sorted(set(rows))
    return d.with_records([d.records[i] for i in rows], row_ids=[d.row_ids[i] for i in rows])


def restrict_to(d: Dataset, row_ids: Iterable[int]) -> Dataset:
    """Keep the rows of ``d`` whose ``row_ids`` appear in ``row_ids``."""
    wanted = set(row_ids)
    return select_rows(d, [i for i, rid in enumerate(d.row_ids) if rid in wanted])


__all__ = [
    "SUPPRESSED",
    "SUPPRESSED_TOKEN",
    "AttributeSchema",
    "DataType",
    "Dataset",
    "Ordinal",
    "Role",
    "csv_text",
    "drop_identifiers",
    "format_value",
    "load_csv",
    "load_schema",
    "parse_value",
    "qi_projection",
    "read_csv_text",
    "restrict_to",
    "schema_from_dict",
    "select_rows",
    "write_csv",
]
