"""Equivalence classes over quasi-identifier projections."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .dataset import Dataset
from .errors import EmptyDataset, IndexOutOfRange


@dataclass(frozen=True)
class EquivalenceClass:
    key: tuple
    member_rows: tuple[int, ...]

    @property
    def size(self) -> int:
        return len(self.member_rows)


@dataclass(frozen=True)
class Partition:
    classes: tuple[EquivalenceClass, ...]
    n: int
    attributes: tuple[str, ...]
    row_class: tuple[int, ...]

    @property
    def class_count(self) -> int:
        return len(self.classes)

    j = class_count

    def sizes(self) -> list[int]:
        return [c.size for c in self.classes]

    def class_of(self, row: int) -> EquivalenceClass:
        if not 0 <= row < self.n:
            raise IndexOutOfRange(f"row {row} out of range for n={self.n}")
        return self.classes[self.row_class[row]]


def group_keys(keys: Sequence[tuple], attributes: Sequence[str] = ()) -> Partition:
    """Group pre-projected keys; classes are ordered by first occurrence."""
    members: dict[tuple, list[int]] = {}
    for i, key in enumerate(keys):
        members.setdefault(key, []).append(i)
    index = {key: c for c, key in enumerate(members)}
    return Partition(
        classes=tuple(EquivalenceClass(k, tuple(rows)) for k, rows in members.items()),
        n=len(keys),
        attributes=tuple(attributes),
        row_class=tuple(index[k] for k in keys),
    )


def partition(d: Dataset, attributes: Sequence[str] | None = None) -> Partition:
    """Partition ``d`` by equality of its quasi-identifier projection.

    ``attributes`` narrows the projection to a subset of columns (used by the
    per-attribute entropy metric). Missing equals Missing and suppressed
    equals suppressed; with no attributes every row lands in one class.
    """
    attributes = d.quasi_identifiers if attributes is None else tuple(attributes)
    return group_keys(d.project(attributes), attributes)


def ces(part: Partition, row: int) -> int:
    return part.class_of(row).size


def min_ces(part: Partition) -> int:
    if part.n == 0:
        raise EmptyDataset("cannot take the minimum class size of an empty dataset")
    return min(c.size for c in part.classes)


def ces_vector(part: Partition) -> list[int]:
    """Class size of every row, in row order."""
    sizes = [c.size for c in part.classes]
    return [sizes[c] for c in part.row_class]
