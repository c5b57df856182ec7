"""Re-identification risk and information-loss metrics.

Every metric is reported on a 0-100 percent scale. Risk metrics read a
partition; loss metrics compare an original table ``d`` against a
generalized table ``dz`` with the same rows in the same order.
"""
from __future__ import annotations

import math
from collections import Counter
from itertools import repeat
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

from .dataset import Dataset, format_value
from .errors import (
    ClassNotInPopulation,
    EmptyDataset,
    IndexOutOfRange,
    InvalidParameter,
    NoQuasiIdentifiers,
    RowCountMismatch,
    UnknownAttribute,
    ZeroDistinct,
)
from .hierarchy import GeneralizationScheme, Hierarchy
from .partition import Partition, ces, ces_vector, min_ces, partition
from .privacy_models import population_counts

PROSECUTOR = "prosecutor"
JOURNALIST = "journalist"
MARKETER = "marketer"


# ----------------------------------------------------------------------- risk


def individual_rr(part: Partition, row: int) -> float:
    """Risk of re-identifying one record: 100 / size of its class."""
    if not 0 <= row < part.n:
        raise IndexOutOfRange(f"row {row} out of range for n={part.n}")
    return 100 / ces(part, row)


def individual_rrs(part: Partition) -> list[float]:
    return [100 / c for c in ces_vector(part)]


def average_rr(part: Partition) -> float:
    """Mean of the per-record risks (one factor of 100 in total)."""
    if part.n == 0:
        raise EmptyDataset("average risk of an empty dataset is undefined")
    return math.fsum(individual_rrs(part)) / part.n


def maximum_rr(k_or_part: int | Partition) -> float:
    """100 / k, where k is given directly or taken as the smallest class size."""
    if isinstance(k_or_part, Partition):
        k = min_ces(k_or_part)
    else:
        k = k_or_part
        if isinstance(k, bool) or int(k) != k or k < 1:
            raise InvalidParameter(f"k must be an integer >= 1, got {k!r}")
    return 100 / k


def attack_profile(
    part: Partition,
    population: Dataset | None = None,
    scheme: GeneralizationScheme | None = None,
    hierarchies: Mapping[str, Hierarchy] | None = None,
) -> dict[str, float | None]:
    """Headline risk per attacker model.

    The prosecutor knows the target is in the release, so the worst class
    decides; the marketer wants as many matches as possible, which is the
    average risk; the journalist links against a population table, so each
    class is diluted by its population count. Without a population the
    journalist entry is ``None``.
    """
    profile: dict[str, float | None] = {
        PROSECUTOR: maximum_rr(part),
        JOURNALIST: None,
        MARKETER: average_rr(part),
    }
    if population is not None:
        if scheme is None:
            scheme = GeneralizationScheme.zeros(part.attributes)
        counts = population_counts(part, population, scheme, hierarchies or {})
        if any(c == 0 for c in counts):
            raise ClassNotInPopulation("a sample class does not occur in the population")
        profile[JOURNALIST] = max(100 / c for c in counts)
    return profile


@dataclass
class RiskReport:
    individual_rr: list[float]
    average_rr: float
    maximum_rr: float
    attack_profile: dict[str, float | None]
    class_count: int
    n: int

    def to_dict(self, include_individual: bool = False) -> dict:
        out = {
            "n": self.n,
            "class_count": self.class_count,
            "average": self.average_rr,
            "maximum": self.maximum_rr,
            "attack": dict(self.attack_profile),
        }
        if include_individual:
            out["individual"] = list(self.individual_rr)
        return out


def risk_report(
    d: Dataset,
    population: Dataset | None = None,
    scheme: GeneralizationScheme | None = None,
    hierarchies: Mapping[str, Hierarchy] | None = None,
) -> RiskReport:
    part = partition(d)
    avg, mx = average_rr(part), maximum_rr(part)
    assert avg <= mx + 1e-9, "average risk above maximum risk on a partition-derived report"
    return RiskReport(
        individual_rr=individual_rrs(part),
        average_rr=avg,
        maximum_rr=mx,
        attack_profile=attack_profile(part, population, scheme, hierarchies),
        class_count=part.class_count,
        n=part.n,
    )


# ----------------------------------------------------------------------- loss


def _aligned(d: Dataset, dz: Dataset) -> None:
    if d.n != dz.n:
        raise RowCountMismatch(
            f"original has {d.n} rows but anonymized has {dz.n}; restrict the original to the surviving rows first"
        )


def nue(d: Dataset, dz: Dataset, attributes: Sequence[str] | None = None) -> float:
    """Non-uniform entropy retained by ``dz`` over ``attributes`` (default: all quasi-identifiers).

    loss = sum_i log2(ces_out(i) / ces_in(i)) / sum_i log2(n / ces_in(i)), result
    (1 - loss) * 100. A table that is already a single class loses nothing.
    """
    _aligned(d, dz)
    attributes = d.quasi_identifiers if attributes is None else tuple(attributes)
    for a in attributes:
        dz.index(a)
    n = d.n
    if n == 0:
        raise EmptyDataset("entropy of an empty dataset is undefined")
    pairs = Counter(zip(ces_vector(partition(d, attributes)), ces_vector(partition(dz, attributes))))
    # per-row terms summed exactly, so the result is monotone in the class sizes
    num = math.fsum(t for (cin, out), m in pairs.items() for t in repeat(math.log2(out / cin), m))
    den = math.fsum(t for (cin, _), m in pairs.items() for t in repeat(math.log2(n / cin), m))
    if den == 0:
        return 100.0
    return (1 - num / den) * 100


def nue_per_attribute(d: Dataset, dz: Dataset) -> dict[str, float]:
    return {a: nue(d, dz, [a]) for a in d.quasi_identifiers}


def ig(d: Dataset, dz: Dataset) -> float:
    """Share of quasi-identifier cells left unchanged, as a percent.

    Cells are compared by their rendered token, so a value whose label equals
    the value itself counts as unchanged.
    """
    _aligned(d, dz)
    qis = d.quasi_identifiers
    if not qis:
        raise NoQuasiIdentifiers("intensity of generalization needs at least one quasi-identifier")
    if d.n == 0:
        raise EmptyDataset("intensity of generalization of an empty dataset is undefined")
    changed = 0
    for a in qis:
        for x, y in zip(d.column(a), dz.column(a)):
            if format_value(x) != format_value(y) or ((x is None) != (y is None)):
                changed += 1
    return float((1 - Fraction(changed, d.n * len(qis))) * 100)


def distinct_count(values) -> int:
    return len(set(values))


def gg(d: Dataset, dz: Dataset, attribute: str) -> float:
    """Distinct values kept in one column, as a percent of the original count."""
    if attribute not in d.names or attribute not in dz.names:
        raise UnknownAttribute(f"unknown attribute {attribute!r}")
    before = distinct_count(d.column(attribute))
    if before == 0:
        raise ZeroDistinct(f"column {attribute!r} is empty")
    return float(Fraction(distinct_count(dz.column(attribute)), before) * 100)


def gg_per_attribute(d: Dataset, dz: Dataset) -> dict[str, float]:
    return {a: gg(d, dz, a) for a in d.quasi_identifiers}


@dataclass
class LossReport:
    nue_overall: float
    nue_per_attribute: dict[str, float]
    ig: float
    gg_per_attribute: dict[str, float]
    row_subset: bool = False  # computed on the rows that survived record suppression
    suppressed_rows: int = 0

    @property
    def gg_mean(self) -> float:
        vals = list(self.gg_per_attribute.values())
        return math.fsum(vals) / len(vals) if vals else 100.0

    def to_dict(self) -> dict:
        return {
            "nue": {"overall": self.nue_overall, "per_attribute": dict(self.nue_per_attribute)},
            "ig": self.ig,
            "gg": {"per_attribute": dict(self.gg_per_attribute), "mean": self.gg_mean},
            "row_subset": self.row_subset,
            "suppressed_rows": self.suppressed_rows,
        }


def loss_report(d: Dataset, dz: Dataset, suppressed_rows: int = 0) -> LossReport:
    """All loss metrics for an aligned pair.

    When ``suppressed_rows`` is non-zero the caller has already restricted
    ``d`` to the surviving rows and the report is flagged accordingly.
    """
    return LossReport(
        nue_overall=nue(d, dz),
        nue_per_attribute=nue_per_attribute(d, dz),
        ig=ig(d, dz),
        gg_per_attribute=gg_per_attribute(d, dz),
        row_subset=suppressed_rows > 0,
        suppressed_rows=suppressed_rows,
    )


__all__ = [
    "JOURNALIST",
    "MARKETER",
    "PROSECUTOR",
    "LossReport",
    "RiskReport",
    "attack_profile",
    "average_rr",
    "distinct_count",
    "gg",
    "gg_per_attribute",
    "ig",
    "individual_rr",
    "individual_rrs",
    "loss_report",
    "maximum_rr",
    "nue",
    "nue_per_attribute",
    "risk_report",
]
