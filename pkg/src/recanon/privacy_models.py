"""Privacy-model predicates evaluated against a partition.

Distances and presence probabilities are computed with exact rationals so
boundary parameters (t = 0, delta bounds equal to a ratio) behave exactly.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from decimal import Decimal
from fractions import Fraction
from typing import ClassVar, Mapping, Sequence

from .dataset import SUPPRESSED, DataType, Dataset, Ordinal, Role
from .errors import AttributeNotSensitive, ClassNotInPopulation, InvalidParameter, SchemaMismatch
from .hierarchy import GeneralizationScheme, Hierarchy, generalize
from .partition import Partition


def _exact(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        return Fraction(Decimal(repr(x)))
    return Fraction(x)


def _positive_int(name: str, value) -> None:
    if isinstance(value, bool) or not isinstance(value, (int, float, Fraction)) or int(value) != value or value < 1:
        raise InvalidParameter(f"{name} must be an integer >= 1, got {value!r}")


@dataclass(frozen=True)
class KAnonymity:
    k: int
    anti_monotone: ClassVar[bool] = True

    def __post_init__(self):
        _positive_int("k", self.k)

    @property
    def name(self) -> str:
        return f"k-anonymity(k={self.k})"


@dataclass(frozen=True)
class LDiversity:
    l: int  # noqa: E741
    sensitive: str
    anti_monotone: ClassVar[bool] = True

    def __post_init__(self):
        _positive_int("l", self.l)

    @property
    def name(self) -> str:
        return f"l-diversity(l={self.l}, {self.sensitive})"


@dataclass(frozen=True)
class TCloseness:
    t: float
    sensitive: str
    anti_monotone: ClassVar[bool] = False

    def __post_init__(self):
        if not 0 <= self.t <= 1:
            raise InvalidParameter(f"t must lie in [0, 1], got {self.t!r}")

    @property
    def name(self) -> str:
        return f"t-closeness(t={self.t}, {self.sensitive})"


@dataclass(frozen=True)
class DeltaPresence:
    delta_min: float
    delta_max: float
    population: Dataset = field(repr=False, compare=False)
    anti_monotone: ClassVar[bool] = False

    def __post_init__(self):
        if not 0 <= self.delta_min <= self.delta_max <= 1:
            raise InvalidParameter(
                f"delta bounds must satisfy 0 <= min <= max <= 1, got ({self.delta_min}, {self.delta_max})"
            )

    @property
    def name(self) -> str:
        return f"delta-presence([{self.delta_min}, {self.delta_max}])"


PrivacyConstraint = KAnonymity | LDiversity | TCloseness | DeltaPresence


@dataclass(frozen=True)
class ModelVerdict:
    model: str
    violating_classes: tuple[int, ...] = ()
    witness: tuple = ()  # one observed quantity per violating class

    @property
    def satisfied(self) -> bool:
        return not self.violating_classes

    def __bool__(self) -> bool:
        return self.satisfied

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "satisfied": self.satisfied,
            "violations": [
                {"class": c, "observed": float(w) if isinstance(w, Fraction) else w}
                for c, w in zip(self.violating_classes, self.witness)
            ],
        }


def _verdict(model: str, items) -> ModelVerdict:
    items = list(items)
    return ModelVerdict(model, tuple(c for c, _ in items), tuple(w for _, w in items))


def check_k_anonymity(part: Partition, k: int) -> ModelVerdict:
    KAnonymity(k)
    return _verdict(f"k-anonymity(k={k})", ((c, cls.size) for c, cls in enumerate(part.classes) if cls.size < k))


def _sensitive_index(d: Dataset, sensitive: str) -> int:
    j = d.index(sensitive)
    if d.schema[j].role is not Role.SENSITIVE:
        raise AttributeNotSensitive(f"attribute {sensitive!r} does not have the sensitive role")
    return j


def check_l_diversity(part: Partition, d: Dataset, l: int, sensitive: str) -> ModelVerdict:  # noqa: E741
    """Distinct l-diversity: each class holds at least ``l`` distinct non-missing values."""
    LDiversity(l, sensitive)
    j = _sensitive_index(d, sensitive)
    bad = []
    for c, cls in enumerate(part.classes):
        distinct = len({d.records[i][j] for i in cls.member_rows} - {None})
        if distinct < l:
            bad.append((c, distinct))
    return _verdict(f"l-diversity(l={l}, {sensitive})", bad)


# ------------------------------------------------------------------ distances


def distribution(values) -> dict:
    """Empirical distribution of the non-missing values as exact fractions."""
    counts = Counter(v for v in values if v is not None)
    total = sum(counts.values())
    return {v: Fraction(c, total) for v, c in counts.items()} if total else {}


def total_variation(p: Mapping, q: Mapping) -> Fraction:
    keys = set(p) | set(q)
    return sum((abs(p.get(x, 0) - q.get(x, 0)) for x in keys), Fraction(0)) / 2


def ordered_emd(p: Mapping, q: Mapping, order: Sequence) -> Fraction:
    """Earth mover's distance on a line of ``len(order)`` equally spaced points,
    normalized to [0, 1] by the maximal transport distance ``m - 1``."""
    m = len(order)
    if m <= 1:
        return Fraction(0)
    cum = Fraction(0)
    work = Fraction(0)
    for x in order:
        cum += p.get(x, 0) - q.get(x, 0)
        work += abs(cum)
    return work / (m - 1)


def _ordered_support(d: Dataset, j: int, values) -> list:
    attr = d.schema[j]
    if attr.data_type is DataType.ORDINAL:
        return [Ordinal(label, r) for r, label in enumerate(attr.order)]
    return sorted({v for v in values if v is not None and v is not SUPPRESSED})


def class_distances(part: Partition, d: Dataset, sensitive: str) -> list[Fraction]:
    """Distance between each class's sensitive distribution and the whole set's.

    Nominal attributes use total variation; ordinal and numeric attributes use
    the normalized ordered earth mover's distance. A class without any
    non-missing sensitive value is at distance 1 unless the whole set has none.
    """
    j = _sensitive_index(d, sensitive)
    column = [row[j] for row in d.records]
    overall = distribution(column)
    ordered = d.schema[j].data_type.ordered
    support = _ordered_support(d, j, column) if ordered else None
    out = []
    for cls in part.classes:
        p = distribution(column[i] for i in cls.member_rows)
        if not p or not overall:
            out.append(Fraction(0) if not p and not overall else Fraction(1))
        elif ordered:
            out.append(ordered_emd(p, overall, support))
        else:
            out.append(total_variation(p, overall))
    return out


def check_t_closeness(part: Partition, d: Dataset, t: float, sensitive: str) -> ModelVerdict:
    TCloseness(t, sensitive)
    bound = _exact(t)
    dist = class_distances(part, d, sensitive)
    return _verdict(f"t-closeness(t={t}, {sensitive})", ((c, x) for c, x in enumerate(dist) if x > bound))


# ------------------------------------------------------------------- presence


def population_counts(
    sample_part: Partition, population: Dataset, scheme: GeneralizationScheme, hierarchies: Mapping[str, Hierarchy]
) -> list[int]:
    """Size of the generalized population class matching each sample class."""
    missing = [a for a in sample_part.attributes if a not in population.names]
    if missing:
        raise SchemaMismatch(f"population lacks quasi-identifiers {missing}")
    if set(population.quasi_identifiers) != set(sample_part.attributes):
        raise SchemaMismatch(
            f"population quasi-identifiers {population.quasi_identifiers} differ from sample {sample_part.attributes}"
        )
    pop = generalize(population, scheme, hierarchies)
    counts = Counter(pop.project(sample_part.attributes))
    return [counts.get(cls.key, 0) for cls in sample_part.classes]


def presence_probabilities(sample_part, population, scheme, hierarchies) -> list[Fraction]:
    out = []
    for cls, pop in zip(sample_part.classes, population_counts(sample_part, population, scheme, hierarchies)):
        if pop == 0:
            raise ClassNotInPopulation(f"sample class {cls.key!r} does not occur in the population")
        out.append(Fraction(cls.size, pop))
    return out


def check_delta_presence(
    sample_part: Partition,
    population: Dataset,
    scheme: GeneralizationScheme,
    hierarchies: Mapping[str, Hierarchy],
    delta_min: float,
    delta_max: float,
) -> ModelVerdict:
    DeltaPresence(delta_min, delta_max, population)
    lo, hi = _exact(delta_min), _exact(delta_max)
    probs = presence_probabilities(sample_part, population, scheme, hierarchies)
    return _verdict(
        f"delta-presence([{delta_min}, {delta_max}])",
        ((c, p) for c, p in enumerate(probs) if not lo <= p <= hi),
    )


def evaluate(
    constraint: PrivacyConstraint,
    part: Partition,
    d: Dataset,
    scheme: GeneralizationScheme | None = None,
    hierarchies: Mapping[str, Hierarchy] | None = None,
) -> ModelVerdict:
    """Dispatch one constraint against the partition of ``d``."""
    if isinstance(constraint, KAnonymity):
        return check_k_anonymity(part, constraint.k)
    if isinstance(constraint, LDiversity):
        return check_l_diversity(part, d, constraint.l, constraint.sensitive)
    if isinstance(constraint, TCloseness):
        return check_t_closeness(part, d, constraint.t, constraint.sensitive)
    if isinstance(constraint, DeltaPresence):
        if scheme is None:
            scheme = GeneralizationScheme(part.attributes, [d.levels[d.index(a)] for a in part.attributes])
        return check_delta_presence(
            part, constraint.population, scheme, hierarchies or {}, constraint.delta_min, constraint.delta_max
        )
    raise InvalidParameter(f"unknown constraint {constraint!r}")


__all__ = [
    "DeltaPresence",
    "KAnonymity",
    "LDiversity",
    "ModelVerdict",
    "PrivacyConstraint",
    "TCloseness",
    "check_delta_presence",
    "check_k_anonymity",
    "check_l_diversity",
    "check_t_closeness",
    "class_distances",
    "distribution",
    "evaluate",
    "ordered_emd",
    "population_counts",
    "presence_probabilities",
    "total_variation",
]
