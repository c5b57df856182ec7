"""Random anonymization instances for experiments and property tests."""
from __future__ import annotations

import random
from dataclasses import dataclass

from .dataset import AttributeSchema, Dataset
from .hierarchy import Hierarchy, categorical_from_rows, interval_from_levels


@dataclass
class Instance:
    data: Dataset
    hierarchies: dict[str, Hierarchy]
    # attribute -> per-level label rows, kept for independent re-computation in tests
    spec: dict[str, dict]

    @property
    def lattice_size(self) -> int:
        size = 1
        for h in self.hierarchies.values():
            size *= h.levels + 1
        return size


def _categorical(rng: random.Random, name: str, n_values: int, n_levels: int):
    values = [f"{name}{i}" for i in range(n_values)]
    rows = {v: [] for v in values}
    current = {v: v for v in values}
    for lvl in range(1, n_levels):
        labels = sorted(set(current.values()))
        groups = max(1, len(labels) - rng.randint(1, max(1, len(labels) - 1)))
        assign = {lab: f"{name}_L{lvl}_{rng.randrange(groups)}" for lab in labels}
        current = {v: assign[current[v]] for v in values}
        for v in values:
            rows[v].append(current[v])
    return values, [[v, *rows[v]] for v in values]


_INTERVAL_LADDERS = ([5, 20], [10, 50], [10], [25], [5, 25, 50], [20])


def _interval(rng: random.Random):
    ladder = rng.choice(_INTERVAL_LADDERS)
    levels = []
    for w in ladder:
        levels.append([[lo, lo + w, f"{lo}-{lo + w - 1}"] for lo in range(0, 100, w)])
    return levels


def random_instance(
    rng: random.Random,
    n: int,
    n_qi: int,
    *,
    max_lattice: int | None = None,
    sensitive_values: int = 4,
) -> Instance:
    """Build a table with ``n_qi`` quasi-identifiers, an identifier and one sensitive column.

    Quasi-identifiers alternate between nominal columns with random
    categorical hierarchies and discrete columns in [0, 100) with interval
    hierarchies. ``max_lattice`` bounds the product of (top level + 1).
    """
    while True:
        schema = [AttributeSchema("id", "discrete", "identifier")]
        hierarchies: dict[str, Hierarchy] = {}
        spec: dict[str, dict] = {}
        columns = []
        for q in range(n_qi):
            name = f"q{q}"
            if rng.random() < 0.5:
                values, rows = _categorical(rng, name, rng.randint(2, 6), rng.randint(1, 3))
                schema.append(AttributeSchema(name, "nominal", "quasi_identifier"))
                hierarchies[name] = categorical_from_rows(name, rows)
                spec[name] = {"kind": "categorical", "rows": rows}
                weights = [rng.random() + 0.05 for _ in values]
                columns.append(rng.choices(values, weights, k=n))
            else:
                levels = _interval(rng)
                schema.append(AttributeSchema(name, "discrete", "quasi_identifier"))
                hierarchies[name] = interval_from_levels(name, levels)
                spec[name] = {"kind": "interval", "levels": levels}
                lo = rng.randrange(0, 60)
                columns.append([rng.randrange(lo, min(100, lo + rng.randint(3, 60))) for _ in range(n)])
        schema.append(AttributeSchema("s", "nominal", "sensitive"))
        columns.append([f"s{rng.randrange(sensitive_values)}" for _ in range(n)])
        records = [(i, *cells) for i, cells in enumerate(zip(*columns))] if n_qi else [(i, c) for i, c in enumerate(columns[-1])]
        inst = Instance(Dataset(schema, records), hierarchies, spec)
        if max_lattice is None or inst.lattice_size <= max_lattice:
            return inst
