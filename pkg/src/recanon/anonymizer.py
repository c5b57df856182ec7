"""Lattice search over generalization schemes with record suppression.

Each lattice node is a vector of hierarchy levels, one per quasi-identifier.
Evaluating a node generalizes the table, removes whole violating classes
(smallest first) while the suppression budget allows, re-checks every
constraint and scores the information kept. The best node is the satisfying
one with the highest score; ties go to the lower total level, then to the
lexicographically smaller level vector.
"""
from __future__ import annotations

import itertools
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from decimal import Decimal
from fractions import Fraction
from typing import Mapping, Sequence

from .dataset import Dataset, Role, select_rows
from .errors import (
    AttributeNotSensitive,
    EmptyDataset,
    InvalidParameter,
    MissingHierarchy,
    NoSolution,
    StaleNode,
)
from .hierarchy import GeneralizationScheme, Hierarchy, generalize, generalize_column, suppress_records
from .metrics import average_rr, gg_per_attribute, ig, nue
from .partition import partition
from .privacy_models import (
    DeltaPresence,
    LDiversity,
    ModelVerdict,
    PrivacyConstraint,
    TCloseness,
    evaluate,
)

log = logging.getLogger(__name__)

EXHAUSTIVE = "exhaustive"
PRUNED_BFS = "pruned-bfs"
STRATEGIES = (EXHAUSTIVE, PRUNED_BFS)

# objective name -> whether its score can only fall as levels rise
OBJECTIVES = {"nue": True, "ig": True, "gg": True, "nue+avg_rr": False}


@dataclass(frozen=True)
class SearchConfig:
    constraints: tuple[PrivacyConstraint, ...]
    suppression_budget: float = 0.0
    objective: str = "nue"
    strategy: str = PRUNED_BFS
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "constraints", tuple(self.constraints))
        if not self.constraints:
            raise InvalidParameter("at least one privacy constraint is required")
        if not 0 <= self.suppression_budget <= 1:
            raise InvalidParameter(f"suppression budget must lie in [0, 1], got {self.suppression_budget}")
        if self.objective not in OBJECTIVES:
            raise InvalidParameter(f"unknown objective {self.objective!r}; choose from {sorted(OBJECTIVES)}")
        if self.strategy not in STRATEGIES:
            raise InvalidParameter(f"unknown strategy {self.strategy!r}; choose from {STRATEGIES}")
        if self.workers < 1:
            raise InvalidParameter("workers must be >= 1")

    def max_suppressed(self, n: int) -> int:
        """floor(budget * n).

        Float budgets are read through their shortest decimal form, and a
        product within 1e-9 of an integer counts as that integer, so a budget
        of 1/3 on 3 rows allows one row.
        """
        b = self.suppression_budget
        x = b * n if isinstance(b, Fraction) else Fraction(Decimal(repr(float(b)))) * n
        if abs(x - round(x)) <= Fraction(1, 10**9):
            return round(x)
        return math.floor(x)

    @property
    def prunable(self) -> bool:
        return OBJECTIVES[self.objective] and all(c.anti_monotone for c in self.constraints)


@dataclass
class LatticeNode:
    scheme: GeneralizationScheme
    evaluated: bool = False
    verdicts: tuple[ModelVerdict, ...] = ()
    satisfied: bool = False
    loss_score: float | None = None
    losses: dict = field(default_factory=dict)
    average_rr: float | None = None
    suppressed_rows: tuple[int, ...] = ()  # row ids of the searched dataset
    pruned_by: GeneralizationScheme | None = None
    note: str | None = None
    dataset_digest: str = ""

    @property
    def levels(self) -> tuple[int, ...]:
        return self.scheme.levels

    @property
    def height(self) -> int:
        return sum(self.scheme.levels)

    @property
    def suppressed_count(self) -> int:
        return len(self.suppressed_rows)

    def to_dict(self) -> dict:
        out = {
            "scheme": self.scheme.as_dict(),
            "levels": list(self.levels),
            "evaluated": self.evaluated,
        }
        if not self.evaluated:
            out["pruned_by"] = list(self.pruned_by.levels) if self.pruned_by else None
            return out
        out.update(
            satisfied=self.satisfied,
            verdicts=[v.to_dict() for v in self.verdicts],
            losses=dict(self.losses),
            loss_score=self.loss_score,
            average_rr=self.average_rr,
            suppressed_rows=self.suppressed_count,
        )
        if self.note:
            out["note"] = self.note
        return out


@dataclass
class SearchResult:
    best: LatticeNode | None
    nodes: list[LatticeNode]
    config: SearchConfig
    max_suppressed: int

    @property
    def evaluated_count(self) -> int:
        return sum(n.evaluated for n in self.nodes)

    def to_dict(self) -> dict:
        return {
            "strategy": self.config.strategy,
            "objective": self.config.objective,
            "constraints": [c.name for c in self.config.constraints],
            "suppression_budget": self.config.suppression_budget,
            "max_suppressed_rows": self.max_suppressed,
            "lattice_size": len(self.nodes),
            "evaluated_nodes": self.evaluated_count,
            "best": self.best.to_dict() if self.best else None,
            "nodes": [n.to_dict() for n in self.nodes],
        }


# ------------------------------------------------------------------ evaluation


class _NodeEvaluator:
    """Holds everything needed to score one level vector; picklable for workers."""

    def __init__(self, d: Dataset, hierarchies: Mapping[str, Hierarchy], cfg: SearchConfig):
        self.d = d
        self.hierarchies = dict(hierarchies)
        self.cfg = cfg
        self.qis = d.quasi_identifiers
        self.qi_idx = [d.index(a) for a in self.qis]
        self.budget = cfg.max_suppressed(d.n)
        self.digest = d.digest()
        raw = [list(col) for col in zip(*d.records)]
        # columns[q][level] = the q-th quasi-identifier generalized to that level
        self.columns = []
        for a, j in zip(self.qis, self.qi_idx):
            h = self.hierarchies[a]
            self.columns.append(
                [generalize_column(raw[j], h, 0, lvl, a, d.row_ids) for lvl in range(h.levels + 1)]
            )
        self.raw = raw

    def generalized(self, levels: Sequence[int]) -> Dataset:
        cols = list(self.raw)
        lv = list(self.d.levels)
        for q, (j, lvl) in enumerate(zip(self.qi_idx, levels)):
            cols[j] = self.columns[q][lvl]
            lv[j] = lvl
        return self.d.with_records(list(zip(*cols)), levels=lv)

    def check(self, dz: Dataset, scheme: GeneralizationScheme):
        part = partition(dz)
        return part, tuple(evaluate(c, part, dz, scheme, self.hierarchies) for c in self.cfg.constraints)

    def __call__(self, levels: tuple[int, ...]) -> LatticeNode:
        scheme = GeneralizationScheme(self.qis, levels)
        node = LatticeNode(scheme, evaluated=True, dataset_digest=self.digest)
        dz = self.generalized(levels)
        part, verdicts = self.check(dz, scheme)

        bad = sorted({c for v in verdicts for c in v.violating_classes}, key=lambda c: (part.classes[c].size, c))
        drop: list[int] = []
        for c in bad:
            size = part.classes[c].size
            if len(drop) + size > self.budget:
                break
            drop.extend(part.classes[c].member_rows)
        if drop:
            dz = suppress_records(dz, drop)
            node.suppressed_rows = tuple(sorted(self.d.row_ids[i] for i in drop))
            if dz.n == 0:
                node.note = "every record suppressed"
                node.verdicts = verdicts
                return node
            part, verdicts = self.check(dz, scheme)

        node.verdicts = verdicts
        node.satisfied = all(v.satisfied for v in verdicts)
        if drop:
            dropped = set(drop)
            d_sub = select_rows(self.d, [i for i in range(self.d.n) if i not in dropped])
        else:
            d_sub = self.d
        node.losses = self.losses(d_sub, dz)
        node.average_rr = average_rr(part)
        obj = self.cfg.objective
        node.loss_score = node.losses["gg_mean" if obj == "gg" else "nue" if obj.startswith("nue") else obj]
        return node

    def losses(self, d_sub: Dataset, dz: Dataset) -> dict:
        if not self.qis:
            return {"nue": 100.0, "ig": 100.0, "gg_mean": 100.0}
        ggs = gg_per_attribute(d_sub, dz)
        return {
            "nue": nue(d_sub, dz),
            "ig": ig(d_sub, dz),
            "gg_mean": math.fsum(ggs.values()) / len(ggs),
        }


_WORKER: _NodeEvaluator | None = None


def _init_worker(evaluator: _NodeEvaluator) -> None:
    global _WORKER
    _WORKER = evaluator


def _run_in_worker(levels):
    return _WORKER(levels)


# ---------------------------------------------------------------------- search


def _validate(d: Dataset, hierarchies: Mapping[str, Hierarchy], cfg: SearchConfig) -> None:
    if d.n == 0:
        raise EmptyDataset("cannot anonymize an empty dataset")
    if any(d.levels):
        raise InvalidParameter("search expects a raw (level-0) dataset")
    for a in d.quasi_identifiers:
        if a not in hierarchies:
            raise MissingHierarchy(f"no hierarchy for quasi-identifier {a!r}")
    for c in cfg.constraints:
        if isinstance(c, (LDiversity, TCloseness)):
            if d.attribute(c.sensitive).role is not Role.SENSITIVE:
                raise AttributeNotSensitive(f"attribute {c.sensitive!r} does not have the sensitive role")
        if isinstance(c, DeltaPresence) and any(c.population.levels):
            raise InvalidParameter("the population table must be raw (level-0)")


def sort_key(node: LatticeNode, objective: str = "nue"):
    """Smaller is better among satisfying nodes."""
    secondary = node.average_rr if objective == "nue+avg_rr" else 0.0
    return (-node.loss_score, secondary, node.height, node.levels)


def lattice(d: Dataset, hierarchies: Mapping[str, Hierarchy]) -> list[tuple[int, ...]]:
    """All level vectors, ordered by total level then lexicographically."""
    ranges = [range(hierarchies[a].levels + 1) for a in d.quasi_identifiers]
    return sorted(itertools.product(*ranges), key=lambda v: (sum(v), v))


def search(d: Dataset, hierarchies: Mapping[str, Hierarchy], cfg: SearchConfig) -> SearchResult:
    """Find the best privacy-satisfying node; raises ``NoSolution`` if none exists.

    ``pruned-bfs`` walks the lattice height by height and skips every strict
    generalization of a node that already satisfies all constraints without
    suppressing a record. That shortcut is only taken when every constraint is
    anti-monotone (k-anonymity, l-diversity) and the objective cannot rise with
    the levels, so it never changes the optimum.
    """
    _validate(d, hierarchies, cfg)
    evaluator = _NodeEvaluator(d, hierarchies, cfg)
    vectors = lattice(d, hierarchies)
    qis = d.quasi_identifiers
    nodes: dict[tuple, LatticeNode] = {}
    prune = cfg.strategy == PRUNED_BFS and cfg.prunable

    pool = None
    if cfg.workers > 1:
        pool = ProcessPoolExecutor(max_workers=cfg.workers, initializer=_init_worker, initargs=(evaluator,))
    try:
        roots: list[tuple[int, ...]] = []
        for _, layer in itertools.groupby(vectors, key=sum):
            todo = []
            for v in layer:
                root = next((r for r in roots if all(a <= b for a, b in zip(r, v))), None) if prune else None
                if root is not None:
                    nodes[v] = LatticeNode(
                        GeneralizationScheme(qis, v), pruned_by=GeneralizationScheme(qis, root), dataset_digest=evaluator.digest
                    )
                else:
                    todo.append(v)
            done = list(pool.map(_run_in_worker, todo, chunksize=max(1, len(todo) // (4 * cfg.workers)))) if pool else [
                evaluator(v) for v in todo
            ]
            for v, node in zip(todo, done):
                nodes[v] = node
                if prune and node.satisfied and not node.suppressed_rows:
                    roots.append(v)
    finally:
        if pool is not None:
            pool.shutdown()

    ordered = [nodes[v] for v in vectors]
    candidates = [n for n in ordered if n.evaluated and n.satisfied]
    best = min(candidates, key=lambda n: sort_key(n, cfg.objective)) if candidates else None
    result = SearchResult(best, ordered, cfg, evaluator.budget)
    log.debug("evaluated %d of %d nodes", result.evaluated_count, len(ordered))
    if best is None:
        err = NoSolution(
            f"no generalization satisfies {[c.name for c in cfg.constraints]} "
            f"with at most {evaluator.budget} suppressed records"
        )
        err.result = result
        raise err
    return result


def apply(d: Dataset, node: LatticeNode, hierarchies: Mapping[str, Hierarchy]) -> tuple[Dataset, list[int]]:
    """Re-create the released table for a node found by ``search`` over ``d``.

    Returns the anonymized table and the row ids that were suppressed.
    """
    if not node.evaluated:
        raise InvalidParameter("node was pruned and never evaluated")
    if node.dataset_digest != d.digest():
        raise StaleNode("dataset changed since the search that produced this node")
    dz = generalize(d, node.scheme, hierarchies)
    drop = set(node.suppressed_rows)
    if drop:
        dz = suppress_records(dz, [i for i, rid in enumerate(dz.row_ids) if rid in drop])
    return dz, sorted(drop)


def audit(dz: Dataset, node: LatticeNode, cfg: SearchConfig, hierarchies: Mapping[str, Hierarchy]) -> list[ModelVerdict]:
    """Independently re-check every constraint on a released table."""
    part = partition(dz)
    return [evaluate(c, part, dz, node.scheme, hierarchies) for c in cfg.constraints]


__all__ = [
    "EXHAUSTIVE",
    "OBJECTIVES",
    "PRUNED_BFS",
    "LatticeNode",
    "SearchConfig",
    "SearchResult",
    "apply",
    "audit",
    "lattice",
    "search",
    "sort_key",
]
