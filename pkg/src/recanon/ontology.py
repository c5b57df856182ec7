"""In-memory knowledge graph of anonymization concepts and study-plan validation.

The graph is a flat labeled triple store. Nodes carry the top-level class
they belong to (``privacy-model``, ``data-type``, ...); every property has a
domain and range class that each triple must respect. The builtin graph is
read from ``data/knowledge.json`` and can be extended by a user file.
"""
from __future__ import annotations

import difflib
import json
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping

from .errors import InputError, UnknownNode, UnknownProperty

PROPERTIES = ("has-preparation", "has-measure", "has-impact", "mitigates", "threatens", "subclass-of")

DESIGNS_SUITED = ("cross-sectional", "case-control", "cohort")


def normalize(name: str) -> str:
    return "-".join(str(name).strip().lower().replace("_", " ").split())


@dataclass(frozen=True)
class Node:
    name: str
    label: str
    cls: str
    kind: str = "instance"
    definition: str = ""
    flags: Mapping[str, object] = field(default_factory=dict, compare=False)

    @property
    def excluded(self) -> bool:
        return bool(self.flags.get("excluded"))

    @property
    def is_anonymization(self) -> bool:
        return bool(self.flags.get("anonymization", True))

    @property
    def risk_metric(self) -> bool:
        return bool(self.flags.get("risk_metric"))


@dataclass(frozen=True)
class Triple:
    subject: str
    property: str
    object: str
    source: str = "user"


class OntologyGraph:
    def __init__(self, nodes: Iterable[Node], triples: Iterable[Triple], properties: Mapping[str, dict],
                 aliases: Mapping[str, str] | None = None, version: str = "user"):
        self.nodes: dict[str, Node] = {}
        for node in nodes:
            self.nodes[node.name] = node
        self.properties = {p: dict(v) for p, v in properties.items()}
        self.aliases = {normalize(k): v for k, v in (aliases or {}).items()}
        self.version = version
        seen = set()
        self.triples: list[Triple] = []
        for t in triples:
            key = (t.subject, t.property, t.object)
            if key not in seen:
                seen.add(key)
                self.triples.append(t)
        problems = self.problems()
        if problems:
            raise InputError("invalid knowledge graph: " + "; ".join(problems))
        self._index: dict[tuple[str, str], list[str]] = {}
        for t in self.triples:
            self._index.setdefault((t.subject, t.property), []).append(t.object)

    # -- lookup

    def resolve(self, name: str) -> str:
        key = normalize(name)
        key = self.aliases.get(key, key)
        if key not in self.nodes:
            raise UnknownNode(name, self.suggest(name))
        return key

    def node(self, name: str) -> Node:
        return self.nodes[self.resolve(name)]

    def suggest(self, name: str, n: int = 3) -> list[str]:
        key = normalize(name)
        pool = sorted(set(self.nodes) | set(self.aliases))
        close = difflib.get_close_matches(key, pool, n=n, cutoff=0.6)
        if not close:
            close = difflib.get_close_matches(key, pool, n=n, cutoff=0.0)
        return close

    def _check_property(self, subject: str, prop: str) -> None:
        if prop not in self.properties:
            raise UnknownProperty(f"unknown property {prop!r}")
        domain = self.properties[prop].get("domain")
        cls = self.nodes[subject].cls
        # classes that are the domain of no property (study designs, ...) just have no edges
        if not any(v.get("domain") == cls for v in self.properties.values()):
            return
        if domain and cls != domain:
            raise UnknownProperty(
                f"property {prop!r} applies to {domain} terms; {subject!r} is a {self.nodes[subject].cls}"
            )

    def objects(self, subject: str, prop: str) -> list[str]:
        """Objects of matching triples in file order."""
        s = self.resolve(subject)
        self._check_property(s, prop)
        return list(self._index.get((s, prop), []))

    def query(self, subject: str, prop: str) -> frozenset[str]:
        return frozenset(self.objects(subject, prop))

    def outgoing(self, subject: str) -> dict[str, list[str]]:
        s = self.resolve(subject)
        out: dict[str, list[str]] = {}
        for t in self.triples:
            if t.subject == s:
                out.setdefault(t.property, []).append(t.object)
        return out

    def has(self, subject: str, prop: str, obj: str) -> bool:
        return obj in self._index.get((subject, prop), ())

    def format_edge(self, subject: str, prop: str) -> str:
        """Render ``Label <property> {Object, ...}`` using display labels."""
        s = self.resolve(subject)
        objs = self.objects(s, prop)
        label = self.nodes[s].label
        if self.nodes[s].cls == "data-type":
            label += " Data Type"
        inner = ", ".join(self.nodes[o].label for o in objs)
        return f"{label} <{prop}> {{{inner}}}" if len(objs) != 1 else f"{label} <{prop}> {self.nodes[objs[0]].label}"

    # -- integrity

    def problems(self) -> list[str]:
        """Dangling endpoints and domain/range violations, one message each."""
        out = []
        for t in self.triples:
            if t.property not in self.properties:
                out.append(f"unknown property {t.property!r}")
                continue
            for end in (t.subject, t.object):
                if end not in self.nodes:
                    out.append(f"triple {t.subject} {t.property} {t.object}: {end!r} is not a node")
            if t.subject not in self.nodes or t.object not in self.nodes:
                continue
            spec = self.properties[t.property]
            if spec.get("domain") and self.nodes[t.subject].cls != spec["domain"]:
                out.append(f"{t.subject!r} outside the domain of {t.property}")
            if spec.get("range") and self.nodes[t.object].cls != spec["range"]:
                out.append(f"{t.object!r} outside the range of {t.property}")
        for alias, target in self.aliases.items():
            if target not in self.nodes:
                out.append(f"alias {alias!r} points to unknown node {target!r}")
        return out

    def with_triples(self, extra: Iterable[Triple]) -> "OntologyGraph":
        return OntologyGraph(self.nodes.values(), [*self.triples, *extra], self.properties, self.aliases, self.version)

    # -- serialization

    def to_dict(self) -> dict:
        nodes = []
        for node in self.nodes.values():
            d = {"name": node.name, "label": node.label, "class": node.cls, "kind": node.kind,
                 "definition": node.definition}
            d.update(node.flags)
            nodes.append(d)
        return {
            "version": self.version,
            "properties": self.properties,
            "aliases": self.aliases,
            "nodes": nodes,
            "triples": [[t.subject, t.property, t.object, t.source] for t in self.triples],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True, ensure_ascii=False) + "\n"


_NODE_KEYS = {"name", "label", "class", "kind", "definition"}


def _nodes_from(raw: Iterable[dict]) -> list[Node]:
    out = []
    for e in raw:
        flags = {k: v for k, v in e.items() if k not in _NODE_KEYS}
        name = normalize(e["name"])
        out.append(Node(name, e.get("label", e["name"]), normalize(e["class"]), e.get("kind", "instance"),
                        e.get("definition", ""), flags))
    return out


def _triples_from(raw: Iterable) -> list[Triple]:
    out = []
    for e in raw:
        if isinstance(e, Mapping):
            out.append(Triple(normalize(e["subject"]), e["property"], normalize(e["object"]), e.get("source", "user")))
        else:
            out.append(Triple(normalize(e[0]), e[1], normalize(e[2]), e[3] if len(e) > 3 else "user"))
    return out


def graph_from_dict(raw: dict, base: OntologyGraph | None = None) -> OntologyGraph:
    """Build a graph, or merge ``raw`` over ``base`` (nodes replaced by name, triples appended)."""
    try:
        nodes = list(base.nodes.values()) if base else []
        by_name = {n.name: i for i, n in enumerate(nodes)}
        for node in _nodes_from(raw.get("nodes", [])):
            if node.name in by_name:
                nodes[by_name[node.name]] = node
            else:
                by_name[node.name] = len(nodes)
                nodes.append(node)
        triples = list(base.triples) if base else []
        drop = {(t.subject, t.property, t.object) for t in _triples_from(raw.get("remove_triples", []))}
        triples = [t for t in triples if (t.subject, t.property, t.object) not in drop]
        triples += _triples_from(raw.get("triples", []))
        properties = dict(base.properties) if base else {}
        properties.update(raw.get("properties", {}))
        aliases = dict(base.aliases) if base else {}
        aliases.update(raw.get("aliases", {}))
        version = raw.get("version", base.version if base else "user")
        if base is not None and "version" in raw:
            version = f"{base.version}+{raw['version']}"
    except (KeyError, TypeError, IndexError) as exc:
        raise InputError(f"malformed knowledge file: {exc!r}") from None
    return OntologyGraph(nodes, triples, properties, aliases, version)


@lru_cache(maxsize=1)
def builtin_graph() -> OntologyGraph:
    text = resources.files("recanon").joinpath("data/knowledge.json").read_text(encoding="utf-8")
    return graph_from_dict(json.loads(text))


def load_graph(override: str | Path | None = None) -> OntologyGraph:
    """The builtin graph, optionally merged with a user knowledge file."""
    g = builtin_graph()
    if override is None:
        return g
    try:
        raw = json.loads(Path(override).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise InputError(f"knowledge file not found: {override}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"knowledge file {override} is not valid JSON: {exc}") from None
    return graph_from_dict(raw, base=g)


def query(g: OntologyGraph, subject: str, prop: str) -> frozenset[str]:
    return g.query(subject, prop)


# ----------------------------------------------------------------------- plans


@dataclass(frozen=True)
class StudyPlan:
    study_design: str
    use_type: str
    data_types: tuple[str, ...] = ()
    attribute_roles: Mapping[str, str] = field(default_factory=dict)
    risk_target: str = "identity-disclosure"
    attack_models: tuple[str, ...] = ()
    privacy_models: Mapping[str, Mapping] = field(default_factory=dict)
    preparation_techniques: tuple[str, ...] = ()
    metrics: tuple[str, ...] = ()

    @classmethod
    def from_dict(cls, raw: Mapping) -> "StudyPlan":
        if not isinstance(raw, Mapping):
            raise InputError("plan must be a JSON object")
        try:
            models = raw.get("privacy_models", {})
            if not isinstance(models, Mapping):
                models = {m: {} for m in models}
            return cls(
                study_design=raw["study_design"],
                use_type=raw["use_type"],
                data_types=tuple(raw.get("data_types", ())),
                attribute_roles=dict(raw.get("attribute_roles", {})),
                risk_target=raw.get("risk_target", "identity-disclosure"),
                attack_models=tuple(raw.get("attack_models", ())),
                privacy_models={k: dict(v or {}) for k, v in models.items()},
                preparation_techniques=tuple(raw.get("preparation_techniques", ())),
                metrics=tuple(raw.get("metrics", ())),
            )
        except KeyError as exc:
            raise InputError(f"plan is missing field {exc.args[0]!r}") from None
        except (TypeError, ValueError, AttributeError) as exc:
            raise InputError(f"malformed plan: {exc}") from None


def load_plan(path: str | Path) -> StudyPlan:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise InputError(f"plan file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"plan file {path} is not valid JSON: {exc}") from None
    return StudyPlan.from_dict(raw)


@dataclass
class CheckResult:
    id: str
    name: str
    passed: bool
    explanation: list[str]
    edges: list[list[str]]

    def to_dict(self) -> dict:
        return {"id": self.id, "name": self.name, "passed": self.passed,
                "explanation": self.explanation, "edges": self.edges}


@dataclass
class ValidationReport:
    checks: list[CheckResult]
    warnings: list[str]
    graph_version: str

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return {"passed": self.passed, "graph_version": self.graph_version,
                "checks": [c.to_dict() for c in self.checks], "warnings": self.warnings}


def _resolve_in(g: OntologyGraph, name: str, classes: tuple[str, ...], field_name: str) -> str:
    key = g.resolve(name)
    if g.nodes[key].cls not in classes:
        raise InputError(f"plan field {field_name!r}: {name!r} is a {g.nodes[key].cls}, expected {' or '.join(classes)}")
    return key


def validate_plan(g: OntologyGraph, plan: StudyPlan) -> ValidationReport:
    """Run the five consistency checks of a study plan against the graph.

    a. each chosen privacy model mitigates the declared risk
    b. each declared attack threatens a risk some chosen model mitigates
    c. each preparation technique is reachable by has-preparation from a chosen model
    d. each metric is a risk metric or has-measure from a declared data type
    e. the use type is has-impact-reachable from a chosen utility metric
    """
    warnings = []
    design_key = normalize(plan.study_design)
    design_key = g.aliases.get(design_key, design_key)
    if design_key not in DESIGNS_SUITED:
        warnings.append(
            f"study design {plan.study_design!r} is not one of {', '.join(DESIGNS_SUITED)}; designs that need to "
            "re-identify participants (trials, case reports) usually cannot rely on anonymization"
        )
    use = _resolve_in(g, plan.use_type, ("use-type",), "use_type")
    dtypes = [_resolve_in(g, x, ("data-type",), "data_types") for x in plan.data_types]
    for attr, role in plan.attribute_roles.items():
        _resolve_in(g, role, ("attribute-type",), f"attribute_roles.{attr}")
    risk = _resolve_in(g, plan.risk_target, ("risk-type",), "risk_target")
    attacks = [_resolve_in(g, x, ("attack-type",), "attack_models") for x in plan.attack_models]
    models = [_resolve_in(g, x, ("privacy-model",), "privacy_models") for x in plan.privacy_models]
    techniques = [
        _resolve_in(g, x, ("preparation-technique", "privacy-method"), "preparation_techniques")
        for x in plan.preparation_techniques
    ]
    metrics = [_resolve_in(g, x, ("information-metric",), "metrics") for x in plan.metrics]
    checks = []

    # a
    expl, edges, ok = [], [], bool(models)
    if not models:
        expl.append("no privacy model chosen")
    for m in models:
        if g.has(m, "mitigates", risk):
            edges.append([m, "mitigates", risk])
            expl.append(f"{m} mitigates {risk}")
        else:
            ok = False
            expl.append(f"{m} does not mitigate {risk} (it mitigates: {', '.join(g.objects(m, 'mitigates')) or 'nothing'})")
    checks.append(CheckResult("a", "privacy models mitigate the risk target", ok, expl, edges))

    # b
    mitigated = {r: m for m in models for r in g.objects(m, "mitigates")}
    expl, edges, ok = [], [], True
    for a in attacks:
        hit = [r for r in g.objects(a, "threatens") if r in mitigated]
        if hit:
            edges += [[a, "threatens", r] for r in hit] + [[mitigated[r], "mitigates", r] for r in hit]
            expl.append(f"{a} threatens {', '.join(hit)}, mitigated by the chosen models")
        else:
            ok = False
            expl.append(f"{a} threatens {', '.join(g.objects(a, 'threatens')) or 'nothing'}; none is mitigated by a chosen model")
    checks.append(CheckResult("b", "attack models are covered", ok, expl, edges))

    # c
    reachable = {t: m for m in models for t in g.objects(m, "has-preparation")}
    expl, edges, ok = [], [], True
    for t in techniques:
        node = g.nodes[t]
        if t in reachable:
            edges.append([reachable[t], "has-preparation", t])
            expl.append(f"{reachable[t]} has-preparation {t}")
            continue
        ok = False
        if not node.is_anonymization:
            expl.append(f"{t} is not an anonymization method and is out of scope")
        elif node.excluded or any(g.has(t, "subclass-of", p) and g.nodes[p].excluded for p in g.nodes):
            expl.append(f"{t} is a disturbance technique; disturbance modifies real values and is excluded")
        else:
            expl.append(f"no chosen privacy model has-preparation {t}")
    checks.append(CheckResult("c", "techniques are prepared by a chosen model", ok, expl, edges))

    # d
    expl, edges, ok = [], [], True
    for m in metrics:
        if g.nodes[m].risk_metric:
            expl.append(f"{m} is a re-identification risk metric")
            continue
        src = [d for d in dtypes if g.has(d, "has-measure", m)]
        if src:
            edges += [[d, "has-measure", m] for d in src]
            expl.append(f"{m} measures {', '.join(src)}")
        else:
            ok = False
            expl.append(f"no declared data type has-measure {m}")
    checks.append(CheckResult("d", "metrics fit the declared data types", ok, expl, edges))

    # e
    utility = [m for m in metrics if not g.nodes[m].risk_metric]
    expl, edges = [], []
    if not utility:
        ok = True
        expl.append("no information-loss metric chosen; the plan only reports risk, so no impact path is needed")
    else:
        src = [m for m in utility if g.has(m, "has-impact", use)]
        ok = bool(src)
        edges = [[m, "has-impact", use] for m in src]
        expl.append(f"{', '.join(src)} has-impact {use}" if ok else f"no chosen metric has-impact {use}")
    checks.append(CheckResult("e", "use type is impacted by a chosen metric", ok, expl, edges))

    return ValidationReport(checks, warnings, g.version)


def explain(g: OntologyGraph, term: str) -> str:
    """Glossary entry for a term, or nearest names when it is unknown."""
    try:
        key = g.resolve(term)
    except UnknownNode as exc:
        return f"unknown term {term!r}. Did you mean: {', '.join(exc.suggestions)}?\n"
    node = g.nodes[key]
    lines = [f"{node.label} ({node.name})", f"  class: {node.cls} ({node.kind})", f"  {node.definition}"]
    if not node.is_anonymization:
        lines.append("  not-anonymization: outside the scope of anonymization")
    if node.excluded:
        lines.append("  excluded: not applied by this engine")
    for prop, objs in g.outgoing(key).items():
        lines.append(f"  {prop}: {', '.join(objs)}")
    return "\n".join(lines) + "\n"


__all__ = [
    "DESIGNS_SUITED",
    "PROPERTIES",
    "CheckResult",
    "Node",
    "OntologyGraph",
    "StudyPlan",
    "Triple",
    "ValidationReport",
    "builtin_graph",
    "explain",
    "graph_from_dict",
    "load_graph",
    "load_plan",
    "normalize",
    "query",
    "validate_plan",
]
