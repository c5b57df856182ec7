import json
import subprocess
import sys

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import TOY
from recanon.errors import InputError, UnknownNode, UnknownProperty
from recanon.ontology import (
    StudyPlan,
    Triple,
    builtin_graph,
    explain,
    graph_from_dict,
    load_graph,
    load_plan,
    normalize,
    query,
    validate_plan,
)

G = builtin_graph()


def _plan(toy_dir, **changes):
    raw = json.loads((toy_dir / "plan.json").read_text())
    raw.update(changes)
    return StudyPlan.from_dict(raw)


def test_example_queries():
    assert query(G, "k-anonymity", "has-preparation") == {"suppression", "grouping"}
    assert query(G, "Nominal", "has-measure") == {"nue"}
    assert query(G, "NUE", "has-impact") == {"classification"}


def test_domain_rules():
    assert query(G, "cohort", "has-preparation") == frozenset()
    with pytest.raises(UnknownProperty):
        query(G, "nue", "mitigates")
    with pytest.raises(UnknownProperty):
        query(G, "k-anonymity", "is-cool")


def test_unknown_node_suggests():
    with pytest.raises(UnknownNode) as info:
        G.resolve("k-anonimity")
    assert "k-anonymity" in info.value.suggestions


def test_aliases():
    assert G.resolve("Re-identification") == "identity-disclosure"
    assert G.resolve("quasi identifier") == "indirect-identifier"
    assert G.resolve("t-closeness") == G.resolve("t-approximation")
    assert G.resolve("delta-presence") == G.resolve("o-presence")
    assert normalize("  Average_RR ") == "average-rr"


def test_edge_text():
    assert G.format_edge("k-anonymity", "has-preparation") == "k-Anonymity <has-preparation> {Suppression, Grouping}"
    assert G.format_edge("nominal", "has-measure") == "Nominal Data Type <has-measure> NUE"
    assert G.format_edge("nue", "has-impact") == "NUE <has-impact> Classification"


def test_graph_is_closed():
    assert G.problems() == []
    for t in G.triples:
        spec = G.properties[t.property]
        assert t.subject in G.nodes and t.object in G.nodes
        if spec.get("domain"):  # subclass-of is untyped
            assert G.nodes[t.subject].cls == spec["domain"]
            assert G.nodes[t.object].cls == spec["range"]


def test_editorial_edges_are_marked():
    sources = {t.source for t in G.triples if t.property in ("mitigates", "threatens")}
    assert sources == {"editorial"}
    core = {(t.subject, t.property, t.object) for t in G.triples if t.source == "core"}
    assert ("k-anonymity", "has-preparation", "suppression") in core
    assert ("nue", "has-impact", "classification") in core


def test_out_of_scope_nodes_are_flagged():
    for name in ("pseudonymization", "encryption", "de-identification"):
        assert not G.node(name).is_anonymization
    assert G.node("disturbance").excluded
    assert G.node("rr").risk_metric and not G.node("nue").risk_metric


def test_serialization_is_stable():
    code = "from recanon.ontology import builtin_graph; import sys; sys.stdout.write(builtin_graph().to_json())"
    runs = {subprocess.run([sys.executable, "-c", code], capture_output=True, check=True).stdout for _ in range(2)}
    assert len(runs) == 1
    assert runs.pop().decode() == G.to_json()
    again = graph_from_dict(json.loads(G.to_json()))
    assert again.to_json() == G.to_json()


def test_instance_plan_passes(toy_dir):
    report = validate_plan(G, load_plan(toy_dir / "plan.json"))
    assert report.passed and report.warnings == []
    assert [c.id for c in report.checks] == list("abcde")
    assert report.to_dict()["passed"] is True


def test_presence_model_does_not_cover_identity_disclosure(toy_dir):
    plan = _plan(toy_dir, privacy_models={"o-presence": {}}, risk_target="identity-disclosure")
    report = validate_plan(G, plan)
    a = report.checks[0]
    assert not a.passed
    assert "association-disclosure" in " ".join(a.explanation)


def test_disturbance_technique_fails(toy_dir):
    report = validate_plan(G, _plan(toy_dir, preparation_techniques=["disturbance"]))
    c = next(c for c in report.checks if c.id == "c")
    assert not c.passed and "disturbance" in " ".join(c.explanation)
    report = validate_plan(G, _plan(toy_dir, preparation_techniques=["differential-privacy"]))
    c = next(c for c in report.checks if c.id == "c")
    assert not c.passed and "disturbance" in " ".join(c.explanation)


def test_pseudonymization_is_out_of_scope(toy_dir):
    report = validate_plan(G, _plan(toy_dir, preparation_techniques=["pseudonymization"]))
    c = next(c for c in report.checks if c.id == "c")
    assert not c.passed and "not an anonymization method" in " ".join(c.explanation)


def test_metric_and_use_checks(toy_dir):
    ok = validate_plan(G, _plan(toy_dir, data_types=["nominal"], metrics=["nue", "rr"]))
    assert ok.passed
    report = validate_plan(G, _plan(toy_dir, data_types=["continuous"], metrics=["nue"]))
    assert not next(c for c in report.checks if c.id == "d").passed
    report = validate_plan(G, _plan(toy_dir, data_types=["nominal"], metrics=["nue"], use_type="regression"))
    checks = {c.id: c.passed for c in report.checks}
    assert checks["d"] and not checks["e"]


def test_unlisted_design_only_warns(toy_dir):
    report = validate_plan(G, _plan(toy_dir, study_design="clinical-trial-design"))
    assert report.passed and report.warnings


def test_plan_field_errors(toy_dir, tmp_path):
    with pytest.raises(InputError):
        validate_plan(G, _plan(toy_dir, risk_target="k-anonymity"))
    with pytest.raises(UnknownNode):
        validate_plan(G, _plan(toy_dir, attack_models=["burglar"]))
    with pytest.raises(InputError):
        StudyPlan.from_dict({"use_type": "classification"})
    bad = tmp_path / "plan.json"
    bad.write_text("{not json")
    with pytest.raises(InputError):
        load_plan(bad)


def test_override_merges(tmp_path, toy_dir):
    extra = {
        "version": "site-1",
        "nodes": [{"name": "swapping", "label": "Swapping", "class": "preparation-technique"}],
        "triples": [["k-anonymity", "has-preparation", "swapping"]],
        "remove_triples": [["k-anonymity", "has-preparation", "grouping"]],
    }
    p = tmp_path / "kb.json"
    p.write_text(json.dumps(extra))
    g = load_graph(p)
    assert query(g, "k-anonymity", "has-preparation") == {"suppression", "swapping"}
    assert g.version.endswith("+site-1")
    assert query(G, "k-anonymity", "has-preparation") == {"suppression", "grouping"}
    p.write_text(json.dumps({"triples": [["k-anonymity", "has-measure", "nue"]]}))
    with pytest.raises(InputError):
        load_graph(p)


def test_explain():
    text = explain(G, "k-anonymity")
    assert "has-preparation: suppression, grouping" in text
    text = explain(G, "pseudonymization")
    assert "not-anonymization" in text
    text = explain(G, "zzz")
    assert text.startswith("unknown term 'zzz'. Did you mean:")


def _valid_triples():
    by_cls = {}
    for n in G.nodes.values():
        by_cls.setdefault(n.cls, []).append(n.name)
    out = []
    for prop, spec in sorted(G.properties.items()):
        for s in sorted(by_cls.get(spec["domain"], [])):
            for o in sorted(by_cls.get(spec["range"], [])):
                out.append(Triple(s, prop, o, "test"))
    return out


VALID = _valid_triples()
PASSING = [
    {},
    {"data_types": ["nominal"], "metrics": ["nue", "rr"]},
    {"privacy_models": {"l-diversity": {}, "t-closeness": {}}, "risk_target": "attribute-disclosure",
     "attack_models": ["prosecutor"]},
]


@given(extra=st.lists(st.sampled_from(VALID), max_size=40), which=st.integers(0, len(PASSING) - 1))
def test_adding_edges_never_breaks_a_passing_plan(extra, which):
    plan = _plan(TOY, **PASSING[which])
    assert validate_plan(G, plan).passed
    assert validate_plan(G.with_triples(extra), plan).passed
