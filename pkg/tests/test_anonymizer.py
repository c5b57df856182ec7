import json
import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from conftest import make_instance
from recanon.anonymizer import (
    EXHAUSTIVE,
    PRUNED_BFS,
    LatticeNode,
    SearchConfig,
    apply,
    audit,
    lattice,
    search,
    sort_key,
)
from recanon.dataset import SUPPRESSED, AttributeSchema, Dataset
from recanon.errors import (
    AttributeNotSensitive,
    EmptyDataset,
    InvalidParameter,
    MissingHierarchy,
    NoSolution,
    StaleNode,
)
from recanon.hierarchy import GeneralizationScheme, categorical_from_rows, interval_from_levels
from recanon.partition import partition
from recanon.privacy_models import DeltaPresence, KAnonymity, LDiversity, TCloseness

AGE = AttributeSchema("age", "discrete", "quasi_identifier")
DX = AttributeSchema("dx", "nominal", "sensitive")
DECADES = {"age": interval_from_levels("age", [[[10 * i, 10 * i + 10, f"{10 * i}-{10 * i + 9}"] for i in range(13)]])}


def _ages(*ages):
    return Dataset([AGE, DX], [(a, "flu" if i % 2 else "covid") for i, a in enumerate(ages)])


@pytest.mark.parametrize("strategy", [PRUNED_BFS, EXHAUSTIVE])
def test_decade_example(strategy):
    d = _ages(30, 31, 30)
    result = search(d, DECADES, SearchConfig([KAnonymity(2)], strategy=strategy))
    best = result.best
    assert best.levels == (1,) and best.suppressed_count == 0
    # level 0 leaves "31" alone, level 1 is one class of 3, level 2 ties on score but is higher
    by_level = {n.levels: n for n in result.nodes}
    assert not by_level[(0,)].satisfied
    assert by_level[(1,)].satisfied and by_level[(1,)].loss_score == 0.0
    dz, dropped = apply(d, best, DECADES)
    assert dz.column("age") == ["30-39"] * 3 and dropped == []
    assert partition(dz).sizes() == [3]


def test_k_one_keeps_the_data():
    d = _ages(30, 31, 45)
    best = search(d, DECADES, SearchConfig([KAnonymity(1)])).best
    assert best.levels == (0,) and best.loss_score == 100.0
    dz, _ = apply(d, best, DECADES)
    assert dz == d


def test_k_above_n():
    d = _ages(30, 31, 45)
    with pytest.raises(NoSolution) as info:
        search(d, DECADES, SearchConfig([KAnonymity(4)]))
    assert info.value.result.best is None
    assert len(info.value.result.nodes) == 3
    assert search(d, DECADES, SearchConfig([KAnonymity(3)])).best.levels == (2,)


@pytest.mark.parametrize("objective", ["gg", "nue", "ig"])
@pytest.mark.parametrize("budget", [1 / 3, Fraction(1, 3), 0.5])
def test_suppressing_the_outlier_beats_generalizing(objective, budget):
    d = _ages(30, 30, 77)
    result = search(d, DECADES, SearchConfig([KAnonymity(2)], budget, objective))
    best = result.best
    assert best.levels == (0,) and best.suppressed_rows == (2,)
    one = next(n for n in result.nodes if n.levels == (1,))
    # scheme (1) also has to drop "70-79" and keeps nothing more; the tie goes to the lower node
    assert one.satisfied and one.suppressed_rows == (2,)
    assert best.losses["gg_mean"] == one.losses["gg_mean"] == 100.0
    dz, dropped = apply(d, best, DECADES)
    assert dropped == [2] and dz.n == d.n - 1 and dz.column("age") == [30, 30]


def test_no_budget_means_no_suppression():
    d = _ages(30, 30, 77)
    best = search(d, DECADES, SearchConfig([KAnonymity(2)])).best
    assert best.levels == (2,) and best.suppressed_count == 0


def test_greedy_suppression_stops_at_the_budget():
    # classes of size 1 (45) and 2 (60s); budget of 2 rows drops only the smallest
    d = _ages(30, 30, 30, 45, 61, 62)
    cfg = SearchConfig([KAnonymity(3)], suppression_budget=2 / 6)
    node = next(n for n in search(d, DECADES, cfg).nodes if n.levels == (1,))
    assert not node.satisfied and node.suppressed_rows == (3,)


def test_everything_suppressed_is_not_a_solution():
    d = _ages(1, 25, 77)
    cfg = SearchConfig([KAnonymity(2)], suppression_budget=1.0, strategy=EXHAUSTIVE)
    result = search(d, DECADES, cfg)
    low = [n for n in result.nodes if n.levels in ((0,), (1,))]
    assert all(not n.satisfied and n.note for n in low)
    assert result.best.levels == (2,)


def test_l_diversity_and_t_closeness_in_search():
    sex = AttributeSchema("sex", "nominal", "quasi_identifier")
    d = Dataset([sex, DX], [("M", "flu"), ("M", "flu"), ("F", "flu"), ("F", "covid")])
    hs = {"sex": categorical_from_rows("sex", [["M", "person"], ["F", "person"]])}
    res = search(d, hs, SearchConfig([KAnonymity(2), LDiversity(2, "dx")]))
    assert res.best.levels == (1,)
    # each sex class sits 0.25 from the overall distribution
    assert search(d, hs, SearchConfig([TCloseness(0.25, "dx")])).best.levels == (0,)
    assert search(d, hs, SearchConfig([TCloseness(0.2, "dx")])).best.levels == (1,)
    assert not SearchConfig([TCloseness(0.2, "dx")]).prunable


def test_delta_presence_in_search():
    sex = AttributeSchema("sex", "nominal", "quasi_identifier")
    d = Dataset([sex], [("M",), ("F",)])
    pop = Dataset([sex], [("M",)] * 3 + [("F",)] * 1)
    hs = {"sex": categorical_from_rows("sex", [["M", "person"], ["F", "person"]])}
    # at level 0 the F class is fully present; at level 1 the presence is 2/4
    res = search(d, hs, SearchConfig([DeltaPresence(0.0, 0.5, pop)]))
    assert res.best.levels == (1,)


def test_apply_refuses_other_data():
    d = _ages(30, 31, 30)
    best = search(d, DECADES, SearchConfig([KAnonymity(2)])).best
    with pytest.raises(StaleNode):
        apply(_ages(30, 31, 31), best, DECADES)


def test_input_validation():
    d = _ages(30, 31)
    with pytest.raises(MissingHierarchy):
        search(d, {}, SearchConfig([KAnonymity(2)]))
    with pytest.raises(EmptyDataset):
        search(Dataset([AGE, DX], []), DECADES, SearchConfig([KAnonymity(2)]))
    with pytest.raises(AttributeNotSensitive):
        search(d, DECADES, SearchConfig([LDiversity(2, "age")]))
    for bad in ({"suppression_budget": 1.5}, {"objective": "speed"}, {"strategy": "dfs"}, {"workers": 0}):
        with pytest.raises(InvalidParameter):
            SearchConfig([KAnonymity(2)], **bad)
    with pytest.raises(InvalidParameter):
        SearchConfig([])


def test_lattice_order():
    inst = make_instance(5, n=10, n_qi=2, max_lattice=None)
    vs = lattice(inst.data, inst.hierarchies)
    assert vs[0] == (0, 0) and len(vs) == inst.lattice_size
    assert vs == sorted(vs, key=lambda v: (sum(v), v))


def test_report_is_json_ready():
    d = _ages(30, 31, 30)
    result = search(d, DECADES, SearchConfig([KAnonymity(2)]))
    text = json.dumps(result.to_dict(), sort_keys=True)
    back = json.loads(text)
    assert back["best"]["scheme"] == {"age": 1}
    assert len(back["nodes"]) == 3


def test_workers_give_the_same_answer():
    inst = make_instance(99, n=150, n_qi=3, max_lattice=200)
    cfg1 = SearchConfig([KAnonymity(3)], 0.05, "nue", EXHAUSTIVE, workers=1)
    cfg4 = SearchConfig([KAnonymity(3)], 0.05, "nue", EXHAUSTIVE, workers=4)
    a = search(inst.data, inst.hierarchies, cfg1)
    b = search(inst.data, inst.hierarchies, cfg4)
    assert [n.to_dict() for n in a.nodes] == [n.to_dict() for n in b.nodes]


def test_avg_rr_tiebreak_objective():
    names = ("a", "b")
    low_risk = LatticeNode(GeneralizationScheme(names, (1, 1)), evaluated=True, loss_score=50.0, average_rr=20.0)
    high_risk = LatticeNode(GeneralizationScheme(names, (0, 1)), evaluated=True, loss_score=50.0, average_rr=40.0)
    worse = LatticeNode(GeneralizationScheme(names, (0, 0)), evaluated=True, loss_score=49.0, average_rr=1.0)
    nodes = [worse, high_risk, low_risk]
    assert min(nodes, key=lambda n: sort_key(n, "nue")) is high_risk
    assert min(nodes, key=lambda n: sort_key(n, "nue+avg_rr")) is low_risk
    assert not SearchConfig([KAnonymity(2)], objective="nue+avg_rr").prunable
    d = _ages(30, 30, 31, 31, 45, 46)
    assert search(d, DECADES, SearchConfig([KAnonymity(2)], objective="nue+avg_rr")).best.levels == (1,)


@settings(max_examples=25)
@given(
    seed=st.integers(0, 2**32 - 1),
    k=st.integers(2, 5),
    budget=st.sampled_from([0.0, 0.03, 0.1]),
    objective=st.sampled_from(["nue", "ig", "gg"]),
)
def test_pruned_matches_oracle(seed, k, budget, objective):
    inst = make_instance(seed, n=40, n_qi=2, max_lattice=60)
    expected = oracles.best_k_score(inst, k, budget, objective)
    cfg = SearchConfig([KAnonymity(k)], budget, objective, PRUNED_BFS)
    if expected is None:
        with pytest.raises(NoSolution):
            search(inst.data, inst.hierarchies, cfg)
        return
    best = search(inst.data, inst.hierarchies, cfg).best
    assert math.isclose(best.loss_score, expected, rel_tol=1e-12, abs_tol=1e-12)
    dz, dropped = apply(inst.data, best, inst.hierarchies)
    assert all(audit(dz, best, cfg, inst.hierarchies))
    assert len(dropped) <= oracles.budget_rows(budget, inst.data.n)
    assert SUPPRESSED not in dz.column("s")
