from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import make_instance
from recanon.dataset import AttributeSchema, Dataset
from recanon.errors import AttributeNotSensitive, ClassNotInPopulation, InvalidParameter, SchemaMismatch
from recanon.hierarchy import GeneralizationScheme, categorical_from_rows, generalize
from recanon.partition import group_keys, partition
from recanon.privacy_models import (
    DeltaPresence,
    KAnonymity,
    LDiversity,
    TCloseness,
    check_delta_presence,
    check_k_anonymity,
    check_l_diversity,
    check_t_closeness,
    class_distances,
    distribution,
    evaluate,
    ordered_emd,
    presence_probabilities,
    total_variation,
)


def _sizes(*sizes):
    keys = [(f"c{c}",) for c, s in enumerate(sizes) for _ in range(s)]
    return group_keys(keys, ["q"])


def test_k_anonymity_examples():
    part = _sizes(2, 3)
    assert check_k_anonymity(part, 2).satisfied
    v = check_k_anonymity(part, 3)
    assert not v and v.violating_classes == (0,) and v.witness == (2,)
    assert check_k_anonymity(_sizes(1, 1, 1), 1).satisfied


@pytest.mark.parametrize("k", [0, -1, 2.5, True])
def test_bad_k(k):
    with pytest.raises(InvalidParameter):
        check_k_anonymity(_sizes(2), k)


def _table(rows, sensitive_type="nominal", order=None):
    schema = [
        AttributeSchema("q", "nominal", "quasi_identifier"),
        AttributeSchema("s", sensitive_type, "sensitive", order=order),
    ]
    from recanon.dataset import read_csv_text

    text = "q,s\n" + "".join(f"{q},{s}\n" for q, s in rows)
    return read_csv_text(text, schema)


def test_l_diversity_examples():
    d = _table([("a", "flu"), ("a", "flu")])
    assert not check_l_diversity(partition(d), d, 2, "s")
    d = _table([("a", "flu"), ("a", "covid")])
    assert check_l_diversity(partition(d), d, 2, "s")
    assert check_l_diversity(partition(d), d, 1, "s")


def test_l_diversity_ignores_missing():
    d = _table([("a", "flu"), ("a", "")])
    assert not check_l_diversity(partition(d), d, 2, "s")


def test_sensitive_role_required():
    d = _table([("a", "flu")])
    with pytest.raises(AttributeNotSensitive):
        check_l_diversity(partition(d), d, 2, "q")


def test_total_variation_example():
    half = Fraction(1, 2)
    assert total_variation({"A": half, "B": half}, {"A": Fraction(1)}) == half


def test_t_closeness_examples():
    d = _table([("x", "A"), ("y", "B")])
    part = partition(d)
    assert class_distances(part, d, "s") == [Fraction(1, 2), Fraction(1, 2)]
    assert not check_t_closeness(part, d, 0.4, "s")
    assert check_t_closeness(part, d, 0.5, "s")

    same = _table([("x", "A"), ("x", "B"), ("y", "A"), ("y", "B")])
    assert check_t_closeness(partition(same), same, 0.0, "s")

    one = _table([("x", "A"), ("x", "B"), ("x", "B")])
    assert class_distances(partition(one), one, "s") == [0]


def test_ordered_distance():
    order = ["low", "mid", "high"]
    # all mass at one end vs the other end: the whole line is crossed
    assert ordered_emd({"low": Fraction(1)}, {"high": Fraction(1)}, order) == 1
    assert ordered_emd({"low": Fraction(1)}, {"mid": Fraction(1)}, order) == Fraction(1, 2)
    d = _table([("x", "low"), ("y", "high")], "ordinal", order)
    assert class_distances(partition(d), d, "s") == [Fraction(1, 2), Fraction(1, 2)]


def test_numeric_sensitive_uses_ordered_distance():
    d = _table([("x", 1), ("x", 2), ("y", 10)], "discrete")
    # support {1, 2, 10}; class x = {1:.5, 2:.5}, overall = thirds
    assert class_distances(partition(d), d, "s")[0] == Fraction(1, 6) / 2 + Fraction(1, 3) / 2


def test_class_without_sensitive_values():
    d = _table([("x", ""), ("y", "A")])
    assert class_distances(partition(d), d, "s") == [1, 0]
    d = _table([("x", ""), ("y", "")])
    assert class_distances(partition(d), d, "s") == [0, 0]


def test_distribution_drops_missing():
    assert distribution(["a", None, "a", "b"]) == {"a": Fraction(2, 3), "b": Fraction(1, 3)}


def test_t_parameter_bounds():
    with pytest.raises(InvalidParameter):
        TCloseness(1.5, "s")
    with pytest.raises(InvalidParameter):
        LDiversity(0, "s")
    with pytest.raises(InvalidParameter):
        DeltaPresence(0.6, 0.5, None)


def _population(n_m, n_f):
    schema = [AttributeSchema("sex", "nominal", "quasi_identifier")]
    return Dataset(schema, [("M",)] * n_m + [("F",)] * n_f)


def test_delta_presence_examples():
    h = {"sex": categorical_from_rows("sex", [["M", "person"], ["F", "person"]])}
    zero = GeneralizationScheme(("sex",), (0,))
    sample = partition(_population(2, 0))
    pop = _population(10, 5)
    assert presence_probabilities(sample, pop, zero, h) == [Fraction(1, 5)]
    assert check_delta_presence(sample, pop, zero, h, 0.0, 0.5)
    full = partition(_population(10, 0))
    assert not check_delta_presence(full, pop, zero, h, 0.0, 0.9)
    assert check_delta_presence(full, pop, zero, h, 0.0, 1.0)
    # generalizing both sides dilutes the class
    one = GeneralizationScheme(("sex",), (1,))
    gen = partition(generalize(_population(10, 0), one, h))
    assert presence_probabilities(gen, pop, one, h) == [Fraction(10, 15)]


def test_delta_presence_errors():
    h = {"sex": categorical_from_rows("sex", [["M", "person"], ["F", "person"]])}
    zero = GeneralizationScheme(("sex",), (0,))
    with pytest.raises(ClassNotInPopulation):
        presence_probabilities(partition(_population(1, 1)), _population(3, 0), zero, h)
    other = Dataset([AttributeSchema("age", "discrete", "quasi_identifier")], [(3,)])
    with pytest.raises(SchemaMismatch):
        presence_probabilities(partition(_population(1, 0)), other, zero, h)


def test_evaluate_dispatch():
    d = _table([("x", "A"), ("x", "B"), ("y", "A")])
    part = partition(d)
    assert not evaluate(KAnonymity(2), part, d)
    assert not evaluate(LDiversity(2, "s"), part, d)
    assert evaluate(TCloseness(1.0, "s"), part, d)
    assert evaluate(KAnonymity(1), part, d).to_dict() == {"model": "k-anonymity(k=1)", "satisfied": True, "violations": []}


@given(seed=st.integers(0, 2**32 - 1), data=st.data())
def test_k_and_l_are_anti_monotone(seed, data):
    inst = make_instance(seed, n=50, n_qi=3, max_lattice=None)
    names = tuple(inst.hierarchies)
    tops = [h.levels for h in inst.hierarchies.values()]
    z = [data.draw(st.integers(0, t)) for t in tops]
    z2 = [data.draw(st.integers(a, t)) for a, t in zip(z, tops)]
    k, l = data.draw(st.integers(1, 8)), data.draw(st.integers(1, 4))
    lo = generalize(inst.data, GeneralizationScheme(names, z), inst.hierarchies)
    hi = generalize(inst.data, GeneralizationScheme(names, z2), inst.hierarchies)
    if check_k_anonymity(partition(lo), k):
        assert check_k_anonymity(partition(hi), k)
    if check_l_diversity(partition(lo), lo, l, "s"):
        assert check_l_diversity(partition(hi), hi, l, "s")


@given(seed=st.integers(0, 2**32 - 1), levels=st.lists(st.integers(0, 3), min_size=2, max_size=2))
def test_t_closeness_extremes(seed, levels):
    inst = make_instance(seed, n=40, n_qi=2, max_lattice=None)
    names = tuple(inst.hierarchies)
    z = [min(v, h.levels) for v, h in zip(levels, inst.hierarchies.values())]
    dz = generalize(inst.data, GeneralizationScheme(names, z), inst.hierarchies)
    part = partition(dz)
    dist = class_distances(part, dz, "s")
    assert all(0 <= x <= 1 for x in dist)
    assert check_t_closeness(part, dz, 1.0, "s")
    overall = distribution(dz.column("s"))
    exact = all(distribution(dz.records[i][-1] for i in c.member_rows) == overall for c in part.classes)
    assert bool(check_t_closeness(part, dz, 0.0, "s")) == exact
