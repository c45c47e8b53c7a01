import pytest
from hypothesis import given, strategies as st

from mingts.corpus import gold_predictions, load_predictions, parse_aste_file, triplet
from mingts.metrics import (
    ElementCombo,
    MatchCounts,
    Subtask,
    combo_metrics,
    match_exact,
    metrics_report,
    prf1,
    subtask_metrics,
    triplet_metrics,
)


@pytest.fixture
def fixture_sets(fixtures_dir):
    gold = parse_aste_file((fixtures_dir / "metrics_gold.txt").read_text())
    pred = load_predictions((fixtures_dir / "metrics_pred.tsv").read_text(), gold)
    return gold, pred


# (num_gold, num_pred, num_matched) counted by hand from the fixture files
HAND_COUNTS = {
    ElementCombo.AOS: (6, 6, 3),
    ElementCombo.AO: (6, 6, 4),
    ElementCombo.AS: (6, 6, 4),
    ElementCombo.OS: (5, 4, 3),
    ElementCombo.A: (6, 6, 5),
    ElementCombo.O: (5, 4, 4),
    ElementCombo.S: (4, 3, 3),
}

HAND_METRICS = {
    ElementCombo.AOS: (0.5, 0.5, 0.5),
    ElementCombo.AO: (2 / 3, 2 / 3, 2 / 3),
    ElementCombo.AS: (2 / 3, 2 / 3, 2 / 3),
    ElementCombo.OS: (0.75, 0.6, 2 / 3),
    ElementCombo.A: (5 / 6, 5 / 6, 5 / 6),
    ElementCombo.O: (1.0, 0.8, 8 / 9),
    ElementCombo.S: (1.0, 0.75, 6 / 7),
}


@pytest.mark.parametrize("combo", list(ElementCombo))
def test_combo_fixture_counts(fixture_sets, combo):
    gold, pred = fixture_sets
    m = combo_metrics(gold, pred, combo)
    c = m.counts
    assert (c.num_gold, c.num_pred, c.num_matched) == HAND_COUNTS[combo]
    assert m.as_tuple() == pytest.approx(HAND_METRICS[combo], abs=1e-12)


def test_subtasks_alias_combos(fixture_sets):
    gold, pred = fixture_sets
    assert subtask_metrics(gold, pred, Subtask.AE) == combo_metrics(gold, pred, ElementCombo.A)
    assert subtask_metrics(gold, pred, Subtask.OE) == combo_metrics(gold, pred, ElementCombo.O)
    assert subtask_metrics(gold, pred, Subtask.AOPE) == combo_metrics(gold, pred, ElementCombo.AO)


AE_GOLD = """the food and the staff were great .####[([1], [6], 'POS'), ([4], [6], 'POS')]
the pizza was cold but the wine was fine .####[([1], [3], 'NEG'), ([6], [8], 'POS')]
the decor was okay .####[([1], [3], 'NEU')]
"""
# predicted aspects: food, staff (s0); pizza (s1); was (s2, wrong) -> 3 of 4 correct, 5 gold
AE_PRED = """0\t[([1], [6], 'POS'), ([4], [6], 'POS')]
1\t[([1], [3], 'NEG')]
2\t[([2], [3], 'NEU')]
"""


def test_ae_fixture():
    gold = parse_aste_file(AE_GOLD)
    pred = load_predictions(AE_PRED, gold)
    m = subtask_metrics(gold, pred, Subtask.AE)
    assert m.precision == pytest.approx(0.75, abs=1e-12)
    assert m.recall == pytest.approx(0.6, abs=1e-12)
    assert m.f1 == pytest.approx(2 / 3, abs=1e-12)


def test_polarity_combo_dedups():
    gold = parse_aste_file("a b c d e f####[([0], [1], 'POS'), ([2], [3], 'POS')]")
    pred = {"0": frozenset({triplet(0, 1, "POS"), triplet(4, 5, "NEG"), triplet(2, 3, "POS")})}
    m = combo_metrics(gold, pred, ElementCombo.S)
    assert (m.precision, m.recall) == (0.5, 1.0)
    assert m.f1 == pytest.approx(2 / 3)


def test_polarity_errors_only_hit_aos():
    gold = parse_aste_file("x y z w####[([0], [1], 'POS'), ([2], [3], 'NEG')]")
    pred = {"0": frozenset({triplet(0, 1, "NEG"), triplet(2, 3, "NEU")})}
    assert subtask_metrics(gold, pred, Subtask.AOPE).as_tuple() == (1.0, 1.0, 1.0)
    assert combo_metrics(gold, pred, ElementCombo.AOS).f1 == 0.0


def test_aos_not_above_ao_on_fixture(fixture_sets):
    gold, pred = fixture_sets
    aos = combo_metrics(gold, pred, ElementCombo.AOS)
    ao = combo_metrics(gold, pred, ElementCombo.AO)
    assert aos.precision <= ao.precision and aos.recall <= ao.recall


def test_aos_matches_triplet_metrics(fixture_sets):
    gold, pred = fixture_sets
    assert combo_metrics(gold, pred, ElementCombo.AOS) == triplet_metrics(gold, pred)


def test_gold_and_disjoint_predictions(fixture_sets):
    gold, _ = fixture_sets
    report = metrics_report(gold, gold_predictions(gold))
    for section in (report["combos"], report["subtasks"]):
        for m in section.values():
            assert (m["precision"], m["recall"], m["f1"]) == (1.0, 1.0, 1.0)
    empty = metrics_report(gold, {s.id: frozenset() for s in gold})
    assert empty["triplet"]["f1"] == 0.0


def test_parallel_equals_serial(fixture_sets):
    gold, pred = fixture_sets
    for combo in ElementCombo:
        assert combo_metrics(gold, pred, combo, parallel=True) == combo_metrics(gold, pred, combo)


def test_unknown_prediction_ids_rejected(fixture_sets):
    gold, _ = fixture_sets
    with pytest.raises(ValueError, match="unknown"):
        triplet_metrics(gold, {"99": frozenset()})


def test_zero_denominators():
    assert prf1(MatchCounts(0, 0, 0)).as_tuple() == (0.0, 0.0, 0.0)
    assert prf1(MatchCounts(3, 0, 0)).as_tuple() == (0.0, 0.0, 0.0)
    with pytest.raises(ValueError):
        MatchCounts(1, 1, 2)


def test_match_exact_uses_sets():
    assert match_exact([1, 1, 2], [2, 2, 3]) == MatchCounts(2, 2, 1)


@given(st.integers(1, 50), st.integers(1, 50), st.integers(0, 50), st.integers(1, 9))
def test_prf1_scale_free(g, p, m, k):
    m = min(m, g, p)
    a = prf1(MatchCounts(g, p, m))
    b = prf1(MatchCounts(g * k, p * k, m * k))
    assert a.as_tuple() == pytest.approx(b.as_tuple(), abs=1e-12)
    assert 0.0 <= a.f1 <= 1.0
