import json
import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from chemtune.evaluation import (
    Prediction,
    ReferenceSet,
    ScoreError,
    accuracy,
    bleu,
    corpus_bleu,
    em_formula,
    em_iupac,
    em_smiles,
    extract_answer,
    fts,
    meteor_lite,
    rmse,
    rouge,
    score_task,
    top_k_em,
    validity_rate,
)
from chemtune.generate import random_rewrite

from conftest import CORPUS, FIXTURES

EVAL = FIXTURES / "eval"


def load_fixture(name):
    preds = [Prediction.from_dict(json.loads(l)) for l in (EVAL / f"{name}_predictions.jsonl").open()]
    refs = {}
    for line in (EVAL / f"{name}_references.jsonl").open():
        r = ReferenceSet.from_dict(json.loads(line))
        refs[r.record_id] = r
    expected = json.loads((EVAL / f"{name}_expected.json").read_text())
    return preds, refs, expected


def fixture_mismatches(name):
    """Metric or count names whose value differs from the hand-computed report."""
    preds, refs, exp = load_fixture(name)
    report = score_task(preds, refs, exp["task"], k=exp.get("k", 1), train_mean=exp.get("train_mean"))
    bad = [k for k, v in exp["metrics"].items() if not math.isclose(report.metrics[k], v, abs_tol=1e-9)]
    bad += [k for k, v in exp["counts"].items() if report.counts[k] != v]
    return bad


# --- extraction -------------------------------------------------------------------------


@pytest.mark.parametrize(
    "raw, kind, want",
    [
        ("<SMILES>CCO</SMILES>", "smiles", "CCO"),
        ("<SMILES> CCO </SMILES>", "smiles", "CCO"),
        ("The product is CCOC(C)=O .", "smiles", "CCOC(C)=O"),
        ("I cannot determine this.", "smiles", None),
        ("<SMILES>C1CC</SMILES>", "smiles", "C1CC"),
        ("Formula: C6H12O6.", "formula", "C6H12O6"),
        ("<MOLFORMULA>C2H6O</MOLFORMULA>", "formula", "C2H6O"),
        ("The log solubility is about -0.77 units", "number", "-0.77"),
        ("<NUMBER>1e-3</NUMBER>", "number", "1e-3"),
        ("Yes, it can.", "boolean", "Yes"),
        ("<BOOLEAN>no</BOOLEAN>", "boolean", "No"),
        ("I think not.", "boolean", None),
        ("  ethanol  ", "iupac", "ethanol"),
        ("", "text", None),
    ],
)
def test_extract_answer(raw, kind, want):
    assert extract_answer(raw, kind) == want


def test_extract_prefers_tag_over_prose():
    assert extract_answer("CCCCCCCC is wrong, <SMILES>CO</SMILES>", "smiles") == "CO"


def test_extract_unknown_kind():
    with pytest.raises(ValueError):
        extract_answer("x", "protein")


# --- exact match -------------------------------------------------------------------------


def test_em_smiles():
    assert em_smiles("OCC", ["CCO"])
    assert em_smiles("CCO", ["CC", "OCC"])
    assert not em_smiles("CCO", ["COC"])
    assert not em_smiles(None, ["CCO"])
    assert not em_smiles("C1CC", ["C1CC"])
    assert em_smiles("CCO;[Na+]", ["[Na+].CCO"])


def test_em_formula_ignores_order():
    assert em_formula("H12C6O6", ["C6H12O6"])
    assert not em_formula("C6H12O5", ["C6H12O6"])
    assert not em_formula("c6h12o6", ["C6H12O6"])
    assert not em_formula(None, ["C6H12O6"])


def test_em_iupac_normalizes_case_and_spacing():
    assert em_iupac("Ethanol", ["ethanol"])
    assert em_iupac(" ethanol ", ["ethanol"])
    assert not em_iupac("methanol", ["ethanol"])


def test_top_k_and_validity():
    preds = [Prediction("a", ["<SMILES>CC</SMILES>", "<SMILES>OCC</SMILES>"]), Prediction("b", ["<SMILES>C1CC</SMILES>"])]
    refs = {"a": ["CCO"], "b": ["CCC"]}
    assert top_k_em(preds, refs, 1, "smiles") == 0.0
    assert top_k_em(preds, refs, 2, "smiles") == 0.5
    assert validity_rate(preds) == 0.5
    with pytest.raises(ValueError):
        top_k_em(preds, refs, 0, "smiles")


# --- similarity, regression, classification ------------------------------------------


def test_fts_values():
    assert fts("CCO", "OCC") == 1.0
    assert fts("CCO", "CCC") == pytest.approx(3 / 7, abs=1e-12)
    assert fts("CCO", "CCC", "path") == pytest.approx(1 / 3, abs=1e-12)
    assert fts("C1CC", "CCC") == 0.0
    assert fts(None, "CCC") == 0.0
    with pytest.raises(ValueError):
        fts("C", "C", "maccs")


def test_rmse_and_accuracy():
    assert rmse([1, 3], [1, 1]) == pytest.approx(math.sqrt(2), abs=1e-12)
    assert rmse([0.5], [0.5]) == 0.0
    assert accuracy([True, False, None], [True, True, False]) == pytest.approx(1 / 3)
    with pytest.raises(ValueError):
        rmse([1], [1, 2])
    with pytest.raises(ValueError):
        accuracy([], [])


# --- text metrics --------------------------------------------------------------------------


def test_text_metrics_partial_overlap():
    assert rouge("a b c", "a c d", "1") == pytest.approx(2 / 3)
    assert rouge("a b c", "a c d", "2") == 0.0
    assert rouge("a b c", "a c d", "L") == pytest.approx(2 / 3)
    assert meteor_lite("a b c", "a c d") == pytest.approx(0.625, abs=1e-12)


@pytest.mark.parametrize("text", ["the molecule is an acid", "a", "It is a base ."])
def test_text_metrics_identity(text):
    assert bleu(text, text) == 1.0
    assert corpus_bleu([text], [text]) == 1.0
    for v in ("1", "2", "L"):
        assert rouge(text, text, v) == 1.0
    assert meteor_lite(text, text) == 1.0


def test_text_metrics_disjoint():
    assert bleu("x y z", "p q r") == 0.0
    assert rouge("x y z", "p q r", "L") == 0.0
    assert meteor_lite("x y z", "p q r") == 0.0
    assert meteor_lite("", "p q r") == 0.0


def test_bleu_brevity_penalty():
    # 4 of 4 unigrams and 3 of 3 bigrams match, candidate 4 vs reference 8.
    assert bleu("a b c d", "a b c d e f g h", 2) == pytest.approx(math.exp(1 - 8 / 4), abs=1e-12)


def test_text_metrics_case_folded():
    assert rouge("The Acid", "the acid", "1") == 1.0


# --- task reports ------------------------------------------------------------------------


@pytest.mark.parametrize("name", ["fs", "esol", "bbbp", "mc"])
def test_hand_computed_fixture(name):
    assert fixture_mismatches(name) == []


def test_regression_without_train_mean_uses_reference_mean():
    preds, refs, exp = load_fixture("esol")
    report = score_task(preds, refs, "PP-ESOL")
    assert report.metrics["rmse"] == pytest.approx(exp["rmse_without_train_mean"], abs=1e-9)
    assert report.notes


def test_mg_without_extractable_answers():
    preds = [Prediction(f"g{i}", ["I cannot say."]) for i in range(4)]
    refs = {f"g{i}": ["CCO"] for i in range(4)}
    report = score_task(preds, refs, "MG")
    assert report.metrics["em"] == 0.0
    assert report.metrics["validity"] is None
    assert report.metrics["fts_morgan"] == 0.0
    assert report.counts["unextractable"] == 4


def test_missing_reference_is_an_error():
    with pytest.raises(ScoreError):
        score_task([Prediction("x", ["CCO"])], {}, "FS")


def test_unknown_task_is_an_error():
    with pytest.raises(ScoreError):
        score_task([], {}, "QQ")


def test_empty_outputs_rejected():
    with pytest.raises(ScoreError):
        Prediction("x", [])
    with pytest.raises(ScoreError):
        ReferenceSet("x", [])


def test_report_table_lists_metrics():
    preds, refs, _ = load_fixture("bbbp")
    table = score_task(preds, refs, "PP-BBBP").table()
    assert "accuracy" in table and "0.7000" in table


# --- properties ----------------------------------------------------------------------------

SMILES_POOL = CORPUS + ["C1CC", "F=F", "I don't know", "<SMILES>CCO</SMILES>"]


@st.composite
def fs_cases(draw):
    n = draw(st.integers(1, 6))
    preds, refs = [], {}
    for i in range(n):
        rid = f"p{i}"
        outs = draw(st.lists(st.sampled_from(SMILES_POOL), min_size=1, max_size=4))
        preds.append(Prediction(rid, outs))
        refs[rid] = draw(st.lists(st.sampled_from(CORPUS), min_size=1, max_size=3))
    return preds, refs


def ratio_metrics(report):
    return {k: v for k, v in report.metrics.items() if k != "rmse" and v is not None}


@given(fs_cases(), st.sampled_from(CORPUS))
def test_adding_a_reference_never_lowers_scores(case, extra):
    preds, refs = case
    before = score_task(preds, refs, "FS", k=3)
    more = {rid: r + [extra] for rid, r in refs.items()}
    after = score_task(preds, more, "FS", k=3)
    for key in ("em", "top3_em", "fts_morgan", "fts_path"):
        assert after.metrics[key] >= before.metrics[key] - 1e-12


@given(fs_cases())
def test_top_k_monotone(case):
    preds, refs = case
    scores = [top_k_em(preds, refs, k, "smiles") for k in range(1, 6)]
    assert scores == sorted(scores)
    assert scores[0] == score_task(preds, refs, "FS").metrics["em"]


@given(st.sampled_from(CORPUS), st.randoms(use_true_random=False))
def test_em_invariant_under_rewrites(smiles, r):
    assert em_smiles(random_rewrite(smiles, r), [smiles])
    assert fts(random_rewrite(smiles, r), smiles) == 1.0


@given(fs_cases())
def test_ratio_metrics_bounded(case):
    preds, refs = case
    for v in ratio_metrics(score_task(preds, refs, "FS", k=2)).values():
        assert 0.0 <= v <= 1.0


@given(fs_cases(), st.randoms(use_true_random=False))
def test_report_independent_of_prediction_order(case, r):
    preds, refs = case
    shuffled = preds[:]
    r.shuffle(shuffled)
    assert score_task(shuffled, refs, "FS", k=2).to_dict() == score_task(preds, refs, "FS", k=2).to_dict()


WORDS = "the a molecule acid base is an of it ring".split()


@settings(max_examples=300)
@given(st.lists(st.sampled_from(WORDS), max_size=8), st.lists(st.sampled_from(WORDS), min_size=1, max_size=8))
def test_text_metrics_bounded_and_identity(pred, ref):
    p, g = " ".join(pred), " ".join(ref)
    for v in (bleu(p, g), rouge(p, g, "1"), rouge(p, g, "2"), rouge(p, g, "L"), meteor_lite(p, g)):
        assert 0.0 <= v <= 1.0 + 1e-12
    assert meteor_lite(g, g) == 1.0
    assert rouge(g, g, "L") == 1.0


def test_classification_and_regression_bounds():
    r = random.Random(8)
    for _ in range(200):
        n = r.randint(1, 20)
        golds = [r.random() < 0.5 for _ in range(n)]
        preds = [r.choice([True, False, None]) for _ in range(n)]
        assert 0.0 <= accuracy(preds, golds) <= 1.0
        xs = [r.uniform(-5, 5) for _ in range(n)]
        assert rmse(xs, xs) == 0.0
