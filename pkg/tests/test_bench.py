import math
import random
from importlib import resources

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dualplane.bench import (BenchTask, load_suite, render_fraction, score_suite,
                             smape)
from dualplane.errors import LengthMismatch, MissingResponse


def test_smape_exact_prediction_is_zero():
    assert smape([1.0], [1.0]) == 0.0


def test_smape_hand_computed_example():
    # 2*|1-3| / (1+3) = 1.0
    assert abs(smape([1.0], [3.0]) - 1.0) < 1e-12


def test_smape_zero_over_zero_is_zero():
    assert smape([0.0], [0.0]) == 0.0


def test_smape_length_mismatch():
    with pytest.raises(LengthMismatch):
        smape([1.0, 2.0], [1.0])
    with pytest.raises(LengthMismatch):
        smape([], [])


def test_smape_oracle_values():
    # independent hand evaluation of the stated formula
    gold = [2.0, -4.0, 0.5]
    pred = [1.0, -5.0, 0.5]
    expected = (2 * 1 / 3 + 2 * 1 / 9 + 0.0) / 3
    assert abs(smape(gold, pred) - expected) < 1e-12


@settings(max_examples=200)
@given(st.lists(st.floats(min_value=-1e6, max_value=1e6, allow_nan=False),
                min_size=1, max_size=30),
       st.integers(min_value=0, max_value=10 ** 6))
def test_smape_symmetry_and_bounds(gold, seed):
    rng = random.Random(seed)
    pred = [rng.uniform(-1e6, 1e6) for _ in gold]
    forward = smape(gold, pred)
    backward = smape(pred, gold)
    assert abs(forward - backward) < 1e-9
    assert 0.0 <= forward <= 2.0


def mk_tasks(n, kind="classification", gold="a"):
    return [BenchTask(task_id=f"t{i:03d}", kind=kind, prompt="p", gold=gold)
            for i in range(n)]


def test_accuracy_rendered_in_fraction_style():
    tasks = mk_tasks(54)
    responses = {t.task_id: ("a" if i < 33 else "b") for i, t in enumerate(tasks)}
    report = score_suite(tasks, responses)
    assert report.to_json()["classification"]["rendered"] == "33/54"
    assert render_fraction(33, 54) == "33/54"


def test_perfect_run_metrics():
    tasks = (mk_tasks(3, "classification", "yes")
             + [BenchTask("r1", "regression", "p", 4.2)]
             + [BenchTask("m1", "mcq", "p", "b", options=("a", "b"))])
    responses = {t.task_id: t.gold for t in tasks}
    report = score_suite(tasks, responses)
    data = report.to_json()
    assert data["classification"]["accuracy"] == 1.0
    assert data["regression"]["smape"] == 0.0
    assert data["mcq"]["accuracy"] == 1.0


def test_f1_zero_positive_convention():
    # class 'pos' never predicted and never gold: defined as 0
    tasks = [BenchTask("a", "classification", "p", "neg"),
             BenchTask("b", "classification", "p", "neg")]
    responses = {"a": "neg", "b": "other"}
    report = score_suite(tasks, responses)
    assert report.f1["other"] == 0.0   # predicted once, never gold
    assert 0.0 <= report.f1["neg"] <= 1.0


def test_missing_response_rejected():
    tasks = mk_tasks(2)
    with pytest.raises(MissingResponse):
        score_suite(tasks, {"t000": "a"})


def test_report_is_permutation_invariant():
    rng = random.Random(7)
    tasks = (mk_tasks(5) + [BenchTask("r1", "regression", "p", 2.0),
                            BenchTask("r2", "regression", "p", -3.0)])
    responses = {t.task_id: ("a" if t.kind == "classification" else 1.0)
                 for t in tasks}
    base = score_suite(tasks, responses).to_json()
    for _ in range(5):
        shuffled = tasks[:]
        rng.shuffle(shuffled)
        assert score_suite(shuffled, responses).to_json() == base


def test_mcq_requires_options():
    with pytest.raises(ValueError):
        BenchTask("x", "mcq", "p", "a", options=("a",))


def test_regression_gold_must_be_finite():
    with pytest.raises(ValueError):
        BenchTask("x", "regression", "p", math.inf)


def test_shipped_suite_scores_to_hand_checked_values(tmp_path):
    import json
    suite_text = resources.files("dualplane").joinpath(
        "data/bench/suite.jsonl").read_text("utf-8")
    suite_path = tmp_path / "suite.jsonl"
    suite_path.write_text(suite_text)
    tasks = load_suite(suite_path)
    responses = json.loads(resources.files("dualplane").joinpath(
        "data/bench/responses.json").read_text("utf-8"))
    report = score_suite(tasks, responses)
    data = report.to_json()
    assert data["mcq"]["rendered"] == "2/3"
    assert data["classification"]["rendered"] == "3/5"
    assert data["exact_match"]["rendered"] == "1/2"
    expected_smape = (2 * 2 / 14 + 2 * 0.5 / 1.5) / 2
    assert abs(data["regression"]["smape"] - expected_smape) < 1e-9
