"""Exact-match metrics and the evaluation driver."""

import dataclasses
import warnings

import pytest

from typeshift.evalkit import EvalReport, compute_metrics, evaluate, report_kv_lines, report_table
from typeshift.mr import parse_expression, resolve_expr
from typeshift.typesys import parse_type


def test_metrics_basic_fixture():
    precision, recall, f1, notes = compute_metrics(total=10, parsed=8, correct=6)
    assert abs(precision - 0.75) < 1e-12
    assert abs(recall - 0.6) < 1e-12
    assert abs(f1 - 2 / 3) < 1e-12
    assert notes == ()


def test_metrics_perfect_is_silent():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        precision, recall, f1, notes = compute_metrics(total=10, parsed=10, correct=10)
    assert (precision, recall, f1) == (1.0, 1.0, 1.0)
    assert notes == ()


def test_metrics_empty_run_yields_zero_with_notes():
    with pytest.warns(UserWarning):
        precision, recall, f1, notes = compute_metrics(total=0, parsed=0, correct=0)
    assert (precision, recall, f1) == (0.0, 0.0, 0.0)
    assert len(notes) == 3
    assert any("precision" in n for n in notes)
    assert any("recall" in n for n in notes)
    assert any("f1" in n for n in notes)


def test_metrics_nothing_parsed():
    # recall has a real denominator here, so only precision and f1 degrade
    with pytest.warns(UserWarning):
        precision, recall, f1, notes = compute_metrics(total=5, parsed=0, correct=0)
    assert (precision, recall, f1) == (0.0, 0.0, 0.0)
    assert len(notes) == 2


def test_evaluate_trained_model_on_heldout(trained, test_examples, domain):
    weights, templates = trained
    report = evaluate(weights, templates, test_examples, domain, beam_width=16)
    assert report.total == 10
    assert report.parsed == 10
    assert report.correct == 10
    assert report.f1 == 1.0
    assert report.seconds_total > 0.0
    assert abs(report.seconds_per_sentence - report.seconds_total / 10) < 1e-9
    assert report.notes == ()


def test_evaluate_does_not_mutate_weights(trained, test_examples, domain):
    weights, templates = trained
    before = dict(weights)
    evaluate(weights, templates, test_examples, domain, beam_width=16)
    assert weights == before


def test_evaluate_counts_wrong_parse_as_parsed(trained, test_examples, domain):
    weights, templates = trained
    wrong = parse_expression("(capital montana)", domain)
    victim = dataclasses.replace(test_examples[0], gold=resolve_expr(wrong.expr, wrong.binding))
    report = evaluate(weights, templates, [victim] + list(test_examples[1:]), domain)
    assert report.parsed == 10
    assert report.correct == 9
    assert abs(report.precision - 0.9) < 1e-12


def test_evaluate_zero_weights_report_is_self_consistent(test_examples, domain):
    from typeshift.features import default_templates

    report = evaluate({}, default_templates(), test_examples, domain, beam_width=16)
    assert report.total == 10
    assert 0 <= report.correct <= report.parsed <= report.total
    if report.parsed:
        assert abs(report.precision - report.correct / report.parsed) < 1e-12
    assert abs(report.recall - report.correct / report.total) < 1e-12


def test_evaluate_parallel_matches_serial(trained, test_examples, domain):
    weights, templates = trained
    serial = evaluate(weights, templates, test_examples, domain, beam_width=16, workers=1)
    parallel = evaluate(weights, templates, test_examples, domain, beam_width=16, workers=2)
    assert (serial.total, serial.parsed, serial.correct) == (
        parallel.total,
        parallel.parsed,
        parallel.correct,
    )


def test_evaluate_goal_type_restricts_parses(trained, test_examples, domain):
    weights, templates = trained
    capital = [ex for ex in test_examples if ex.mr_text == "(capital florida)"]
    assert capital
    ok = evaluate(weights, templates, capital, domain, goal_type=parse_type("ct"))
    assert ok.correct == 1
    # nothing in this sentence grounds out at a truth value
    with pytest.warns(UserWarning):
        none = evaluate(weights, templates, capital, domain, goal_type=parse_type("t"))
    assert none.parsed == 0


def test_evaluate_empty_dataset(domain, trained):
    weights, templates = trained
    with pytest.warns(UserWarning):
        report = evaluate(weights, templates, [], domain)
    assert report.total == 0
    assert report.f1 == 0.0
    assert report.seconds_per_sentence == 0.0
    assert report.notes


def test_report_kv_lines_format():
    report = EvalReport(
        total=10,
        parsed=8,
        correct=6,
        precision=0.75,
        recall=0.6,
        f1=2 / 3,
        seconds_total=1.234,
        seconds_per_sentence=0.1234,
    )
    lines = report_kv_lines(report).splitlines()
    parsed = dict(line.split("=", 1) for line in lines)
    assert parsed["total"] == "10"
    assert parsed["parsed"] == "8"
    assert parsed["correct"] == "6"
    assert parsed["precision"] == "0.750000"
    assert parsed["recall"] == "0.600000"
    assert parsed["f1"] == "0.666667"
    assert parsed["seconds_total"] == "1.234"
    assert parsed["seconds_per_sentence"] == "0.1234"


def test_report_table_format():
    report = EvalReport(
        total=2,
        parsed=1,
        correct=0,
        precision=0.0,
        recall=0.0,
        f1=0.0,
        seconds_total=0.5,
        seconds_per_sentence=0.25,
        notes=("f1 0/0 treated as 0.0",),
    )
    table = report_table(report)
    lines = table.splitlines()
    assert len(lines) == 9  # eight rows plus the note
    assert lines[0].endswith("sentences  2")
    assert lines[-1].strip().startswith("note")
    # keys right-align so the value column starts at a common offset
    width = len("s/sentence")
    assert all(line[width : width + 2] == "  " for line in lines)
    assert all(line[width + 2] != " " for line in lines)
