"""End-to-end runs of every CLI subcommand through main(argv)."""

import contextlib
import io
import re
from importlib import resources

import pytest

from typeshift.cli import main
from typeshift.features import load_model

DATA = resources.files("typeshift") / "data"
DOMAIN = str(DATA / "geo_mini.domain")
TRAIN = str(DATA / "geo_toy_train.tsv")
TEST = str(DATA / "geo_toy_test.tsv")

GOLDEN = ["what", "is", "the", "capital", "of", "the", "largest", "state", "by", "area", "?"]


def run_cli(argv):
    out, err = io.StringIO(), io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
        rc = main(argv)
    return rc, out.getvalue(), err.getvalue()


@pytest.fixture(scope="module")
def cli_run(tmp_path_factory):
    """One full `train` invocation; later tests reuse its model and cache."""
    base = tmp_path_factory.mktemp("cli")
    model = base / "toy.model"
    cache = base / "refs.cache"
    rc, out, err = run_cli(
        [
            "train",
            "--domain", DOMAIN,
            "--data", TRAIN,
            "--model", str(model),
            "--cache", str(cache),
            "--iters", "20",
            "--seed", "1",
        ]
    )
    assert rc == 0, err
    return base, model, cache, out


def test_train_writes_model_and_cache(cli_run):
    _, model, cache, out = cli_run
    assert model.exists() and cache.exists()
    assert "coverage 31/31" in out
    assert "wrote reference cache" in out
    assert "wrote model" in out
    assert len(re.findall(r"^epoch \d+: \d+ updates over 31 examples$", out, re.M)) == 20
    weights, templates, meta = load_model(str(model))
    assert weights and len(templates.templates) == 84
    assert meta["iterations"] == 20
    assert meta["train_examples"] == 31


def test_train_cached_rerun_is_byte_identical(cli_run, tmp_path):
    _, model, cache, _ = cli_run
    rerun = tmp_path / "rerun.model"
    rc, out, _ = run_cli(
        [
            "train",
            "--domain", DOMAIN,
            "--data", TRAIN,
            "--model", str(rerun),
            "--cache", str(cache),
            "--iters", "20",
            "--seed", "1",
        ]
    )
    assert rc == 0
    assert "loaded reference cache" in out
    assert "skipping forced decoding" in out
    assert rerun.read_bytes() == model.read_bytes()


def test_train_accepts_template_file_and_no_average(cli_run, tmp_path):
    from typeshift.features import default_templates

    _, _, cache, _ = cli_run
    tpl = tmp_path / "templates.txt"
    tpl.write_text(default_templates().to_lines())
    model = tmp_path / "raw.model"
    rc, out, _ = run_cli(
        [
            "train",
            "--domain", DOMAIN,
            "--data", TRAIN,
            "--model", str(model),
            "--cache", str(cache),
            "--templates", str(tpl),
            "--iters", "1",
            "--no-average",
        ]
    )
    assert rc == 0
    _, _, meta = load_model(str(model))
    assert meta["iterations"] == 1
    assert meta["averaging"] is False


def test_eval_heldout_exact_match(cli_run):
    _, model, _, _ = cli_run
    rc, out, _ = run_cli(
        ["eval", "--domain", DOMAIN, "--model", str(model), "--data", TEST]
    )
    assert rc == 0
    kv = dict(
        line.split("=", 1) for line in out.splitlines() if "=" in line and " " not in line
    )
    assert kv["total"] == "10"
    assert kv["parsed"] == "10"
    assert kv["correct"] == "10"
    assert kv["f1"] == "1.000000"
    assert "precision" in out  # human table precedes the kv block


def test_parse_with_trained_model(cli_run):
    _, model, _, _ = cli_run
    rc, out, err = run_cli(
        ["parse", "--domain", DOMAIN, "--model", str(model)] + GOLDEN
    )
    assert rc == 0, err
    assert out == "(capital (argmax state size))\tct\n"


def test_parse_trace_table(cli_run):
    _, model, _, _ = cli_run
    rc, out, _ = run_cli(
        ["parse", "--trace", "--domain", DOMAIN, "--model", str(model)] + GOLDEN
    )
    assert rc == 0
    lines = out.splitlines()
    assert lines[-1] == "(capital (argmax state size))\tct"
    rows = [line.split("\t") for line in lines[:-1]]
    assert len(rows) == 14
    assert len(rows) <= 2 * len(GOLDEN) - 1
    assert all(len(r) == 4 for r in rows)
    assert [r[0] for r in rows] == [str(i) for i in range(1, 15)]
    assert all(r[1] in {"skip", "sh", "reR", "reL", "un"} for r in rows)
    assert rows[0] == ["1", "skip", "-", "is"]
    assert rows[-1][2] == "ct"  # one grounded item left on the stack
    assert rows[-1][3] == "-"  # queue consumed


def test_trace_subcommand_matches_parse_trace(cli_run):
    _, model, _, _ = cli_run
    a = run_cli(["parse", "--trace", "--domain", DOMAIN, "--model", str(model)] + GOLDEN)
    b = run_cli(["trace", "--domain", DOMAIN, "--model", str(model)] + GOLDEN)
    assert a == b


def test_parse_goal_type_zero_weights():
    rc, out, _ = run_cli(
        ["parse", "--domain", DOMAIN, "--goal-type", "ct",
         "what", "is", "the", "capital", "of", "texas", "?"]
    )
    assert rc == 0
    assert out == "(capital texas)\tct\n"


def test_parse_simple_types_collapses_entities():
    rc, out, _ = run_cli(
        ["parse", "--domain", DOMAIN, "--simple-types",
         "what", "is", "the", "capital", "of", "texas", "?"]
    )
    assert rc == 0
    assert out.endswith("\te\n")


def test_parse_simple_types_aliases_goal_type():
    # a goal named after a rich entity type is read as e in this mode
    rc, out, _ = run_cli(
        ["parse", "--domain", DOMAIN, "--simple-types", "--goal-type", "st",
         "what", "is", "the", "capital", "of", "texas", "?"]
    )
    assert rc == 0
    assert out.endswith("\te\n")


def test_parse_empty_question_exits_2():
    rc, out, err = run_cli(["parse", "--domain", DOMAIN, ""])
    assert rc == 2
    assert out == ""
    assert "empty question" in err


def test_parse_unparseable_question_exits_1():
    rc, out, err = run_cli(["parse", "--domain", DOMAIN, "hello", "there", "?"])
    assert rc == 1
    assert out == ""
    assert "no parse" in err


def test_force_decode_covered_corpus(tmp_path):
    cache = tmp_path / "refs.cache"
    rc, out, _ = run_cli(
        ["force-decode", "--domain", DOMAIN, "--data", TEST, "--cache", str(cache)]
    )
    assert rc == 0
    assert "coverage 10/10 (100.0%)" in out
    assert "wrote reference cache" in out
    assert cache.exists() and cache.stat().st_size > 0


def test_force_decode_uncovered_exits_1(tmp_path):
    data = tmp_path / "bad.tsv"
    data.write_text("what is texas ?\t(capital texas)\n")
    rc, out, _ = run_cli(["force-decode", "--domain", DOMAIN, "--data", str(data)])
    assert rc == 1
    assert "coverage 0/1" in out
    assert "uncovered examples: 0" in out
