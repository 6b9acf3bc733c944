"""End-to-end pipeline runs through the command-line interface."""

import json
import sys
from pathlib import Path

import pytest

from conftest import synthetic_corpus
from democo.cli import EXIT_INPUT, EXIT_OK, EXIT_PROTOCOL, main
from democo.corpus import parse_gold_tsv, write_gold_tsv, write_unlabeled_jsonl
from democo.cotrain import read_distant_records
from democo.models.pmi import pmi_score
from democo.models.store import load_model

SCORERS = str(Path(__file__).parent / "scorers.py")

TOY_TSV = (
    "id\ttweet\tsubtask_a\tsubtask_b\tsubtask_c\n"
    "1\tfuck you pal\tOFF\tUNT\tNULL\n"
    "2\tfuck off now\tOFF\tUNT\tNULL\n"
    "3\thello there friend\tNOT\tNULL\tNULL\n"
    "4\tgood day mate\tNOT\tNULL\tNULL\n"
    "5\tfuck you he said\tOFF\tTIN\tIND\n"
    "6\tshit happens sometimes\tOFF\tUNT\tNULL\n"
)


def run(*args):
    return main([str(a) for a in args])


@pytest.fixture
def workdir(tmp_path):
    (tmp_path / "fast.cfg").write_text(
        "pmi.min_count = 1\n"
        "pmi.smoothing = 0.01\n"
        "linear.dim = 16\n"
        "linear.epochs = 8\n"
        "linear.lr = 0.5\n"
        "linear.buckets = 4096\n"
    )
    return tmp_path


class TestIngest:
    def test_counts_and_determinism(self, workdir, capsys):
        raw = workdir / "raw.jsonl"
        raw.write_text(
            '{"id": "a", "text": "@bob this is a perfectly good line"}\n'
            '{"id": "b", "text": "see https://x.io for the details"}\n'
            '{"id": "c", "text": "short"}\n'
            "not json at all\n"
            '{"id": "d", "text": "supercalifragilistic"}\n'
        )
        out = workdir / "corpus.jsonl"
        assert run("ingest", raw, out) == EXIT_OK
        report = json.loads((workdir / "corpus.jsonl.report.json").read_text())
        assert report == {
            "accepted": 1, "too_short": 1, "too_few_words": 1, "url": 1, "malformed": 1,
        }
        lines = out.read_text().splitlines()
        assert json.loads(lines[0]) == {"id": "a", "text": "@USER this is a perfectly good line"}
        first = out.read_bytes()
        assert run("ingest", raw, out) == EXIT_OK
        assert out.read_bytes() == first

    def test_empty_input(self, workdir):
        raw = workdir / "empty.jsonl"
        raw.write_text("")
        out = workdir / "corpus.jsonl"
        assert run("ingest", raw, out) == EXIT_OK
        assert out.read_text() == ""


class TestTrain:
    def test_pmi_scores_match_counting_rule(self, workdir):
        gold = workdir / "gold.tsv"
        gold.write_text(TOY_TSV)
        out = workdir / "pmi-A.model"
        cfg = workdir / "pmi.cfg"
        cfg.write_text("pmi.min_count = 1\npmi.smoothing = 0.0\npmi.orders = 1\n")
        assert run("train", gold, "--level", "A", "--kind", "pmi",
                   "--out", out, "--config", cfg) == EXIT_OK
        model = load_model(out)
        # "fuck" appears 3 times, all OFF; 12 OFF tokens of 18 total
        items = parse_gold_tsv(TOY_TSV.encode())
        off_tokens = sum(len(i.instance.tokens) for i in items if i.label.a == "OFF")
        total = sum(len(i.instance.tokens) for i in items)
        import math
        expected = math.log2((3 * total) / (3 * off_tokens))
        assert pmi_score(model, "fuck", "OFF") == pytest.approx(expected, abs=1e-9)

    def test_linear_same_seed_identical_files(self, workdir):
        gold = workdir / "gold.tsv"
        gold.write_text(TOY_TSV)
        m1, m2 = workdir / "l1.model", workdir / "l2.model"
        for out in (m1, m2):
            assert run("train", gold, "--level", "A", "--kind", "linear",
                       "--out", out, "--config", workdir / "fast.cfg",
                       "--seed", 99) == EXIT_OK
        assert m1.read_bytes() == m2.read_bytes()

    def test_level_c_missing_class_is_input_error(self, workdir):
        gold = workdir / "gold.tsv"
        gold.write_text(
            "id\ttweet\tsubtask_a\tsubtask_b\tsubtask_c\n"
            "1\tfuck you he said\tOFF\tTIN\tIND\n"
            "2\tfuck them all now\tOFF\tTIN\tGRP\n"
        )
        code = run("train", gold, "--level", "C", "--kind", "pmi",
                   "--out", workdir / "c.model", "--config", workdir / "fast.cfg")
        assert code == EXIT_INPUT

    def test_missing_file_is_input_error(self, workdir):
        assert run("train", workdir / "nope.tsv", "--level", "A",
                   "--kind", "pmi", "--out", workdir / "x.model") == EXIT_INPUT

    def test_lexicon_requires_level_a(self, workdir):
        gold = workdir / "gold.tsv"
        gold.write_text(TOY_TSV)
        assert run("train", gold, "--level", "B", "--kind", "lexicon",
                   "--out", workdir / "lex.model") == EXIT_INPUT


@pytest.fixture
def trained_pipeline(workdir):
    """Ingest + train the native trio on a synthetic planted corpus."""
    labeled, _ = synthetic_corpus(140, seed=21)
    _, unlabeled = synthetic_corpus(220, seed=22)
    gold = workdir / "gold.tsv"
    gold.write_bytes(write_gold_tsv(labeled))
    corpus_path = workdir / "corpus.jsonl"
    corpus_path.write_text(write_unlabeled_jsonl(unlabeled))
    cfg = workdir / "fast.cfg"
    models = []
    for level in ("A", "B", "C"):
        for kind in ("pmi", "linear"):
            out = workdir / f"{kind}-{level}.model"
            assert run("train", gold, "--level", level, "--kind", kind,
                       "--out", out, "--config", cfg, "--seed", 7) == EXIT_OK
            models.append(f"{kind}={out}")
    lex = workdir / "lexicon-A.model"
    assert run("train", gold, "--level", "A", "--kind", "lexicon", "--out", lex) == EXIT_OK
    models.append(f"lexicon={lex}")
    return workdir, gold, corpus_path, models


def label_args(corpus_path, out, models, extra=()):
    args = ["label", corpus_path, "--out", out]
    for entry in models:
        args += ["--model", entry]
    args += list(extra)
    return args


class TestLabel:
    def test_cascade_files_and_monotonicity(self, trained_pipeline):
        workdir, _, corpus_path, models = trained_pipeline
        out = workdir / "scores"
        assert run(*label_args(corpus_path, out, models)) == EXIT_OK
        records = read_distant_records(out)
        assert len(records) == 220
        b_ids = {r.instance_id for r in records if r.level_b is not None}
        c_ids = {r.instance_id for r in records if r.level_c is not None}
        assert c_ids <= b_ids <= {r.instance_id for r in records}
        assert len(b_ids) > 0  # planted signal must push some instances through

    def test_thread_counts_byte_identical(self, trained_pipeline):
        workdir, _, corpus_path, models = trained_pipeline
        out1, out8 = workdir / "scores-t1", workdir / "scores-t8"
        assert run(*label_args(corpus_path, out1, models, ["--threads", "1"])) == EXIT_OK
        assert run(*label_args(corpus_path, out8, models, ["--threads", "8"])) == EXIT_OK
        for name in ("level_a.csv", "level_b.csv", "level_c.csv",
                     "level_a_models.csv", "ensemble.json"):
            assert (out1 / name).read_bytes() == (out8 / name).read_bytes()

    def test_echo_scorer_pulls_averages_toward_half(self, trained_pipeline):
        workdir, _, corpus_path, models = trained_pipeline
        native_out = workdir / "scores-native"
        mixed_out = workdir / "scores-mixed"
        assert run(*label_args(corpus_path, native_out, models)) == EXIT_OK
        assert run(*label_args(
            corpus_path, mixed_out, models,
            ["--scorer-cmd", f"{sys.executable} {SCORERS} echo"],
        )) == EXIT_OK
        native = {r.instance_id: r for r in read_distant_records(native_out)}
        mixed = {r.instance_id: r for r in read_distant_records(mixed_out)}
        for id_, record in native.items():
            expected = (record.level_a.average * 3 + 0.5) / 4
            assert mixed[id_].level_a.average == pytest.approx(expected, abs=1e-5)

    def test_empty_corpus_gives_headers_only(self, trained_pipeline):
        workdir, _, _, models = trained_pipeline
        empty = workdir / "empty.jsonl"
        empty.write_text("")
        out = workdir / "scores-empty"
        assert run(*label_args(empty, out, models)) == EXIT_OK
        assert (out / "level_a.csv").read_text() == "id,average,std\n"
        assert (out / "level_b.csv").read_text() == "id,average,std\n"

    def test_protocol_error_exit_code(self, trained_pipeline):
        workdir, _, corpus_path, models = trained_pipeline
        code = run(*label_args(
            corpus_path, workdir / "scores-bad", models,
            ["--scorer-cmd", f"{sys.executable} {SCORERS} shuffled"],
        ))
        assert code == EXIT_PROTOCOL


class TestSelectPartitionEvalHist:
    @pytest.fixture
    def scored(self, trained_pipeline):
        workdir, gold, corpus_path, models = trained_pipeline
        out = workdir / "scores"
        assert run(*label_args(corpus_path, out, models)) == EXIT_OK
        return workdir, gold, corpus_path, out

    def test_select_reverifiable(self, scored):
        workdir, _, corpus_path, scores = scored
        ids_path = workdir / "selected_a.txt"
        assert run("select", "--scores", scores, "--level", "A",
                   "--out", ids_path) == EXIT_OK
        chosen = set(ids_path.read_text().split())
        for record in read_distant_records(scores):
            expected = record.level_a.average < 0.2 or record.level_a.average > 0.7
            assert (record.instance_id in chosen) == expected

    def test_select_emit_tsv_parses(self, scored):
        workdir, _, corpus_path, scores = scored
        tsv = workdir / "distilled.tsv"
        assert run("select", "--scores", scores, "--level", "A",
                   "--out", workdir / "ids.txt", "--emit-tsv", tsv,
                   "--corpus", corpus_path) == EXIT_OK
        items = parse_gold_tsv(tsv.read_bytes())
        assert items, "selection should keep confident instances"
        ids = set((workdir / "ids.txt").read_text().split())
        assert {i.instance.id for i in items} == ids

    def test_partition_rows_reverifiable(self, scored):
        workdir, _, _, scores = scored
        buckets_path = workdir / "buckets.csv"
        assert run("partition", "--scores", scores, "--out", buckets_path) == EXIT_OK
        lines = buckets_path.read_text().splitlines()
        assert lines[0] == "id,difficulty,polarity"
        assert len(lines) > 1
        for line in lines[1:]:
            _, difficulty, polarity = line.split(",")
            assert difficulty in ("Easy", "Hard") and polarity in ("OFF", "NOT")

    def test_partition_with_continuous_member(self, trained_pipeline):
        workdir, _, corpus_path, models = trained_pipeline
        scores = workdir / "scores-cont"
        assert run(*label_args(
            corpus_path, scores, models,
            ["--scorer-cmd", f"{sys.executable} {SCORERS} echo"],
        )) == EXIT_OK
        buckets_path = workdir / "buckets-cont.csv"
        assert run("partition", "--scores", scores, "--out", buckets_path) == EXIT_OK
        lines = buckets_path.read_text().splitlines()[1:]
        # the echo member pins every continuous confidence to 0.5: only the
        # Hard OFF rule can fire, and only where all discrete members say OFF
        assert lines, "expected some Hard OFF assignments"
        assert all(line.split(",")[1:] == ["Hard", "OFF"] for line in lines)

    def test_partition_missing_detail_is_input_error(self, workdir):
        missing = workdir / "not-there"
        assert run("partition", "--scores", missing,
                   "--out", workdir / "b.csv") == EXIT_INPUT

    def test_eval_with_model_and_buckets(self, scored, capsys):
        workdir, gold, _, scores = scored
        report_path = workdir / "report.json"
        code = run("eval", "--gold", gold, "--level", "A",
                   "--model", workdir / "lexicon-A.model", "--out", report_path)
        assert code == EXIT_OK
        (report,) = json.loads(report_path.read_text())
        # gold level-A labels were planted from the same lexicon signal
        assert report["macro_f1"] == pytest.approx(1.0)
        out = capsys.readouterr().out
        assert "macro-F1" in out

    def test_eval_pred_csv(self, scored):
        workdir, gold, _, _ = scored
        items = parse_gold_tsv(gold.read_bytes())
        pred_path = workdir / "preds.csv"
        pred_path.write_text(
            "id,label\n" + "".join(f"{i.instance.id},{i.label.a}\n" for i in items)
        )
        report_path = workdir / "report2.json"
        assert run("eval", "--gold", gold, "--level", "A", "--pred", pred_path,
                   "--out", report_path) == EXIT_OK
        (report,) = json.loads(report_path.read_text())
        assert report["macro_f1"] == 1.0

    def test_hist_conserves_counts(self, scored, capsys):
        workdir, _, _, scores = scored
        out_csv = workdir / "hist.csv"
        assert run("hist", scores / "level_a.csv", "--column", "average",
                   "--bins", "10", "--out", out_csv) == EXIT_OK
        rows = out_csv.read_text().splitlines()[1:]
        total = sum(int(r.split(",")[2]) for r in rows)
        n_records = len((scores / "level_a.csv").read_text().splitlines()) - 1
        assert total == n_records
