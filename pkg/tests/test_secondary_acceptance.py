"""Acceptance for the scorer-adapter package: protocol round-trip and fuzzing.

Drives the compiled Node adapter (scorer-adapter/dist) through the same
client the labeling pipeline uses. Skipped when the build output or node
itself is missing; build with `npm run build` inside scorer-adapter/.
"""

import hashlib
import json
import random
import shutil
import subprocess
from pathlib import Path

import pytest

from conftest import synthetic_corpus
from democo.cotrain import Ensemble, EnsembleMember, ExternalMember, run_cascade
from democo.models.external import ExternalScorer
from democo.models.store import load_model
from democo.cli import EXIT_OK, main
from democo.corpus import write_gold_tsv

ADAPTER = Path(__file__).parent.parent / "scorer-adapter" / "dist" / "cli.js"

pytestmark = pytest.mark.skipif(
    shutil.which("node") is None or not ADAPTER.exists(),
    reason="node or the built scorer-adapter is unavailable",
)


def adapter_command(*args):
    return ["node", str(ADAPTER), *args]


def sha(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def write_fixture_csv(path, rows):
    lines = ["hash,level,label,confidence"]
    for text, level, label, confidence in rows:
        lines.append(f"{sha(text)},{level},{label},{confidence}")
    path.write_text("\n".join(lines) + "\n")


@pytest.fixture(scope="module")
def native_members(tmp_path_factory):
    workdir = tmp_path_factory.mktemp("native")
    labeled, _ = synthetic_corpus(200, seed=41)
    gold = workdir / "gold.tsv"
    gold.write_bytes(write_gold_tsv(labeled))
    cfg = workdir / "fast.cfg"
    cfg.write_text(
        "pmi.min_count = 1\nlinear.dim = 16\nlinear.epochs = 8\n"
        "linear.lr = 0.5\nlinear.buckets = 4096\n"
    )
    members = []
    for kind in ("pmi", "linear"):
        models = {}
        for level in ("A", "B", "C"):
            out = workdir / f"{kind}-{level}.model"
            code = main(["train", str(gold), "--level", level, "--kind", kind,
                         "--out", str(out), "--config", str(cfg), "--seed", "7"])
            assert code == EXIT_OK
            models[level] = load_model(out)
        members.append(EnsembleMember(kind, "discrete", models))
    return members


def test_fixture_roundtrip_matches_native_aggregate(tmp_path, native_members):
    """Adapter column inserted into the cascade equals the native aggregate."""
    _, unlabeled = synthetic_corpus(60, seed=42)
    # recorded confidences for a transformer-like column, planted per text;
    # the first three use reference values a heavy model is known to emit
    rng = random.Random(0x5EC)
    recorded = {inst.id: round(rng.random(), 3) for inst in unlabeled}
    for inst, value in zip(unlabeled[:3], (0.919, 0.659, 0.060)):
        recorded[inst.id] = value
    rows = []
    for inst in unlabeled:
        off = recorded[inst.id]
        rows.append((inst.text, "A", "OFF", off))
        rows.append((inst.text, "A", "NOT", round(1.0 - off, 3)))
        for level, classes in (("B", ("TIN", "UNT")), ("C", ("IND", "GRP", "OTH"))):
            for cls in classes:
                rows.append((inst.text, level, cls, round(rng.random(), 3)))
    fixture = tmp_path / "fixture.csv"
    write_fixture_csv(fixture, rows)

    scorer = ExternalScorer.from_command(
        adapter_command("--table", str(fixture), "--stdio", "--name", "replay"),
        timeout=20.0,
    )
    try:
        ensemble = Ensemble(list(native_members) + [ExternalMember(scorer)])
        records = run_cascade(ensemble, unlabeled, batch_size=16)
        native_only = run_cascade(Ensemble(list(native_members)), unlabeled, batch_size=16)
    finally:
        scorer.close()

    native_by_id = {r.instance_id: r for r in native_only}
    for record in records:
        base = native_by_id[record.instance_id]
        values = [conf for _, conf in base.level_a.per_model]
        values.append(recorded[record.instance_id])
        expected = sum(values) / len(values)
        assert record.level_a.average == pytest.approx(expected, abs=1e-6)


def test_adapter_survives_1000_fuzzed_frames(tmp_path):
    """Garbage frames get error replies; the process keeps answering."""
    fixture = tmp_path / "fixture.csv"
    write_fixture_csv(fixture, [("known text", "A", "OFF", 0.9),
                                ("known text", "A", "NOT", 0.1)])
    proc = subprocess.Popen(
        adapter_command("--table", str(fixture), "--stdio"),
        stdin=subprocess.PIPE,
        stdout=subprocess.PIPE,
        bufsize=0,
    )
    try:
        hello = json.loads(proc.stdout.readline())
        assert "hello" in hello

        rng = random.Random(0xF022)
        pieces = [
            "{", "}", "[", "]", '"req_id"', ":", "1", "null", "true",
            '"level"', '"A"', '"texts"', ",", '"\\u0000"', "1e999", "NaN",
            "\\", '"unterminated', "0.5,0.5", "{}",
        ]
        for i in range(1000):
            frame = "".join(rng.choice(pieces) for _ in range(rng.randint(1, 6)))
            frame = frame.replace("\n", "") or "{}"
            proc.stdin.write((frame + "\n").encode("utf-8"))
            reply = json.loads(proc.stdout.readline())
            assert "error" in reply or "confidences" in reply
            assert proc.poll() is None, f"adapter died on fuzz frame {i}: {frame!r}"

        request = {"req_id": 4242, "level": "A", "texts": ["known text", "zzz"]}
        proc.stdin.write((json.dumps(request) + "\n").encode("utf-8"))
        reply = json.loads(proc.stdout.readline())
        assert reply["req_id"] == 4242
        assert reply["confidences"][0] == {"OFF": 0.9, "NOT": 0.1}
        assert reply["confidences"][1] == {"OFF": 0.5, "NOT": 0.5}
    finally:
        proc.stdin.close()
        proc.wait(timeout=10)


def test_adapter_pmi_reimplementation_matches_native(tmp_path):
    """The adapter's PMI port reproduces native confidences within 1e-6."""
    from democo.models.pmi import pmi_predict, pmi_train
    from democo.models.store import save_model
    from conftest import inst, li

    labeled, _ = synthetic_corpus(150, seed=44)
    model = pmi_train(labeled, "A", min_count=1, smoothing=0.01)
    model_path = tmp_path / "pmi-A.model"
    save_model(model_path, model)

    probes = [inst(f"p{i}", text) for i, text in enumerate([
        "coffee window stupid garden",
        "@USER yellow bridge...",
        "totally unseen tokens qqq",
        "fuck fuck fuck",
        "",
        "LMAO....YOU suck",
    ])]
    scorer = ExternalScorer.from_command(
        adapter_command("--pmi-model", str(model_path), "--stdio"), timeout=20.0
    )
    try:
        assert scorer.info.kind == "discrete"
        assert set(scorer.info.levels) == {"A"}
        preds = scorer.score(probes, "A")
    finally:
        scorer.close()
    for probe, pred in zip(probes, preds):
        native = pmi_predict(model, probe)
        for cls, value in native.confidences.items():
            assert pred.confidences[cls] == pytest.approx(value, abs=1e-6)


def test_adapter_over_tcp(tmp_path):
    """The client reaches the adapter over its TCP transport too."""
    import re

    proc = subprocess.Popen(
        adapter_command("--echo", "--tcp", "0", "--levels", "A"),
        stderr=subprocess.PIPE,
        bufsize=0,
    )
    try:
        banner = proc.stderr.readline().decode()
        match = re.search(r"127\.0\.0\.1:(\d+)", banner)
        assert match, f"no port in banner: {banner!r}"
        scorer = ExternalScorer.from_tcp("127.0.0.1", int(match.group(1)), timeout=10.0)
        try:
            (pred,) = scorer.score([make_probe("tcp check text")], "A")
            assert pred.confidences == {"OFF": 0.5, "NOT": 0.5}
        finally:
            scorer.close()
    finally:
        proc.terminate()
        proc.wait(timeout=10)


def make_probe(text):
    from conftest import inst

    return inst("probe", text)


def test_cli_label_with_adapter_scorer(tmp_path, native_members, tmp_path_factory):
    """The labeling command accepts the adapter as an external ensemble member."""
    workdir = tmp_path_factory.mktemp("cli-adapter")
    labeled, unlabeled = synthetic_corpus(40, seed=43)
    gold = workdir / "gold.tsv"
    gold.write_bytes(write_gold_tsv(labeled))
    corpus_path = workdir / "corpus.jsonl"
    corpus_path.write_text(
        "".join(json.dumps({"id": i.id, "text": i.text}) + "\n" for i in unlabeled)
    )
    cfg = workdir / "fast.cfg"
    cfg.write_text(
        "pmi.min_count = 1\nlinear.dim = 16\nlinear.epochs = 8\n"
        "linear.lr = 0.5\nlinear.buckets = 4096\n"
    )
    model_args = []
    for kind in ("pmi", "linear"):
        for level in ("A", "B", "C"):
            out = workdir / f"{kind}-{level}.model"
            assert main(["train", str(gold), "--level", level, "--kind", kind,
                         "--out", str(out), "--config", str(cfg)]) == EXIT_OK
            model_args += ["--model", f"{kind}={out}"]
    out = workdir / "scores"
    code = main([
        "label", str(corpus_path), "--out", str(out), *model_args,
        "--scorer-cmd", f"node {ADAPTER} --echo --stdio",
    ])
    assert code == EXIT_OK
    meta = json.loads((out / "ensemble.json").read_text())
    assert [m["name"] for m in meta] == ["pmi", "linear", "echo"]
