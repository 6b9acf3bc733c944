"""Command-line surface: ingest, train, label, select, partition, eval, hist.

Every command resolves options as CLI flag > config file > default, prints
the seed it ran with, and writes a manifest next to its outputs so a run
can be reproduced byte for byte.
"""

from __future__ import annotations

import argparse
import json
import sys
import traceback
from pathlib import Path

from . import __version__, corpus, evaluate, select
from .config import cfg_bool, cfg_float, cfg_int, cfg_phases, load_config
from .cotrain import (
    Ensemble,
    EnsembleMember,
    ExternalMember,
    distill_labels,
    read_distant_records,
    run_cascade,
    write_distant_csv,
)
from .errors import ConfigError, InputError, ScorerError
from .labels import LEVEL_CLASSES, LEVELS
from .manifest import build_manifest, hash_files, write_manifest
from .models.base import DISCRETE, ModelPrediction
from .models.external import ExternalScorer
from .models.lexicon import LexiconModel
from .models.linear import LinearConfig, linear_train, linear_train_curriculum
from .models.pmi import pmi_train
from .models.store import load_model, save_model

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_PROTOCOL = 3
EXIT_INTERNAL = 4

DEFAULT_SEED = 13241

ENSEMBLE_FILE = "ensemble.json"
A_DETAIL_FILE = "level_a_models.csv"


def _load_cfg(args) -> dict[str, str]:
    return load_config(args.config) if args.config else {}


def _print_seed(seed: int) -> None:
    print(f"seed: {seed}")


# ---------------------------------------------------------------------------
# ingest
# ---------------------------------------------------------------------------


def cmd_ingest(args) -> int:
    cfg = _load_cfg(args)
    _print_seed(args.seed)
    counts = {"accepted": 0, "too_short": 0, "too_few_words": 0, "url": 0, "malformed": 0}
    out_path = Path(args.output)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with open(args.input, encoding="utf-8") as fin, open(
        out_path, "w", encoding="utf-8"
    ) as fout:
        for line in fin:
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                id_, raw = obj["id"], obj["text"]
                if not isinstance(id_, str) or not isinstance(raw, str):
                    raise TypeError
            except (json.JSONDecodeError, KeyError, TypeError):
                counts["malformed"] += 1
                continue
            text = corpus.anonymize(raw)
            decision = corpus.filter_raw(text)
            if not decision.keep:
                counts[decision.reason] += 1
                continue
            counts["accepted"] += 1
            fout.write(json.dumps({"id": id_, "text": text}, ensure_ascii=False) + "\n")
    report_path = out_path.with_suffix(out_path.suffix + ".report.json")
    report_path.write_text(json.dumps(counts, indent=2) + "\n", encoding="utf-8")
    manifest = build_manifest(
        command="ingest",
        argv=sys.argv[1:],
        seed=args.seed,
        config=cfg,
        inputs=hash_files([args.input]),
        outputs=hash_files([out_path]),
        extra={"stats": counts},
    )
    write_manifest(out_path.with_suffix(out_path.suffix + ".manifest.json"), manifest)
    rejected = sum(v for k, v in counts.items() if k not in ("accepted",))
    print(f"accepted: {counts['accepted']}  rejected: {rejected}")
    for reason in ("too_short", "too_few_words", "url", "malformed"):
        print(f"  {reason}: {counts[reason]}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# train
# ---------------------------------------------------------------------------


def _pmi_orders(cfg) -> tuple[int, ...]:
    raw = cfg.get("pmi.orders", "1,2")
    try:
        return tuple(int(x) for x in raw.split(","))
    except ValueError as exc:
        raise ConfigError(f"pmi.orders: bad value {raw!r}") from exc


def _parse_gold_file(path) -> list[corpus.LabeledInstance]:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise InputError(f"cannot read gold file {path}: {exc}") from exc
    return corpus.parse_gold_tsv(data)


def _with_level(items, level):
    return [it for it in items if it.label.at_level(level) is not None]


def cmd_train(args) -> int:
    cfg = _load_cfg(args)
    _print_seed(args.seed)
    level = args.level
    gold = _with_level(_parse_gold_file(args.gold), level)
    if args.kind != "lexicon":
        present = {it.label.at_level(level) for it in gold}
        missing = set(LEVEL_CLASSES[level]) - present
        if missing:
            raise InputError(
                f"level-{level} training data is missing class(es): {sorted(missing)}"
            )
    if cfg_bool(cfg, "train.upsample", False):
        gold = select.upsample_balance(gold, level, args.seed)
    weights = select.class_weights(level) if cfg_bool(cfg, "train.class_weights", False) else None

    if args.kind == "pmi":
        model = pmi_train(
            gold,
            level,
            min_count=cfg_int(cfg, "pmi.min_count", 5),
            smoothing=cfg_float(cfg, "pmi.smoothing", 0.01),
            orders=_pmi_orders(cfg),
            temperature=cfg_float(cfg, "pmi.temperature", 10.0),
        )
    elif args.kind == "linear":
        lconfig = LinearConfig.for_level(
            level,
            dim=cfg_int(cfg, "linear.dim", 50),
            epochs=cfg_int(cfg, "linear.epochs", 5),
            buckets=cfg_int(cfg, "linear.buckets", 1 << 21),
            seed=args.seed,
        )
        if "linear.lr" in cfg:
            lconfig = LinearConfig(
                ngram_order=lconfig.ngram_order,
                learning_rate=cfg_float(cfg, "linear.lr", lconfig.learning_rate),
                epochs=lconfig.epochs,
                dim=lconfig.dim,
                buckets=lconfig.buckets,
                seed=lconfig.seed,
            )
        if args.distant:
            distant = _with_level(_parse_gold_file(args.distant), level)
            schedule = select.build_curriculum(
                level, cfg_phases(cfg, f"curriculum.{level}")
            )
            model = linear_train_curriculum(
                {select.GOLD: gold, select.DISTANT: distant},
                level,
                schedule,
                lconfig,
                class_weights=weights,
            )
        else:
            model = linear_train(gold, level, lconfig, class_weights=weights)
    else:  # lexicon
        if level != "A":
            raise InputError("the lexicon baseline only supports level A")
        model = LexiconModel()

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_model(out, model)
    inputs = hash_files([args.gold])
    if args.distant:
        inputs.update(hash_files([args.distant]))
    manifest = build_manifest(
        command="train",
        argv=sys.argv[1:],
        seed=args.seed,
        config=cfg,
        inputs=inputs,
        models=hash_files([out]),
        extra={"level": level, "kind": args.kind, "training_size": len(gold)},
    )
    write_manifest(out.with_suffix(out.suffix + ".manifest.json"), manifest)
    print(f"trained {args.kind} model for level {level} on {len(gold)} instances -> {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# label
# ---------------------------------------------------------------------------


def _load_members(args) -> list:
    members = []
    native: dict[str, dict[str, object]] = {}
    order: list[str] = []
    for entry in args.model or []:
        name, _, path = entry.rpartition("=")
        if not name:
            name = Path(path).stem
        model = load_model(path)
        slot = native.setdefault(name, {})
        if name not in order:
            order.append(name)
        if model.level in slot:
            raise InputError(f"member {name!r} already has a level-{model.level} model")
        slot[model.level] = model
    for name in order:
        members.append(EnsembleMember(name, DISCRETE, native[name]))
    for command in args.scorer_cmd or []:
        members.append(ExternalMember(ExternalScorer.from_command(command, timeout=args.scorer_timeout)))
    for endpoint in args.scorer_tcp or []:
        host, _, port = endpoint.rpartition(":")
        try:
            members.append(
                ExternalMember(
                    ExternalScorer.from_tcp(host, int(port), timeout=args.scorer_timeout)
                )
            )
        except ValueError as exc:
            raise InputError(f"bad TCP endpoint {endpoint!r}") from exc
    return members


def _read_corpus(path) -> list[corpus.Instance]:
    malformed = []
    with open(path, encoding="utf-8") as f:
        instances = list(corpus.iter_unlabeled_jsonl(f, on_malformed=malformed.append))
    if malformed:
        print(f"warning: skipped {len(malformed)} malformed corpus lines", file=sys.stderr)
    return instances


def cmd_label(args) -> int:
    cfg = _load_cfg(args)
    _print_seed(args.seed)
    members = _load_members(args)
    try:
        ensemble = Ensemble(members)
        instances = _read_corpus(args.corpus)
        records, a_detail = run_cascade(
            ensemble,
            instances,
            threads=args.threads,
            batch_size=cfg_int(cfg, "label.batch_size", 64),
            gate_b_threshold=cfg_float(cfg, "gate.b.threshold", 0.5),
            gate_c_tin=cfg_float(cfg, "gate.c.tin", 0.5),
            gate_c_std=cfg_float(cfg, "gate.c.std", 0.25),
            return_a_predictions=True,
        )
    finally:
        for member in members:
            closer = getattr(member, "close", None)
            if closer is not None:
                closer()
    outdir = Path(args.out)
    paths = write_distant_csv(records, outdir)

    a_members = ensemble.members_for("A")
    detail_path = outdir / A_DETAIL_FILE
    with open(detail_path, "w", encoding="utf-8") as f:
        cols = ["id"]
        for m in a_members:
            cols += [f"{m.name}_off", f"{m.name}_hard"]
        f.write(",".join(cols) + "\n")
        for id_ in sorted(a_detail):
            cells = [id_]
            for pred in a_detail[id_]:
                cells += [f"{pred.confidences['OFF']:.6f}", pred.hard_label]
            f.write(",".join(cells) + "\n")
    ensemble_path = outdir / ENSEMBLE_FILE
    ensemble_path.write_text(
        json.dumps(
            [
                {"name": m.name, "kind": m.kind, "levels": sorted(m.levels)}
                for m in members
            ],
            indent=2,
        )
        + "\n",
        encoding="utf-8",
    )

    outputs = hash_files(list(paths.values()) + [detail_path, ensemble_path])
    manifest = build_manifest(
        command="label",
        argv=sys.argv[1:],
        seed=args.seed,
        config=cfg,
        inputs=hash_files([args.corpus]),
        models=hash_files(args.model and [s.rpartition("=")[2] for s in args.model] or []),
        outputs=outputs,
        extra={
            "threads": args.threads,
            "counts": {
                "A": len(records),
                "B": sum(r.level_b is not None for r in records),
                "C": sum(r.level_c is not None for r in records),
            },
        },
    )
    write_manifest(outdir / "manifest.json", manifest)
    print(
        f"labeled {len(records)} instances -> {outdir} "
        f"(B-scored {manifest['counts']['B']}, C-scored {manifest['counts']['C']})"
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# select
# ---------------------------------------------------------------------------


def _policy_from_cfg(level, cfg) -> select.SelectionPolicy:
    if level == "A":
        conds = (
            select.HalfLine("OFF", "below", cfg_float(cfg, "select.a.low", 0.2)),
            select.HalfLine("OFF", "above", cfg_float(cfg, "select.a.high", 0.7)),
        )
    elif level == "B":
        conds = (
            select.HalfLine("UNT", "below", cfg_float(cfg, "select.b.low", 0.3)),
            select.HalfLine("UNT", "above", cfg_float(cfg, "select.b.high", 0.7)),
        )
    else:
        conds = (
            select.HalfLine("IND", "above", cfg_float(cfg, "select.c.ind", 0.8)),
            select.HalfLine("GRP", "above", cfg_float(cfg, "select.c.grp", 0.7)),
            select.HalfLine("OTH", "above", cfg_float(cfg, "select.c.oth", 0.65)),
        )
    return select.SelectionPolicy(level, conds)


def cmd_select(args) -> int:
    cfg = _load_cfg(args)
    _print_seed(args.seed)
    level = args.level
    records = read_distant_records(args.scores)
    if level == "B":
        records = [r for r in records if r.level_b is not None]
    elif level == "C":
        records = [r for r in records if r.level_c is not None]
    policy = _policy_from_cfg(level, cfg)
    chosen = select.select_training(records, level, policy)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text("".join(f"{id_}\n" for id_ in sorted(chosen)), encoding="utf-8")
    outputs = hash_files([out])

    if args.emit_tsv:
        if not args.corpus:
            raise InputError("--emit-tsv needs --corpus to recover instance texts")
        by_id = {inst.id: inst for inst in _read_corpus(args.corpus)}
        a_thr = cfg_float(cfg, "distill.a", 0.5)
        b_thr = cfg_float(cfg, "distill.b", 0.5)
        items = []
        for record in records:
            if record.instance_id not in chosen:
                continue
            inst = by_id.get(record.instance_id)
            if inst is None:
                raise InputError(f"corpus is missing selected id {record.instance_id!r}")
            label = distill_labels(record, a_threshold=a_thr, b_threshold=b_thr)
            items.append(corpus.LabeledInstance(inst, label))
        Path(args.emit_tsv).write_bytes(corpus.write_gold_tsv(items))
        outputs.update(hash_files([args.emit_tsv]))

    manifest = build_manifest(
        command="select",
        argv=sys.argv[1:],
        seed=args.seed,
        config=cfg,
        inputs=hash_files(
            [Path(args.scores) / name for name in ("level_a.csv", "level_b.csv", "level_c.csv")]
        ),
        outputs=outputs,
        extra={"level": level, "selected": len(chosen)},
    )
    write_manifest(out.with_suffix(out.suffix + ".manifest.json"), manifest)
    print(f"selected {len(chosen)} of {len(records)} records at level {level}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# partition
# ---------------------------------------------------------------------------


def _read_a_detail(scores_dir):
    """Rebuild per-member level-A predictions from the label-stage detail file."""
    scores_dir = Path(scores_dir)
    try:
        meta = json.loads((scores_dir / ENSEMBLE_FILE).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read {ENSEMBLE_FILE}: {exc}") from exc
    a_members = [m for m in meta if "A" in m["levels"]]
    preds: dict[str, list[ModelPrediction]] = {}
    with open(scores_dir / A_DETAIL_FILE, encoding="utf-8") as f:
        header = f.readline().strip().split(",")
        expected = ["id"]
        for m in a_members:
            expected += [f"{m['name']}_off", f"{m['name']}_hard"]
        if header != expected:
            raise InputError(f"unexpected {A_DETAIL_FILE} header: {header}")
        for line in f:
            cells = line.strip().split(",")
            id_ = cells[0]
            row = []
            for i, m in enumerate(a_members):
                off = float(cells[1 + 2 * i])
                hard = cells[2 + 2 * i]
                row.append(
                    ModelPrediction(
                        model_name=m["name"],
                        kind=m["kind"],
                        level="A",
                        confidences={"OFF": off, "NOT": 1.0 - off},
                        hard_label=hard,
                    )
                )
            preds[id_] = row
    return preds


def cmd_partition(args) -> int:
    cfg = _load_cfg(args)
    _print_seed(args.seed)
    thresholds = select.PartitionThresholds(
        easy_off=cfg_float(cfg, "partition.easy_off", 0.8),
        hard_off=cfg_float(cfg, "partition.hard_off", 0.5),
        hard_not=cfg_float(cfg, "partition.hard_not", 0.5),
        easy_not_first=cfg_float(cfg, "partition.easy_not_first", 0.2),
        easy_not_rest=cfg_float(cfg, "partition.easy_not_rest", 0.8),
    )
    preds = _read_a_detail(args.scores)
    assignments = {}
    for id_, row in preds.items():
        bucket = select.partition_easy_hard(row, thresholds)
        if bucket is not None:
            assignments[id_] = bucket
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(select.write_buckets_csv(assignments), encoding="utf-8")
    manifest = build_manifest(
        command="partition",
        argv=sys.argv[1:],
        seed=args.seed,
        config=cfg,
        inputs=hash_files([Path(args.scores) / A_DETAIL_FILE]),
        outputs=hash_files([out]),
        extra={"bucketed": len(assignments), "total": len(preds)},
    )
    write_manifest(out.with_suffix(out.suffix + ".manifest.json"), manifest)
    print(f"bucketed {len(assignments)} of {len(preds)} instances -> {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# eval
# ---------------------------------------------------------------------------


def _read_pred_csv(path) -> dict[str, str]:
    preds = {}
    with open(path, encoding="utf-8") as f:
        header = f.readline().strip()
        if header != "id,label":
            raise InputError(f"prediction CSV must start with `id,label`, got {header!r}")
        for line in f:
            line = line.strip()
            if not line:
                continue
            id_, label = line.split(",")
            preds[id_] = label
    return preds


def cmd_eval(args) -> int:
    cfg = _load_cfg(args)
    _print_seed(args.seed)
    level = args.level
    gold_items = _with_level(_parse_gold_file(args.gold), level)
    gold = {it.instance.id: it.label.at_level(level) for it in gold_items}
    if args.pred:
        pred = _read_pred_csv(args.pred)
    elif args.model:
        model = load_model(args.model)
        if model.level != level:
            raise InputError(f"model is for level {model.level}, not {level}")
        pred = {
            it.instance.id: model.predict(it.instance).hard_label for it in gold_items
        }
    else:
        raise InputError("eval needs --pred or --model")

    if args.buckets:
        buckets = select.read_buckets_csv(Path(args.buckets).read_text(encoding="utf-8"))
        buckets = {i: b for i, b in buckets.items() if i in gold}
        reports = evaluate.evaluate_buckets(gold, pred, buckets, level=level)
    else:
        reports = [evaluate.macro_f1(gold, pred, level=level)]
    for report in reports:
        print(evaluate.render_report(report), end="")
    if args.out:
        Path(args.out).write_text(
            json.dumps([r.to_json_dict() for r in reports], indent=2) + "\n",
            encoding="utf-8",
        )
        manifest = build_manifest(
            command="eval",
            argv=sys.argv[1:],
            seed=args.seed,
            config=cfg,
            inputs=hash_files([args.gold]),
            outputs=hash_files([args.out]),
        )
        write_manifest(Path(args.out).with_suffix(".manifest.json"), manifest)
    return EXIT_OK


# ---------------------------------------------------------------------------
# hist
# ---------------------------------------------------------------------------


def _iter_scores(path, column):
    with open(path, encoding="utf-8") as f:
        if column:
            header = f.readline().strip().split(",")
            try:
                idx = header.index(column)
            except ValueError:
                raise InputError(f"column {column!r} not in {header}") from None
            for line in f:
                line = line.strip()
                if line:
                    yield float(line.split(",")[idx])
        else:
            for line in f:
                line = line.strip()
                if line:
                    yield float(line)


def cmd_hist(args) -> int:
    cfg = _load_cfg(args)
    _print_seed(args.seed)
    hist = evaluate.score_histogram(
        _iter_scores(args.input, args.column), bins=args.bins, lo=args.lo, hi=args.hi
    )
    print(hist.render_text(), end="")
    if args.out:
        Path(args.out).write_text(hist.to_csv(), encoding="utf-8")
        manifest = build_manifest(
            command="hist",
            argv=sys.argv[1:],
            seed=args.seed,
            config=cfg,
            inputs=hash_files([args.input]),
            outputs=hash_files([args.out]),
        )
        write_manifest(Path(args.out).with_suffix(".manifest.json"), manifest)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser / entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="democo",
        description="Democratic co-training pipeline for hierarchical offensive-language labeling.",
    )
    parser.add_argument("--version", action="version", version=f"democo {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=DEFAULT_SEED)
        p.add_argument("--config", default=None, help="key=value config file")

    p = sub.add_parser("ingest", help="filter, anonymize, and store a raw corpus")
    common(p)
    p.add_argument("input", help="raw corpus: one JSON {id, text} per line")
    p.add_argument("output", help="accepted-instance JSONL path")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("train", help="train a native model on a gold TSV")
    common(p)
    p.add_argument("gold", help="gold TSV file")
    p.add_argument("--level", choices=LEVELS, required=True)
    p.add_argument("--kind", choices=("pmi", "linear", "lexicon"), required=True)
    p.add_argument("--out", required=True, help="model output path")
    p.add_argument("--distant", default=None, help="distilled TSV for curriculum phases")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("label", help="run the cascade over an ingested corpus")
    common(p)
    p.add_argument("corpus", help="ingested corpus JSONL")
    p.add_argument("--model", action="append", help="NAME=PATH (repeatable)")
    p.add_argument("--scorer-cmd", action="append", help="external scorer command line")
    p.add_argument("--scorer-tcp", action="append", help="external scorer HOST:PORT")
    p.add_argument("--scorer-timeout", type=float, default=30.0)
    p.add_argument("--out", required=True, help="output directory for score files")
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=cmd_label)

    p = sub.add_parser("select", help="select confident training ids from scores")
    common(p)
    p.add_argument("--scores", required=True, help="label-stage output directory")
    p.add_argument("--level", choices=LEVELS, required=True)
    p.add_argument("--out", required=True, help="selected-id list path")
    p.add_argument("--emit-tsv", default=None, help="also write a distilled gold-format TSV")
    p.add_argument("--corpus", default=None, help="ingested corpus (for --emit-tsv)")
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("partition", help="assign easy/hard difficulty buckets")
    common(p)
    p.add_argument("--scores", required=True, help="label-stage output directory")
    p.add_argument("--out", required=True, help="bucket CSV path")
    p.set_defaults(func=cmd_partition)

    p = sub.add_parser("eval", help="score predictions against a gold TSV")
    common(p)
    p.add_argument("--gold", required=True)
    p.add_argument("--level", choices=LEVELS, required=True)
    p.add_argument("--pred", default=None, help="prediction CSV (id,label)")
    p.add_argument("--model", default=None, help="model file to predict with")
    p.add_argument("--buckets", default=None, help="bucket CSV for easy/hard slices")
    p.add_argument("--out", default=None, help="JSON report path")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("hist", help="histogram of a score column or list")
    common(p)
    p.add_argument("input")
    p.add_argument("--column", default=None, help="CSV column (default: bare floats)")
    p.add_argument("--bins", type=int, default=20)
    p.add_argument("--lo", type=float, default=0.0)
    p.add_argument("--hi", type=float, default=1.0)
    p.add_argument("--out", default=None, help="CSV output path")
    p.set_defaults(func=cmd_hist)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ScorerError as exc:
        print(f"scorer error: {exc}", file=sys.stderr)
        return EXIT_PROTOCOL
    except Exception:
        traceback.print_exc()
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
