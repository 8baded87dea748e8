"""Command-line interface wiring the library into the experiment protocol.

Subcommands: ``synth`` (generate a farm), ``train`` (baseline or
multi-asset source model), ``transfer`` (threshold / decoder / ae),
``evaluate`` (compare models against a baseline on an evaluation
window), ``case-study`` (per-timestamp trace).  Logs go to stderr;
machine-readable outputs go to files only.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import detector, evaluate, figures, ingest, synth, transfer
from .errors import BadSpec, EmptyResult, IoFailure, WindaeError
from .timebase import GRID_STEP, add_months, parse_timestamp

log = logging.getLogger("windae")


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        stream=sys.stderr, level=logging.INFO, format="%(levelname)s %(message)s"
    )
    try:
        return args.func(args)
    except WindaeError as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="windae",
        description="Autoencoder anomaly detection for wind-turbine SCADA data "
        "with cross-turbine transfer learning.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_synth = sub.add_parser("synth", help="generate a synthetic SCADA farm")
    p_synth.add_argument("--spec", required=True, help="farm spec JSON file")
    p_synth.add_argument("--out", required=True, help="output directory")
    p_synth.add_argument("--seed", type=int, default=None, help="override the spec seed")
    p_synth.set_defaults(func=cmd_synth)

    p_train = sub.add_parser("train", help="train a baseline or multi-asset model")
    p_train.add_argument("--data", nargs="+", required=True, help="turbine CSV file(s)")
    p_train.add_argument("--schema", required=True, help="schema JSON file")
    p_train.add_argument("--config", nargs="+", required=True, help="turbine config JSON file(s)")
    p_train.add_argument("--multi", action="store_true", help="pool all turbines into one source model")
    p_train.add_argument("--hidden-sizes", default="25,10,25", help="comma-separated hidden layer widths")
    p_train.add_argument("--learning-rate", type=float, default=0.001)
    p_train.add_argument("--epochs", type=int, default=50)
    p_train.add_argument("--batch-size", type=int, default=256)
    p_train.add_argument("--seed", type=int, default=0)
    p_train.add_argument("--high-power-fraction", type=float, default=None,
                         help="override the config files' high-power fraction")
    p_train.add_argument("--start", default=None, help="training window start (ISO-8601 Z)")
    p_train.add_argument("--end", default=None, help="training window end, exclusive")
    p_train.add_argument("--model-id", default=None)
    p_train.add_argument("--out", required=True, help="output model artifact path")
    p_train.set_defaults(func=cmd_train)

    p_tl = sub.add_parser("transfer", help="transfer a source model to a target turbine")
    p_tl.add_argument("--source", required=True, help="source model artifact")
    p_tl.add_argument("--data", required=True, help="target turbine CSV")
    p_tl.add_argument("--schema", required=True)
    p_tl.add_argument("--config", required=True, help="target turbine config JSON")
    p_tl.add_argument("--method", required=True, choices=list(transfer.METHODS))
    p_tl.add_argument("--months", type=int, default=1, choices=[1, 2, 3],
                      help="tuning window length, counted back from --tune-end")
    p_tl.add_argument("--tune-end", default=None,
                      help="end of the tuning window (ISO-8601 Z); default: end of data")
    p_tl.add_argument("--epochs", type=int, default=transfer.DEFAULT_TUNE_EPOCHS)
    p_tl.add_argument("--learning-rate", type=float, default=None,
                      help="default: 0.001 for decoder, 0.0001 for ae")
    p_tl.add_argument("--seed", type=int, default=0)
    p_tl.add_argument("--high-power-fraction", type=float, default=None)
    p_tl.add_argument("--model-id", default=None)
    p_tl.add_argument("--out", required=True)
    p_tl.set_defaults(func=cmd_transfer)

    p_eval = sub.add_parser("evaluate", help="compare models on an evaluation window")
    p_eval.add_argument("--models", nargs="+", required=True, help="model artifact(s)")
    p_eval.add_argument("--data", required=True, help="target turbine CSV")
    p_eval.add_argument("--schema", required=True)
    p_eval.add_argument("--config", required=True)
    p_eval.add_argument("--baseline", default=None, help="model id of the baseline (default: first)")
    p_eval.add_argument("--start", default=None, help="evaluation window start")
    p_eval.add_argument("--end", default=None, help="evaluation window end, exclusive")
    p_eval.add_argument("--high-power-fraction", type=float, default=None)
    p_eval.add_argument("--out", required=True,
                        help="report stem; writes <out>.json, <out>.csv and <out>.png")
    p_eval.set_defaults(func=cmd_evaluate)

    p_case = sub.add_parser("case-study", help="per-timestamp score/criticality trace")
    p_case.add_argument("--model", required=True)
    p_case.add_argument("--data", required=True)
    p_case.add_argument("--schema", required=True)
    p_case.add_argument("--config", required=True)
    p_case.add_argument("--start", default=None)
    p_case.add_argument("--end", default=None)
    p_case.add_argument("--high-power-fraction", type=float, default=None)
    p_case.add_argument("--out", required=True,
                        help="trace CSV path; the figure lands next to it as .png")
    p_case.set_defaults(func=cmd_case_study)
    return parser


def cmd_synth(args) -> int:
    spec = _load_farm_spec(args.spec)
    if args.seed is not None:
        spec = dataclasses.replace(spec, seed=args.seed)
    frames, schema, configs = synth.generate_farm(spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ingest.save_schema(schema, out / "schema.json")
    for frame, config in zip(frames, configs):
        ingest.write_csv(frame, out / f"{config.turbine_id}.csv")
        ingest.save_turbine_config(config, out / f"{config.turbine_id}.config.json")
        log.info("wrote %s rows for %s", len(frame), config.turbine_id)
    log.info("farm written to %s", out)
    return 0


def cmd_train(args) -> int:
    schema = ingest.load_schema(args.schema)
    configs = [_load_config(path, args.high_power_fraction) for path in args.config]
    frames = [ingest.load_csv(path, schema) for path in args.data]
    frames = [_slice(frame, args.start, args.end) for frame in frames]
    for frame, path in zip(frames, args.data):
        if len(frame) == 0:
            raise EmptyResult(f"{path}: no rows in the training window")

    train_config = detector.TrainConfig(
        hidden_sizes=_parse_hidden(args.hidden_sizes),
        learning_rate=args.learning_rate,
        epochs=args.epochs,
        batch_size=args.batch_size,
        seed=args.seed,
        high_power_fraction=(
            args.high_power_fraction if args.high_power_fraction is not None else 0.5
        ),
    )

    if args.multi:
        if len(frames) < 2 or len(frames) != len(configs):
            raise BadSpec("--multi needs matching --data and --config lists of length >= 2")
        datasets = [
            (frame, ingest.derive_labels(frame, config))
            for frame, config in zip(frames, configs)
        ]
        model = detector.train_multi_asset(
            datasets,
            schema,
            train_config,
            source_ids=[c.turbine_id for c in configs],
            model_id=args.model_id,
        )
    else:
        if len(frames) != 1 or len(configs) != 1:
            raise BadSpec("single-asset training takes exactly one --data and one --config")
        labels = ingest.derive_labels(frames[0], configs[0])
        model = detector.train_baseline(
            frames[0],
            labels,
            schema,
            train_config,
            source_id=configs[0].turbine_id,
            model_id=args.model_id,
        )

    detector.save_model(model, args.out)
    log.info("model %s written to %s", model.model_id, args.out)
    return 0


def cmd_transfer(args) -> int:
    source = detector.load_model(args.source)
    schema = ingest.load_schema(args.schema)
    config = _load_config(args.config, args.high_power_fraction)
    frame = ingest.load_csv(args.data, schema)

    if args.tune_end is not None:
        tune_end = parse_timestamp(args.tune_end)
    else:
        tune_end = frame.timestamps[-1] + GRID_STEP
    tune_start = add_months(tune_end, -args.months)
    tuning = ingest.slice_period(frame, tune_start, tune_end)
    if len(tuning) == 0:
        raise EmptyResult("tuning window contains no rows")
    labels = ingest.derive_labels(tuning, config)

    default_id = f"{source.model_id}-to-{config.turbine_id}-{args.method}-{args.months}m"
    model_id = args.model_id or default_id
    if args.method == "threshold":
        model = transfer.transfer_threshold(source, tuning, labels, model_id=model_id)
    else:
        tl_config = transfer.TransferConfig(
            method=args.method,
            epochs=args.epochs,
            learning_rate=args.learning_rate,
            seed=args.seed,
        )
        if args.method == "decoder":
            model = transfer.transfer_decoder(source, tuning, labels, tl_config, model_id=model_id)
        else:
            model = transfer.transfer_full_ae(source, tuning, labels, tl_config, model_id=model_id)

    detector.save_model(model, args.out)
    log.info("transfer model %s written to %s", model.model_id, args.out)
    return 0


def cmd_evaluate(args) -> int:
    schema = ingest.load_schema(args.schema)
    config = _load_config(args.config, args.high_power_fraction)
    frame = _slice(ingest.load_csv(args.data, schema), args.start, args.end)

    models = [detector.load_model(path) for path in args.models]
    baseline_id = args.baseline
    if baseline_id is not None:
        ids = [m.model_id for m in models]
        if baseline_id not in ids:
            stems = [Path(p).stem for p in args.models]
            if baseline_id in stems:
                baseline_id = ids[stems.index(baseline_id)]

    report = evaluate.compare_models(models, frame, config, baseline_id)
    stem = Path(args.out)
    evaluate.write_comparison_json(report, stem.with_suffix(".json"))
    evaluate.write_comparison_csv(report, stem.with_suffix(".csv"))
    figures.render_comparison(report, stem.with_suffix(".png"))
    for row in report.rows:
        log.info(
            "%s: f_half=%.4f delta=%+.4f precision=%.4f recall=%.4f",
            row.model_id, row.f_half, row.delta_f_half, row.precision, row.recall,
        )
    log.info("report written to %s.{json,csv,png}", stem)
    return 0


def cmd_case_study(args) -> int:
    schema = ingest.load_schema(args.schema)
    config = _load_config(args.config, args.high_power_fraction)
    frame = _slice(ingest.load_csv(args.data, schema), args.start, args.end)
    if len(frame) == 0:
        raise EmptyResult("case-study window contains no rows")
    model = detector.load_model(args.model)

    trace = evaluate.case_study_report(model, frame, config)
    out = Path(args.out)
    evaluate.write_case_study_csv(trace, out)
    figures.render_case_study(trace, out.with_suffix(".png"))
    n_detections = int(np.sum(trace.detected))
    log.info(
        "trace written to %s (%d rows, %d detections, peak criticality %d)",
        out, len(frame), n_detections, int(trace.criticality.max(initial=0)),
    )
    return 0


def _load_farm_spec(path) -> synth.FarmSpec:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise IoFailure(f"{path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise BadSpec(f"{path}: not valid JSON") from exc
    if not isinstance(data, dict):
        raise BadSpec(f"{path}: farm spec must be a JSON object")
    known = {f.name for f in dataclasses.fields(synth.FarmSpec)}
    unknown = set(data) - known
    if unknown:
        raise BadSpec(f"{path}: unknown farm spec fields {sorted(unknown)}")
    try:
        return synth.FarmSpec(**data)
    except TypeError as exc:
        raise BadSpec(f"{path}: {exc}") from exc


def _load_config(path, high_power_fraction) -> ingest.TurbineConfig:
    config = ingest.load_turbine_config(path)
    if high_power_fraction is not None:
        config = dataclasses.replace(config, high_power_fraction=high_power_fraction)
    return config


def _parse_hidden(text: str) -> tuple[int, ...]:
    try:
        sizes = tuple(int(part) for part in text.split(",") if part.strip())
    except ValueError as exc:
        raise BadSpec(f"bad --hidden-sizes {text!r}") from exc
    if not sizes:
        raise BadSpec("--hidden-sizes must name at least one layer")
    return sizes


def _slice(frame, start, end):
    if start is None and end is None:
        return frame
    start_ts = parse_timestamp(start) if start else frame.timestamps[0]
    end_ts = parse_timestamp(end) if end else frame.timestamps[-1] + GRID_STEP
    return ingest.slice_period(frame, start_ts, end_ts)


if __name__ == "__main__":
    sys.exit(main())
