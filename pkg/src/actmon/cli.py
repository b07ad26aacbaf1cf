"""Command-line pipeline: toy training, trace extraction, monitor
build/query, gamma sweeps and monitor statistics.

Every command is deterministic given identical inputs and seeds.  Exit
codes: 0 success, 1 validation or schema problem, 2 I/O problem.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import evaluation, monitor as monitor_mod, network
from .bdd import DEFAULT_VAR_CAP
from .errors import ActmonError, SchemaError
from .patterns import identity_selection, score_neurons, select_top_fraction
from .traces import TraceHeader, TraceRecord, read_traces, write_traces


def cmd_train_toy(args) -> None:
    x, y = network.make_blobs(seed=args.seed, per_class=args.per_class)
    model = network.train_toy(x, y, seed=args.seed, epochs=args.epochs)
    network.save_model(model, args.out)
    accuracy = network.evaluate_accuracy(model, x, y)
    print(f"wrote model to {args.out}")
    print(f"training accuracy {accuracy:.4f} "
          f"({len(y)} samples, {args.epochs} epochs, seed {args.seed})")


def _load_dataset(args) -> tuple[np.ndarray, np.ndarray]:
    if args.data:
        with open(args.data, "r", encoding="utf-8") as fh:
            try:
                payload = json.load(fh)
            except json.JSONDecodeError as exc:
                raise SchemaError(
                    f"dataset file is not valid JSON: {exc}") from exc
        try:
            x = np.asarray(payload["inputs"], dtype=np.float64)
            y = np.asarray(payload["labels"], dtype=np.int64)
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"malformed dataset file: {exc}") from exc
        if x.ndim != 2 or x.shape[0] != y.shape[0]:
            raise SchemaError("dataset inputs/labels shapes disagree")
        return x, y
    return network.make_blobs(
        seed=args.seed, per_class=args.per_class, offset=args.shift)


def cmd_extract(args) -> None:
    model = network.load_model(args.model)
    if not model.is_relu_layer(args.layer):
        raise ValueError(f"layer {args.layer} is not a ReLU layer")
    x, y = _load_dataset(args)
    records = []
    for i, (row, label) in enumerate(zip(x, y)):
        trace = network.forward(model, row)
        records.append(TraceRecord(
            id=f"s{i}",
            true_label=int(label),
            pred_label=network.decide(trace.final),
            activations=trace.outputs[args.layer],
        ))
    header = TraceHeader(
        layer=args.layer,
        width=model.layer_width(args.layer),
        classes=model.class_count,
    )
    write_traces(args.out, header, records)
    print(f"wrote {len(records)} traces to {args.out} "
          f"(layer {args.layer}, width {header.width})")


def _parse_int_list(text: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part != ""]
    except ValueError as exc:
        raise ValueError(f"expected comma-separated integers, got {text!r}") \
            from exc


def _parse_gammas(text: str) -> list[int]:
    values = _parse_int_list(text)
    if len(values) == 1:  # single value means a full sweep 0..gamma
        values = list(range(values[0] + 1))
    return values


def _make_selection(args, header, records, classes):
    """Selection for build/sweep: gradient-ranked when a model is given,
    identity order otherwise."""
    if args.model is None:
        if args.select_frac is not None and args.select_frac < 1.0:
            raise ValueError(
                "--select-frac below 1.0 needs --model for gradient scores")
        return identity_selection(header.width, layer=header.layer)
    model = network.load_model(args.model)
    if not model.is_relu_layer(header.layer) \
            or model.layer_width(header.layer) != header.width:
        raise ValueError(
            f"model layer {header.layer} does not match the trace header")
    monitored = classes if classes else sorted({r.true_label for r in records})
    per_class = [score_neurons(model, records, header.layer, c)
                 for c in monitored]
    # one shared store needs one variable order; averaging the per-class
    # scores keeps neurons that matter to any monitored class
    scores = np.mean(per_class, axis=0)
    fraction = 1.0 if args.select_frac is None else args.select_frac
    return select_top_fraction(scores, fraction, layer=header.layer)


def cmd_build(args) -> None:
    header, records = read_traces(args.traces)
    classes = _parse_int_list(args.classes) if args.classes else None
    selection = _make_selection(args, header, records, classes)
    built = monitor_mod.build(
        records, selection, args.gamma, classes=classes,
        var_cap=args.var_cap)
    monitor_mod.save_monitor(built, args.out)
    print(f"wrote monitor to {args.out} "
          f"(classes {built.classes}, gamma {built.gamma}, "
          f"{built.width} monitored neurons)")


def cmd_query(args) -> None:
    mon = monitor_mod.load_monitor(args.monitor)
    header, records = read_traces(args.traces)
    counts = {v: 0 for v in monitor_mod.Verdict}
    with open(args.out, "w", encoding="utf-8") as fh:
        for record in records:
            verdict = monitor_mod.query(
                mon, record.activations, record.pred_label)
            counts[verdict] += 1
            fh.write(json.dumps(
                {"id": record.id, "verdict": verdict.value},
                separators=(",", ":")) + "\n")
    total = len(records)
    print(f"wrote {total} verdicts to {args.out}")
    for verdict in monitor_mod.Verdict:
        print(f"{verdict.value}: {counts[verdict]}"
              + (f" ({counts[verdict] / total:.2%})" if total else ""))


def cmd_sweep(args) -> None:
    header, train = read_traces(args.traces)
    eval_header, eval_records = read_traces(args.eval)
    if eval_header.width != header.width:
        raise ValueError(
            f"eval trace width {eval_header.width} does not match "
            f"training trace width {header.width}")
    classes = _parse_int_list(args.classes) if args.classes else None
    gammas = _parse_gammas(args.gamma)
    selection = _make_selection(args, header, train, classes)
    rows = evaluation.gamma_sweep(
        train, eval_records, selection, gammas, classes=classes)
    evaluation.write_report_csv(args.out, rows)
    print(f"wrote report to {args.out}")
    print(",".join(evaluation.REPORT_COLUMNS))
    for row in rows:
        out_rate = "-" if row.out_rate is None else f"{row.out_rate:.6f}"
        precision = "-" if row.misclassified_within_out_rate is None \
            else f"{row.misclassified_within_out_rate:.6f}"
        print(f"{row.gamma},{row.n_total},{row.n_out_of_pattern},{out_rate},"
              f"{row.n_out_misclassified},{precision},"
              f"{row.overall_misclassification_rate:.6f},{row.n_nozone}")
    choice = evaluation.choose_gamma(rows)
    tag = "meets" if choice.qualified else "best effort, does not meet"
    print(f"suggested gamma: {choice.gamma} ({tag} the default "
          f"precision/warning-rate thresholds)")


def cmd_stats(args) -> None:
    mon = monitor_mod.load_monitor(args.monitor)
    print(f"gamma: {mon.gamma}")
    print(f"monitored layer: {mon.selection.layer}")
    print(f"monitored neurons ({mon.width} of {mon.selection.layer_width}): "
          f"{list(mon.selection.indices)}")
    print(f"store nodes: {len(mon.store)}")
    for c in mon.classes:
        zone = mon.zones[c]
        print(f"class {c}: sat_count {mon.store.sat_count(zone.root)}, "
              f"nodes {mon.store.node_count(zone.root)}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="actmon",
        description="Activation-pattern runtime monitors for ReLU "
                    "classifiers")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train-toy", help="train a small classifier on the "
                       "built-in blobs dataset")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epochs", type=int, default=40)
    p.add_argument("--per-class", type=int, default=500)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train_toy)

    p = sub.add_parser("extract", help="run data through a model and record "
                       "monitored-layer traces")
    p.add_argument("--model", required=True)
    p.add_argument("--layer", type=int, required=True,
                   help="0-based index of the ReLU layer to record")
    p.add_argument("--data", help="dataset JSON with inputs/labels; "
                   "defaults to built-in blobs")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--per-class", type=int, default=500)
    p.add_argument("--shift", type=float, default=0.0,
                   help="translate blob samples by this distance")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("build", help="build a monitor from training traces")
    p.add_argument("--traces", required=True)
    p.add_argument("--gamma", type=int, required=True)
    p.add_argument("--model", help="enables gradient-based neuron selection")
    p.add_argument("--select-frac", type=float,
                   help="fraction of neurons to monitor, in (0, 1]")
    p.add_argument("--classes", help="comma-separated class indices "
                   "(default: all classes present)")
    p.add_argument("--var-cap", type=int, default=DEFAULT_VAR_CAP)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("query", help="judge traces against a monitor")
    p.add_argument("--monitor", required=True)
    p.add_argument("--traces", required=True)
    p.add_argument("--out", required=True, help="verdict JSONL output")
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("sweep", help="evaluate nested monitors across "
                       "gamma levels")
    p.add_argument("--traces", required=True, help="training traces")
    p.add_argument("--eval", required=True, help="labeled evaluation traces")
    p.add_argument("--gamma", required=True,
                   help="max gamma (e.g. 3) or comma list (e.g. 0,1,3)")
    p.add_argument("--model", help="enables gradient-based neuron selection")
    p.add_argument("--select-frac", type=float)
    p.add_argument("--classes")
    p.add_argument("--out", required=True, help="report CSV output")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("stats", help="print monitor statistics")
    p.add_argument("--monitor", required=True)
    p.set_defaults(func=cmd_stats)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (ValueError, ActmonError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
