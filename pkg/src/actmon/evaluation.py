"""Warning-rate metrics, gamma sweeps and the stopping heuristic.

On a labeled evaluation set we count, per enlargement level gamma, how
often the monitor flags a sample (the pattern is outside the predicted
class's zone) and how often flagged samples were actually misclassified.
The first ratio is the warning rate a deployment would observe; the second
estimates the precision of those warnings.  Sweeping gamma trades one
against the other: every enlargement step can only shrink the set of
flagged samples.

Note the precision figure transfers from the evaluation set to operation
only under the assumption that the input distribution does not shift;
nothing here can validate that assumption.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Iterable, Sequence

from .bdd import BddStore
from .monitor import ComfortZone, Monitor, Verdict, _zero_zones, enlarge_once, query
from .patterns import NeuronSelection
from .traces import TraceRecord


@dataclass
class EvalRow:
    """One gamma level's counts and rates on a fixed evaluation set.

    Rates that would divide by zero are ``None``: the precision of warnings
    when nothing was flagged, the warning rate when every record hit an
    unmonitored class.  Records whose predicted class is unmonitored are
    excluded from both sides of the warning-rate ratio and reported in
    ``n_nozone``.
    """

    gamma: int
    n_total: int
    n_out_of_pattern: int
    out_rate: float | None
    n_out_misclassified: int
    misclassified_within_out_rate: float | None
    overall_misclassification_rate: float
    n_nozone: int


@dataclass
class GammaChoice:
    """Result of the stopping heuristic; ``qualified`` is False when no
    level met both thresholds and ``gamma`` is the fallback."""

    gamma: int
    qualified: bool


def evaluate(monitor: Monitor, eval_traces: Sequence[TraceRecord]) -> EvalRow:
    """Compute one report row for a monitor on labeled traces."""
    traces = list(eval_traces)
    if not traces:
        raise ValueError("cannot evaluate on an empty trace set")
    n_out = n_out_mis = n_nozone = n_mis = 0
    for record in traces:
        misclassified = record.pred_label != record.true_label
        n_mis += misclassified
        verdict = query(monitor, record.activations, record.pred_label)
        if verdict is Verdict.NO_ZONE:
            n_nozone += 1
        elif verdict is Verdict.OUT_OF_ZONE:
            n_out += 1
            n_out_mis += misclassified
    n_total = len(traces)
    n_judged = n_total - n_nozone
    return EvalRow(
        gamma=monitor.gamma,
        n_total=n_total,
        n_out_of_pattern=n_out,
        out_rate=n_out / n_judged if n_judged else None,
        n_out_misclassified=n_out_mis,
        misclassified_within_out_rate=n_out_mis / n_out if n_out else None,
        overall_misclassification_rate=n_mis / n_total,
        n_nozone=n_nozone,
    )


def gamma_sweep(traces_train: Sequence[TraceRecord],
                traces_eval: Sequence[TraceRecord],
                selection: NeuronSelection,
                gammas: Sequence[int],
                classes: Iterable[int] | None = None) -> list[EvalRow]:
    """Evaluate one family of nested monitors at several gamma levels.

    The gamma-0 zones are built once and enlarged incrementally, so the
    monitors form a chain (each level's zones contain the previous
    level's), and the reported warning rate is non-increasing in gamma.
    """
    gammas = list(gammas)
    if not gammas or any(g < 0 for g in gammas):
        raise ValueError("gammas must be a nonempty list of levels >= 0")
    if sorted(gammas) != gammas or len(set(gammas)) != len(gammas):
        raise ValueError("gammas must be strictly ascending")
    train = list(traces_train)
    if not train:
        raise ValueError("cannot build a monitor from zero traces")
    if classes is None:
        class_list = sorted({r.true_label for r in train})
    else:
        class_list = sorted(set(classes))

    store = BddStore(selection.width)
    roots = _zero_zones(store, train, selection, class_list)
    level = 0
    rows = []
    for gamma in gammas:
        while level < gamma:
            roots = {c: enlarge_once(store, root, selection.width)
                     for c, root in roots.items()}
            level += 1
        snapshot = Monitor(
            selection=selection,
            gamma=gamma,
            store=store,
            zones={c: ComfortZone(c, gamma, root)
                   for c, root in roots.items()},
        )
        rows.append(evaluate(snapshot, traces_eval))
    return rows


def choose_gamma(report: Sequence[EvalRow], min_precision: float = 0.3,
                 max_out_rate: float = 0.05) -> GammaChoice:
    """Smallest gamma whose warnings are precise enough and rare enough.

    A row qualifies when its warning precision
    (``misclassified_within_out_rate``) reaches ``min_precision`` and its
    warning rate (``out_rate``) stays at or below ``max_out_rate``.  With
    ``min_precision`` 0 the precision requirement is vacuous and holds even
    for rows that produced no warnings.  If no row qualifies, the gamma
    with the highest precision is returned, flagged as unqualified.
    """
    rows = list(report)
    if not rows:
        raise ValueError("empty report")
    if not 0.0 <= min_precision <= 1.0:
        raise ValueError(f"min_precision must be in [0, 1], got {min_precision}")
    if not 0.0 < max_out_rate <= 1.0:
        raise ValueError(f"max_out_rate must be in (0, 1], got {max_out_rate}")
    for row in rows:
        if row.out_rate is None or row.out_rate > max_out_rate:
            continue
        precision_ok = min_precision == 0.0 or (
            row.misclassified_within_out_rate is not None
            and row.misclassified_within_out_rate >= min_precision)
        if precision_ok:
            return GammaChoice(gamma=row.gamma, qualified=True)
    best = max(rows, key=lambda r: (
        -1.0 if r.misclassified_within_out_rate is None
        else r.misclassified_within_out_rate))
    return GammaChoice(gamma=best.gamma, qualified=False)


REPORT_COLUMNS = (
    "gamma", "n_total", "n_out", "out_rate", "n_out_misclassified",
    "misclassified_within_out_rate", "overall_misclassification_rate",
    "n_nozone",
)


def write_report_csv(path, rows: Sequence[EvalRow]) -> None:
    """Write a sweep report; rates as 6-digit decimals, undefined as empty."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(REPORT_COLUMNS)
        for row in rows:
            writer.writerow([
                row.gamma,
                row.n_total,
                row.n_out_of_pattern,
                _rate(row.out_rate),
                row.n_out_misclassified,
                _rate(row.misclassified_within_out_rate),
                _rate(row.overall_misclassification_rate),
                row.n_nozone,
            ])


def read_report_csv(path) -> list[EvalRow]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        rows = []
        for line in reader:
            rows.append(EvalRow(
                gamma=int(line["gamma"]),
                n_total=int(line["n_total"]),
                n_out_of_pattern=int(line["n_out"]),
                out_rate=_unrate(line["out_rate"]),
                n_out_misclassified=int(line["n_out_misclassified"]),
                misclassified_within_out_rate=_unrate(
                    line["misclassified_within_out_rate"]),
                overall_misclassification_rate=float(
                    line["overall_misclassification_rate"]),
                n_nozone=int(line["n_nozone"]),
            ))
    return rows


def _rate(value: float | None) -> str:
    return "" if value is None else f"{value:.6f}"


def _unrate(text: str) -> float | None:
    return None if text == "" else float(text)
