"""Tests for the metric computations, gamma sweeps and the stopping rule."""

import numpy as np
import pytest

from actmon.evaluation import (
    REPORT_COLUMNS,
    EvalRow,
    choose_gamma,
    evaluate,
    gamma_sweep,
    read_report_csv,
    write_report_csv,
)
from actmon.monitor import build
from actmon.patterns import identity_selection
from actmon.traces import TraceRecord


def rec(true_label, pred_label, bits, rid="r"):
    return TraceRecord(id=rid, true_label=true_label, pred_label=pred_label,
                       activations=np.asarray(bits, dtype=float))


def make_row(gamma, out_rate, precision, n_total=10000):
    """Report row from rates alone (counts chosen consistently enough)."""
    n_out = round(out_rate * n_total)
    n_out_mis = 0 if precision is None else round(precision * n_out)
    return EvalRow(
        gamma=gamma,
        n_total=n_total,
        n_out_of_pattern=n_out,
        out_rate=out_rate,
        n_out_misclassified=n_out_mis,
        misclassified_within_out_rate=precision,
        overall_misclassification_rate=0.05,
        n_nozone=0,
    )


class TestEvaluate:
    def _monitor(self):
        # zone of class 0 is exactly {(1,1,1)}
        return build([rec(0, 0, (1, 1, 1))], identity_selection(3), gamma=0)

    def test_plain_ratios(self):
        mon = self._monitor()
        traces = []
        for i in range(90):  # in-zone, correctly classified
            traces.append(rec(0, 0, (1, 1, 1), f"in{i}"))
        for i in range(7):   # flagged but correct
            traces.append(rec(0, 0, (0, 0, 0), f"ok{i}"))
        for i in range(3):   # flagged and misclassified
            traces.append(rec(1, 0, (0, 0, 0), f"bad{i}"))
        row = evaluate(mon, traces)
        assert row.n_total == 100
        assert row.n_out_of_pattern == 10
        assert row.out_rate == pytest.approx(0.10)
        assert row.n_out_misclassified == 3
        assert row.misclassified_within_out_rate == pytest.approx(0.30)
        assert row.overall_misclassification_rate == pytest.approx(0.03)
        assert row.n_nozone == 0

    def test_no_warnings_reports_null_precision(self):
        mon = self._monitor()
        row = evaluate(mon, [rec(0, 0, (1, 1, 1), f"s{i}") for i in range(5)])
        assert row.n_out_of_pattern == 0
        assert row.out_rate == 0.0
        assert row.misclassified_within_out_rate is None

    def test_nozone_excluded_from_out_rate(self):
        mon = self._monitor()
        traces = [
            rec(0, 0, (1, 1, 1), "a"),
            rec(0, 0, (0, 1, 1), "b"),     # flagged
            rec(1, 1, (0, 0, 0), "skip1"),  # class 1 unmonitored
            rec(1, 1, (1, 1, 1), "skip2"),
        ]
        row = evaluate(mon, traces)
        assert row.n_nozone == 2
        assert row.n_total == 4
        assert row.out_rate == pytest.approx(0.5)  # 1 of 2 judged records

    def test_empty_eval_set_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            evaluate(self._monitor(), [])

    def test_order_invariant(self):
        rng = np.random.default_rng(3)
        mon = self._monitor()
        traces = [rec(int(rng.integers(0, 2)), 0,
                      rng.integers(0, 2, 3).astype(float), f"s{i}")
                  for i in range(40)]
        forward_row = evaluate(mon, traces)
        backward_row = evaluate(mon, list(reversed(traces)))
        assert forward_row == backward_row

    def test_counting_identity(self):
        rng = np.random.default_rng(5)
        mon = self._monitor()
        traces = [rec(int(rng.integers(0, 2)), int(rng.integers(0, 2)),
                      rng.integers(0, 2, 3).astype(float), f"s{i}")
                  for i in range(200)]
        row = evaluate(mon, traces)
        total_mis = sum(t.true_label != t.pred_label for t in traces)
        assert row.n_out_misclassified \
            <= min(row.n_out_of_pattern, total_mis)
        assert row.n_out_of_pattern <= row.n_total


class TestGammaSweep:
    def _traces(self, seed, count):
        rng = np.random.default_rng(seed)
        out = []
        for i in range(count):
            true = int(rng.integers(0, 2))
            pred = true if rng.random() < 0.9 else 1 - true
            out.append(rec(true, pred,
                           rng.integers(0, 2, 8).astype(float), f"s{i}"))
        return out

    def test_out_rate_non_increasing(self):
        train = self._traces(11, 60)
        evals = self._traces(12, 120)
        rows = gamma_sweep(train, evals, identity_selection(8), [0, 1, 2, 3])
        outs = [r.n_out_of_pattern for r in rows]
        assert outs == sorted(outs, reverse=True)
        assert [r.gamma for r in rows] == [0, 1, 2, 3]

    def test_single_gamma_matches_direct_build(self):
        train = self._traces(21, 40)
        evals = self._traces(22, 50)
        rows = gamma_sweep(train, evals, identity_selection(8), [0])
        mon = build(train, identity_selection(8), gamma=0)
        assert rows == [evaluate(mon, evals)]

    def test_sparse_gamma_levels_match_dense(self):
        train = self._traces(31, 40)
        evals = self._traces(32, 50)
        dense = gamma_sweep(train, evals, identity_selection(8), [0, 1, 2])
        sparse = gamma_sweep(train, evals, identity_selection(8), [0, 2])
        assert sparse == [dense[0], dense[2]]

    def test_unsorted_gammas_rejected(self):
        train = self._traces(41, 10)
        with pytest.raises(ValueError, match="ascending"):
            gamma_sweep(train, train, identity_selection(8), [2, 0])

    def test_empty_gammas_rejected(self):
        train = self._traces(42, 10)
        with pytest.raises(ValueError, match="nonempty"):
            gamma_sweep(train, train, identity_selection(8), [])


class TestChooseGamma:
    # a sweep shaped like a realistic one: the warning rate falls with
    # gamma while the precision of warnings rises
    REFERENCE = [
        make_row(0, 0.3292, 0.1013),
        make_row(1, 0.1500, 0.1944),
        make_row(2, 0.0708, 0.4117),
        make_row(3, 0.0458, 0.5454),
    ]

    def test_first_qualifying_gamma(self):
        choice = choose_gamma(self.REFERENCE, min_precision=0.5,
                              max_out_rate=0.05)
        assert choice.gamma == 3
        assert choice.qualified

    def test_zero_min_precision_takes_first_row(self):
        choice = choose_gamma(self.REFERENCE, min_precision=0.0,
                              max_out_rate=1.0)
        assert choice.gamma == 0
        assert choice.qualified

    def test_unreachable_threshold_falls_back_to_best_precision(self):
        choice = choose_gamma(self.REFERENCE, min_precision=1.0,
                              max_out_rate=1.0)
        assert choice.gamma == 3
        assert not choice.qualified

    def test_null_precision_rows_qualify_only_vacuously(self):
        rows = [make_row(0, 0.0, None), make_row(1, 0.0, None)]
        choice = choose_gamma(rows, min_precision=0.0, max_out_rate=0.05)
        assert choice.gamma == 0 and choice.qualified
        choice = choose_gamma(rows, min_precision=0.5, max_out_rate=0.05)
        assert not choice.qualified

    def test_returned_gamma_present_in_report(self):
        rng = np.random.default_rng(17)
        for _ in range(50):
            rows = [make_row(g, float(rng.random()),
                             None if rng.random() < 0.2 else float(rng.random()))
                    for g in range(int(rng.integers(1, 6)))]
            choice = choose_gamma(
                rows,
                min_precision=float(rng.random()),
                max_out_rate=float(rng.uniform(0.01, 1.0)))
            assert choice.gamma in {r.gamma for r in rows}

    def test_empty_report_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            choose_gamma([])

    def test_threshold_validation(self):
        with pytest.raises(ValueError, match="min_precision"):
            choose_gamma(self.REFERENCE, min_precision=1.5)
        with pytest.raises(ValueError, match="max_out_rate"):
            choose_gamma(self.REFERENCE, max_out_rate=0.0)


class TestReportCsv:
    ROWS = [
        EvalRow(0, 100, 10, 0.1, 3, 0.3, 0.05, 0),
        EvalRow(1, 100, 0, 0.0, 0, None, 0.05, 2),
    ]

    def test_header_and_rates(self, tmp_path):
        path = tmp_path / "report.csv"
        write_report_csv(path, self.ROWS)
        lines = path.read_text().splitlines()
        assert lines[0] == ",".join(REPORT_COLUMNS)
        assert lines[1] == "0,100,10,0.100000,3,0.300000,0.050000,0"
        assert lines[2] == "1,100,0,0.000000,0,,0.050000,2"

    def test_round_trip(self, tmp_path):
        path = tmp_path / "report.csv"
        write_report_csv(path, self.ROWS)
        assert read_report_csv(path) == self.ROWS
