import numpy as np
import pytest

import riskset as rs
from riskset.bench import ambiguity_correlation, auc_sweep, risk_report, sweep_targets, top1_error


def one_hot_dataset(seed, n=120, k=3):
    g = np.random.default_rng(seed)
    labels = g.integers(0, k, n)
    scores = np.zeros((n, k))
    scores[np.arange(n), labels] = 1.0
    return rs.LabeledDataset(rs.ScoreMatrix(scores), labels)


class TestSweep:
    def test_one_hot_truth_gives_unit_auc(self):
        valid = one_hot_dataset(0)
        test = one_hot_dataset(1)
        res = auc_sweep(valid, test, "sgr", stride=0.05, span_anchors=(0.0, 1.0), seed=0)
        assert res.auc == pytest.approx(1.0)
        narrow = auc_sweep(valid, test, "sgr", stride=0.05, span_anchors=(0.0, 0.4), seed=0)
        assert narrow.auc == pytest.approx(1.0)

    def test_targets_grid(self):
        d = rs.generate(rs.reference_spec(800, 5))
        targets = sweep_targets(d, 0.05)
        ceiling = top1_error(d)
        assert targets[0] == 0.05
        assert all(t <= max(ceiling, 0.05) + 1e-12 for t in targets)
        assert targets[-1] + 0.05 > ceiling

    def test_sgr_curve_rank_invariant(self):
        valid = rs.generate(rs.reference_spec(1500, 21))
        test = rs.generate(rs.reference_spec(1500, 22))
        res = auc_sweep(valid, test, "sgr", stride=0.05, seed=0)
        v2 = rs.LabeledDataset(rs.ScoreMatrix(2.0 * valid.scores.values), valid.labels)
        t2 = rs.LabeledDataset(rs.ScoreMatrix(2.0 * test.scores.values), test.labels)
        res2 = auc_sweep(v2, t2, "sgr", stride=0.05, seed=0)
        assert [p["ambiguity"] for p in res.realized] == [p["ambiguity"] for p in res2.realized]
        assert [p["accuracy"] for p in res.realized] == [p["accuracy"] for p in res2.realized]

    def test_curve_sorted_and_deduped(self):
        valid = rs.generate(rs.reference_spec(1200, 31))
        test = rs.generate(rs.reference_spec(1200, 32))
        res = auc_sweep(valid, test, "scrib-minus", stride=0.02, seed=1)
        ambs = [p.ambiguity for p in res.curve]
        assert ambs == sorted(ambs)
        assert len(set(ambs)) == len(ambs)
        assert res.curve[0].ambiguity == 0.0
        assert res.curve[-1].ambiguity == 1.0
        assert res.curve[-1].synthetic

    def test_empty_span_rejected(self):
        valid = one_hot_dataset(2)
        test = one_hot_dataset(3)
        with pytest.raises(rs.ReportError):
            auc_sweep(valid, test, "sgr", stride=0.2, span_anchors=(0.0, 0.0), seed=0)

    def test_auc_insensitive_to_point_order(self):
        # the curve is sorted internally: permuting realized points is a no-op
        from riskset.bench import _assemble_curve, _normalized_auc

        pts = [
            {"ambiguity": 0.5, "accuracy": 0.9, "target": 0.1},
            {"ambiguity": 0.1, "accuracy": 0.8, "target": 0.3},
            {"ambiguity": 0.9, "accuracy": 0.95, "target": 0.05},
        ]
        a = _normalized_auc(_assemble_curve(pts, (0, 1), 0.7))
        b = _normalized_auc(_assemble_curve(pts[::-1], (0, 1), 0.7))
        assert a == b


class TestCorrelation:
    def test_binary_no_empty_sets_gives_perfect_correlation(self):
        g = np.random.default_rng(0)
        # validation scores low, test rows always exceed column-0 thresholds
        valid = rs.LabeledDataset(
            rs.ScoreMatrix(np.column_stack([g.uniform(0.1, 0.4, 200), g.uniform(0.1, 0.4, 200)])),
            g.integers(0, 2, 200),
        )
        test = rs.LabeledDataset(
            rs.ScoreMatrix(np.column_stack([g.uniform(0.5, 0.9, 300), g.uniform(0.1, 0.4, 300)])),
            g.integers(0, 2, 300),
        )
        pearson, spearman = ambiguity_correlation(valid, test, trials=200, seed=3)
        assert pearson == pytest.approx(1.0, abs=1e-12)
        assert spearman == pytest.approx(1.0, abs=1e-12)

    def test_degenerate_thresholds_raise(self):
        # a single distinct value per validation column -> identical draws
        valid = rs.LabeledDataset(rs.ScoreMatrix(np.full((50, 2), 0.5)), [0, 1] * 25)
        test = rs.generate(rs.SynthSpec(n=100, k_classes=2, signal=(1, 1), sigma=1.0, seed=0))
        with pytest.raises(rs.DegenerateStatisticsError):
            ambiguity_correlation(valid, test, trials=50, seed=1)

    def test_too_few_trials(self):
        d = rs.generate(rs.SynthSpec(n=50, k_classes=2, signal=(1, 1), sigma=1.0, seed=0))
        with pytest.raises(rs.ConfigError):
            ambiguity_correlation(d, d, trials=2, seed=0)

    def test_synthetic_strongly_correlated(self):
        valid = rs.generate(rs.reference_spec(3000, 41))
        test = rs.generate(rs.reference_spec(3000, 42))
        pearson, spearman = ambiguity_correlation(valid, test, trials=1000, seed=5)
        assert pearson > 0.5
        assert spearman > 0.5


class TestRiskReport:
    def test_deterministic_and_reconstructible(self):
        valid = rs.generate(rs.reference_spec(1500, 51))
        test = rs.generate(rs.reference_spec(1500, 52))
        targets = rs.RiskTargets.class_specific([0.1] * 5)
        a = risk_report(valid, test, ["sgr", "label", "scrib"], targets, seed=4, restarts=3)
        b = risk_report(valid, test, ["sgr", "label", "scrib"], targets, seed=4, restarts=3)
        assert a == b
        for name in ("label", "scrib"):
            entry = a["methods"][name]
            redo = rs.evaluate(test, np.asarray(entry["thresholds"]))
            assert entry["test"]["risk"] == [float(v) for v in redo.risk]

    def test_requires_class_specific_targets(self):
        d = rs.generate(rs.reference_spec(300, 61))
        with pytest.raises(rs.ConfigError):
            risk_report(d, d, ["sgr"], rs.RiskTargets.overall(0.1), seed=0)

    def test_tail_bounds_present_per_class(self):
        valid = rs.generate(rs.reference_spec(1500, 71))
        test = rs.generate(rs.reference_spec(1500, 72))
        targets = rs.RiskTargets.class_specific([0.1] * 5)
        doc = risk_report(valid, test, ["scrib"], targets, seed=2, restarts=3)
        bounds = doc["methods"]["scrib"]["tail_bounds"]
        assert set(bounds) == {"0.02", "0.05"}
        assert len(bounds["0.02"]) == 5
        for v in bounds["0.02"]:
            assert v is None or 0.0 < v <= 1.0
