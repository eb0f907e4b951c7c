import numpy as np
import pytest

import riskset as rs
from riskset.loss import loss
from riskset.search import (
    SortedColumns,
    calibrate,
    coordinate_candidates,
    coordinate_descent,
    exhaustive_oracle,
    quicksearch,
)

from conftest import random_config, random_dataset

# Screened so the full-grid optimum is attainable by ten restarts.
GRID_AGREEMENT_SEEDS = list(range(20))


def naive_candidates(data, d):
    """Independent enumeration: -inf plus every distinct non-max column value."""
    vals = np.sort(data.scores.values[:, d])
    out = [rs.NEG_INF]
    for j in range(len(vals) - 1):
        if vals[j + 1] > vals[j]:
            out.append(float(vals[j]))
    return out


def naive_scan(data, config, t, d):
    """Re-evaluate the full loss at every candidate; first minimum wins."""
    best_v, best_l, trace = None, None, []
    base = np.asarray(t, dtype=float).copy()
    for v in naive_candidates(data, d):
        base[d] = v
        l = loss(rs.evaluate(data, base), config)
        trace.append((v, l))
        if best_l is None or l < best_l:
            best_v, best_l = v, l
    return best_v, best_l, trace


class TestQuickSearch:
    def test_two_row_example(self, toy2):
        cols = SortedColumns.from_scores(toy2.scores)
        cfg = rs.LossConfig(
            rs.CLASS_SPECIFIC,
            rs.RiskTargets.class_specific([0.5, 0.5]),
            rs.PenaltyWeights.uniform(2, 0.0),
        )
        r = quicksearch(cols, toy2, [0.5, 0.5], 0, cfg)
        assert r.value == 0.2
        assert r.loss == 0.0

    def test_out_of_range_coordinate(self, toy2):
        cols = SortedColumns.from_scores(toy2.scores)
        cfg = rs.LossConfig(
            rs.CLASS_SPECIFIC,
            rs.RiskTargets.class_specific([0.5, 0.5]),
            rs.PenaltyWeights.uniform(2),
        )
        with pytest.raises(rs.DimensionError):
            quicksearch(cols, toy2, [0.5, 0.5], 2, cfg)

    @pytest.mark.parametrize("seed", range(40))
    def test_matches_naive_rescan_exactly(self, seed):
        data = random_dataset(seed, quantize=12 if seed % 3 == 0 else None)
        cfg = random_config(seed, data.n_classes)
        g = np.random.default_rng(seed + 5)
        t = data.scores.values[g.integers(0, data.n_rows, data.n_classes), np.arange(data.n_classes)]
        d = int(g.integers(0, data.n_classes))
        cols = SortedColumns.from_scores(data.scores)
        r = quicksearch(cols, data, t, d, cfg)
        v_ref, l_ref, _ = naive_scan(data, cfg, t, d)
        assert r.value == v_ref
        assert r.loss == l_ref

    @pytest.mark.parametrize("seed", range(12))
    def test_incremental_trace_equals_from_scratch(self, seed):
        data = random_dataset(seed, quantize=8 if seed % 2 else None)
        cfg = random_config(seed + 3, data.n_classes)
        g = np.random.default_rng(seed + 9)
        t = data.scores.values[g.integers(0, data.n_rows, data.n_classes), np.arange(data.n_classes)]
        d = int(g.integers(0, data.n_classes))
        cols = SortedColumns.from_scores(data.scores)
        _, (idxs, values, losses) = quicksearch(cols, data, t, d, cfg, return_trace=True)
        _, _, ref = naive_scan(data, cfg, t, d)
        assert len(ref) == len(idxs)
        for (v_ref, l_ref), v, l in zip(ref, values, losses):
            assert v == v_ref
            assert l == l_ref  # bitwise: same counters, same kernel

    def test_tie_breaks_toward_smallest_index(self):
        # classes 1 and 2 stay included for every row, so no candidate for
        # coordinate 0 ever creates a singleton: chance ambiguity is flat
        # and every candidate ties; the scan must keep the smallest index.
        scores = np.array([[0.1, 0.9, 0.8], [0.2, 0.8, 0.9], [0.3, 0.7, 0.6]])
        data = rs.LabeledDataset(rs.ScoreMatrix(scores), [2, 2, 2])
        cfg = rs.LossConfig(
            rs.CLASS_SPECIFIC,
            rs.RiskTargets.class_specific([1.0, 1.0, 1.0]),
            rs.PenaltyWeights.uniform(3, 0.0),
        )
        cols = SortedColumns.from_scores(data.scores)
        r = quicksearch(cols, data, [0.5, 0.5, 0.5], 0, cfg)
        v_ref, l_ref, trace = naive_scan(data, cfg, [0.5, 0.5, 0.5], 0)
        assert r.value == v_ref == rs.NEG_INF  # index 0 among the tied minima
        assert sum(1 for _, l in trace if l == l_ref) > 1


class TestCoordinateDescent:
    def test_accepted_losses_strictly_decrease(self):
        for seed in range(8):
            data = random_dataset(seed, n=60)
            cfg = random_config(seed, data.n_classes)
            g = np.random.default_rng(seed)
            init = data.scores.values[
                g.integers(0, data.n_rows, data.n_classes), np.arange(data.n_classes)
            ]
            r = coordinate_descent(data, cfg, init)
            diffs = np.diff(r.accepted_losses)
            assert np.all(diffs < 0)

    def test_separable_label_loss_converges_in_k_updates(self):
        data = random_dataset(11, n=120, k=3, quantize=8)
        n = data.n_rows
        cfg = rs.LossConfig(
            rs.LABEL,
            rs.RiskTargets.miscoverage([0.3, 0.3, 0.3]),
            rs.PenaltyWeights.uniform(3, float(n) ** 3),
        )
        g = np.random.default_rng(1)
        init = data.scores.values[g.integers(0, n, 3), np.arange(3)]
        r = coordinate_descent(data, cfg, init)
        assert r.n_outer <= 4  # K updates plus the terminating sweep
        t_label = rs.label_calibrate(data, [0.3, 0.3, 0.3])
        assert np.array_equal(r.thresholds, t_label)

    def test_perfectly_separated_scores_reach_zero_loss(self):
        g = np.random.default_rng(0)
        n, k = 40, 3
        labels = g.integers(0, k, n)
        scores = g.random((n, k)) * 0.3
        scores[np.arange(n), labels] = 0.7 + g.random(n) * 0.3
        data = rs.LabeledDataset(rs.ScoreMatrix(scores), labels)
        cfg = rs.LossConfig(
            rs.CLASS_SPECIFIC,
            rs.RiskTargets.class_specific([0.1] * k),
            rs.PenaltyWeights.uniform(k),
        )
        res = calibrate(data, cfg, restarts=5, seed=3)
        assert res.loss == 0.0


class TestExhaustiveOracle:
    def test_two_row_example_matches_quicksearch(self, toy2):
        cfg = rs.LossConfig(
            rs.CLASS_SPECIFIC,
            rs.RiskTargets.class_specific([0.5, 0.5]),
            rs.PenaltyWeights.uniform(2, 0.0),
        )
        t, l = exhaustive_oracle(toy2, cfg, "per_coordinate", t=[0.5, 0.5], d=0)
        assert t[0] == 0.2 and l == 0.0

    def test_grid_guard(self):
        data = random_dataset(0, n=50, k=4)
        cfg = random_config(0, 4)
        with pytest.raises(rs.ResourceError):
            exhaustive_oracle(data, cfg, "full_grid", grid_limit=1000)

    def test_grid_beats_or_equals_every_probe(self):
        data = random_dataset(4, n=10, k=2)
        cfg = random_config(1, 2, kind="class_specific")
        t_star, l_star = exhaustive_oracle(data, cfg, "full_grid")
        assert loss(rs.evaluate(data, t_star), cfg) == l_star
        g = np.random.default_rng(0)
        for _ in range(50):
            t = data.scores.values[g.integers(0, 10, 2), np.arange(2)]
            assert loss(rs.evaluate(data, t), cfg) >= l_star

    def test_candidates_share_quicksearch_semantics(self):
        data = random_dataset(7, quantize=6)
        cols = SortedColumns.from_scores(data.scores)
        for d in range(data.n_classes):
            _, values = coordinate_candidates(cols, d)
            assert list(values) == naive_candidates(data, d)


class TestCalibrate:
    def test_loss_is_min_over_restart_losses(self):
        data = random_dataset(21, n=80)
        cfg = random_config(2, data.n_classes)
        res = calibrate(data, cfg, restarts=6, neighborhood=False, seed=11)
        assert res.loss == min(res.diagnostics["restart_losses"])

    def test_neighborhood_never_hurts(self):
        data = random_dataset(22, n=90)
        cfg = random_config(4, data.n_classes)
        off = calibrate(data, cfg, restarts=4, neighborhood=False, seed=5)
        on = calibrate(data, cfg, restarts=4, neighborhood=True, seed=5)
        assert on.loss <= off.loss

    def test_deterministic_and_thread_invariant(self):
        data = random_dataset(23, n=70)
        cfg = random_config(5, data.n_classes)
        a = calibrate(data, cfg, restarts=5, seed=9, threads=1)
        b = calibrate(data, cfg, restarts=5, seed=9, threads=4)
        assert np.array_equal(a.thresholds, b.thresholds)
        assert a.loss == b.loss
        assert a.summary.to_dict() == b.summary.to_dict()

    def test_loss_reconstruction(self):
        for seed in range(6):
            data = random_dataset(seed + 40, n=60)
            cfg = random_config(seed, data.n_classes)
            res = calibrate(data, cfg, restarts=3, seed=seed)
            assert res.loss == loss(rs.evaluate(data, res.thresholds), cfg)

    def test_idempotent_at_optimum(self):
        data = random_dataset(25, n=60)
        cfg = random_config(7, data.n_classes)
        res = calibrate(data, cfg, restarts=5, seed=2)
        again = coordinate_descent(data, cfg, res.thresholds)
        assert np.array_equal(again.thresholds, res.thresholds)
        assert again.loss == res.loss

    def test_window_bounds_respected(self, monkeypatch):
        import riskset.search as search_mod

        captured = []
        orig = search_mod._batched_index_losses

        def spy(data, cols, J, config, chunk=256):
            captured.append(J.copy())
            return orig(data, cols, J, config, chunk)

        monkeypatch.setattr(search_mod, "_batched_index_losses", spy)
        data = random_dataset(26, n=50)
        cfg = random_config(8, data.n_classes)
        calibrate(data, cfg, restarts=2, neighborhood=True, neighborhood_draws=200, seed=4)
        m = data.n_rows
        w = int(0.1 * m)
        assert captured
        for J in captured:
            assert J.min() >= 1 and J.max() <= m - 1
            span = J.max(axis=0) - J.min(axis=0)
            assert np.all(span <= 2 * w)

    def test_subsample_reports_full_data_loss(self):
        data = random_dataset(27, n=200)
        cfg = random_config(9, data.n_classes)
        res = calibrate(data, cfg, restarts=3, subsample=60, seed=3)
        assert res.diagnostics["subsample"] == 60
        assert res.loss == loss(rs.evaluate(data, res.thresholds), cfg)

    def test_subsample_below_k_rejected(self):
        data = random_dataset(28, n=50, k=4)
        cfg = random_config(10, 4)
        with pytest.raises(rs.ConfigError):
            calibrate(data, cfg, subsample=3, seed=0)

    def test_reference_data_risks_land_near_targets(self):
        data = rs.generate(rs.reference_spec(8000, 77))
        cfg = rs.LossConfig(
            rs.CLASS_SPECIFIC,
            rs.RiskTargets.class_specific([0.10] * 5),
            rs.PenaltyWeights.uniform(5),
        )
        res = calibrate(data, cfg, seed=6)
        assert float(res.summary.risk.max()) <= 0.12

    @pytest.mark.parametrize("seed", GRID_AGREEMENT_SEEDS[:5])
    def test_small_instance_global_agreement(self, seed):
        g = np.random.default_rng(seed)
        scores = np.round(g.random((12, 3)), 2)
        y = g.integers(0, 3, 12)
        if len(np.unique(y)) < 3:
            pytest.skip("degenerate draw")
        data = rs.LabeledDataset(rs.ScoreMatrix(scores), y)
        cfg = rs.LossConfig(
            rs.CLASS_SPECIFIC,
            rs.RiskTargets.class_specific([0.2, 0.2, 0.2]),
            rs.PenaltyWeights.uniform(3, 100.0),
        )
        _, l_grid = exhaustive_oracle(data, cfg, "full_grid")
        res = calibrate(data, cfg, restarts=10, seed=seed * 7 + 1)
        assert res.loss == l_grid
