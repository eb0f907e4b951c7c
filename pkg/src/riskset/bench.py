"""Experiment harness: accuracy-ambiguity sweeps, ambiguity correlation,
and class-specific risk reports comparing all calibrators."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from . import _streams
from .baselines import label_calibrate, scrib_minus_calibrate, sgr_calibrate, sgr_evaluate
from .bounds import TailBoundQuery, risk_tail_bound
from .core import LabeledDataset, PenaltyWeights, RiskTargets, evaluate, excess_risk
from .errors import ConfigError, DegenerateStatisticsError, ReportError
from .loss import CLASS_SPECIFIC, OVERALL, LossConfig
from .search import calibrate

SWEEP_METHODS = ("scrib", "sgr", "scrib-minus")
REPORT_METHODS = ("sgr", "label", "scrib-minus", "scrib")
DEFAULT_LAMBDA = 1e4
REPORT_EPSILONS = (0.02, 0.05)


def top1_error(data: LabeledDataset) -> float:
    """Argmax error rate with no rejection."""
    pred = data.scores.values.argmax(axis=1)
    return int((pred != data.labels).sum()) / data.n_rows


@dataclass(frozen=True)
class CurvePoint:
    """One accuracy-ambiguity point; anchors carry ``synthetic=True`` and no
    originating target."""

    ambiguity: float
    accuracy: float
    target_used: float | None
    synthetic: bool = False


@dataclass(frozen=True)
class SweepResult:
    method: str
    targets: list
    realized: list          # per-target dicts: target / ambiguity / accuracy / risk
    curve: list             # CurvePoint, sorted by ambiguity, anchors included
    auc: float
    risk_rmse: float
    anchors: tuple

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "targets": list(self.targets),
            "realized": list(self.realized),
            "curve": [
                {
                    "ambiguity": p.ambiguity,
                    "accuracy": p.accuracy,
                    "target_used": p.target_used,
                    "synthetic": p.synthetic,
                }
                for p in self.curve
            ],
            "auc": self.auc,
            "risk_rmse": self.risk_rmse,
            "anchors": list(self.anchors),
        }


def sweep_targets(valid: LabeledDataset, stride: float) -> list:
    """Risk-target grid: stride, 2*stride, ... up to the no-rejection risk
    (never empty: a classifier already below one stride still gets one point)."""
    if not 0.0 < stride <= 0.5:
        raise ConfigError("stride must lie in (0, 0.5]")
    ceiling = top1_error(valid)
    targets = [stride]
    m = 2
    while m * stride <= ceiling + 1e-12:
        targets.append(m * stride)
        m += 1
    return targets


def _sweep_point(valid, test, method, target, seed, lam, restarts, neighborhood,
                 threads=1, warm_init=None, subsample=None):
    k = valid.n_classes
    thresholds = None
    if method == "sgr":
        res = sgr_calibrate(valid, target)
        summary = sgr_evaluate(test, res.confidence_threshold)
    else:
        config = LossConfig(OVERALL, RiskTargets.overall(target), PenaltyWeights.for_sweep(k, lam))
        if method == "scrib-minus":
            res = scrib_minus_calibrate(valid, config)
        elif method == "scrib":
            res = calibrate(
                valid, config, restarts=restarts, neighborhood=neighborhood, seed=seed,
                threads=threads, subsample=subsample,
                extra_inits=() if warm_init is None else (warm_init,),
            )
        else:
            raise ConfigError(f"unknown sweep method {method!r}")
        thresholds = res.thresholds
        summary = evaluate(test, res.thresholds)
    return thresholds, {
        "target": float(target),
        "ambiguity": summary.chance_ambiguity,
        "accuracy": 1.0 - summary.overall_risk,
        "risk": summary.overall_risk,
    }


def auc_sweep(
    valid: LabeledDataset,
    test: LabeledDataset,
    method: str,
    stride: float = 0.01,
    span_anchors: tuple = (0.0, 1.0),
    seed: int = 0,
    lam: float = DEFAULT_LAMBDA,
    restarts: int = 10,
    neighborhood: bool = True,
    threads: int = 1,
    subsample: int | None = None,
) -> SweepResult:
    """Accuracy vs chance-ambiguity curve of one method over a target grid.

    For every target the method is calibrated on ``valid`` (the threshold
    search uses the two-sided overall loss so curve points spread along the
    risk axis) and evaluated on ``test``.  Targets are processed from the
    most permissive down, warm-starting each threshold search from the
    neighboring target's solution: adjacent targets have neighboring
    optima, and seeding from one starts the descent inside the admissible
    region where single-coordinate moves are not blocked by the risk
    penalty.  Points are sorted by ambiguity, exact duplicates merged by
    averaging accuracy, and the two anchoring endpoints appended so
    compared curves share the ``span_anchors`` span: the low anchor
    carries the no-rejection test accuracy (its true value), the high
    anchor step-extends the last observed accuracy.  The returned AUC is
    the trapezoidal integral over ambiguity normalized by the span, and
    ``risk_rmse`` is the RMSE of (test risk - target) over the grid.
    """
    if valid.n_classes != test.n_classes:
        raise ConfigError("valid and test disagree on the number of classes")
    if method not in SWEEP_METHODS:
        raise ConfigError(f"method must be one of {SWEEP_METHODS}")
    targets = sweep_targets(valid, stride)
    if not targets:
        raise ReportError("no sweep targets: the no-rejection risk is below one stride")

    by_index = {}
    warm = None
    for i in reversed(range(len(targets))):
        warm, point = _sweep_point(
            valid, test, method, targets[i],
            _streams.child_seed(seed, _streams.SWEEP_TARGET, i),
            lam, restarts, neighborhood, threads=threads, warm_init=warm,
            subsample=subsample,
        )
        by_index[i] = point
    realized = [by_index[i] for i in range(len(targets))]

    curve = _assemble_curve(realized, span_anchors, base_accuracy=1.0 - top1_error(test))
    auc = _normalized_auc(curve)
    dev = np.asarray([p["risk"] - p["target"] for p in realized])
    rmse = float(np.sqrt(np.mean(dev * dev)))
    return SweepResult(
        method=method, targets=targets, realized=realized, curve=curve,
        auc=auc, risk_rmse=rmse, anchors=tuple(span_anchors),
    )


def _assemble_curve(realized, span_anchors, base_accuracy) -> list:
    lo, hi = float(span_anchors[0]), float(span_anchors[1])
    if not lo < hi:
        raise ReportError("anchor span is empty")
    pts = sorted((p["ambiguity"], p["accuracy"], p["target"]) for p in realized)
    merged = []
    i = 0
    while i < len(pts):
        j = i
        while j < len(pts) and pts[j][0] == pts[i][0]:
            j += 1
        acc = float(np.mean([p[1] for p in pts[i:j]]))
        merged.append(CurvePoint(pts[i][0], acc, pts[i][2], synthetic=False))
        i = j
    merged = [p for p in merged if lo <= p.ambiguity <= hi]
    if not merged:
        raise ReportError("no curve points inside the anchor span")
    if lo < merged[0].ambiguity:
        merged.insert(0, CurvePoint(lo, base_accuracy, None, synthetic=True))
    if hi > merged[-1].ambiguity:
        merged.append(CurvePoint(hi, merged[-1].accuracy, None, synthetic=True))
    if len(merged) < 2:
        raise ReportError("fewer than 2 curve points after dedup")
    return merged


def _normalized_auc(curve) -> float:
    amb = np.asarray([p.ambiguity for p in curve])
    acc = np.asarray([p.accuracy for p in curve])
    area = float(np.sum(0.5 * (acc[1:] + acc[:-1]) * (amb[1:] - amb[:-1])))
    return area / float(amb[-1] - amb[0])


def ambiguity_correlation(
    valid: LabeledDataset,
    test: LabeledDataset,
    trials: int = 1000,
    seed: int = 0,
    chunk: int = 256,
) -> tuple:
    """(Pearson, Spearman) correlation between chance- and size-ambiguity.

    Draws ``trials`` threshold vectors, each coordinate uniform over the
    validation sorted column, and evaluates both ambiguities of every
    induced classifier on the test set.
    """
    if trials < 3:
        raise ConfigError("trials must be >= 3")
    if valid.n_classes != test.n_classes:
        raise ConfigError("valid and test disagree on the number of classes")
    k = valid.n_classes
    vs = np.sort(valid.scores.values, axis=0)
    gen = _streams.stream(seed, _streams.CORRELATION)
    J = gen.integers(1, valid.n_rows + 1, size=(trials, k))
    T = vs[J - 1, np.arange(k)]

    scores = test.scores.values
    n = test.n_rows
    chance = np.empty(trials)
    size = np.empty(trials)
    for lo in range(0, trials, chunk):
        tc = T[lo : lo + chunk]
        cnt = np.zeros((tc.shape[0], n), dtype=np.int16)
        for c in range(k):
            cnt += scores[None, :, c] > tc[:, c : c + 1]
        certain = (cnt == 1).sum(axis=1, dtype=np.int64)
        chance[lo : lo + chunk] = (n - certain) / n
        size[lo : lo + chunk] = cnt.sum(axis=1, dtype=np.int64) / n

    if np.ptp(chance) == 0.0 or np.ptp(size) == 0.0:
        raise DegenerateStatisticsError("ambiguity series has zero variance")
    pearson = float(np.corrcoef(chance, size)[0, 1])
    spearman = float(stats.spearmanr(chance, size).statistic)
    return pearson, spearman


def _tail_bound_or_none(r: float, eps: float, n_k: int):
    if not 0.0 < r < 1.0 or r + eps > 1.0:
        return None
    return risk_tail_bound(TailBoundQuery(r, eps, n_k))


@dataclass(frozen=True)
class MethodReport:
    method: str
    thresholds: list
    summary_test: dict
    excess: list
    mean_excess: float
    tail_bounds: dict
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "thresholds": self.thresholds,
            "test": self.summary_test,
            "excess_risk": self.excess,
            "mean_excess_risk": self.mean_excess,
            "tail_bounds": self.tail_bounds,
            **({"extra": self.extra} if self.extra else {}),
        }


def risk_report(
    valid: LabeledDataset,
    test: LabeledDataset,
    methods,
    targets: RiskTargets,
    seed: int = 0,
    lam: float = DEFAULT_LAMBDA,
    restarts: int = 10,
    neighborhood: bool = True,
) -> dict:
    """Calibrate each method on ``valid`` at class-specific targets and
    report per-class risks, excess risks, ambiguities, mis-coverage and
    deviation tail bounds on ``test``.

    The max-score baseline consumes the mean of the class targets as its
    overall target (the reference protocol uses a uniform vector, where
    the two coincide); the coverage baseline consumes the targets as
    per-class mis-coverage budgets.
    """
    if targets.mode != "class_specific":
        raise ConfigError("risk_report needs class_specific targets")
    k = valid.n_classes
    tv = np.asarray(targets.values)
    if tv.shape != (k,):
        raise ConfigError("targets length does not match the data")

    entries = {}
    for i, method in enumerate(methods):
        if method == "sgr":
            res = sgr_calibrate(valid, float(tv.mean()))
            summary = sgr_evaluate(test, res.confidence_threshold)
            thresholds = [res.confidence_threshold] * k
            extra = {"coverage_valid": res.coverage, "feasible": res.feasible}
        elif method == "label":
            t = label_calibrate(valid, tv)
            summary = evaluate(test, t)
            thresholds = [float(v) for v in t]
            extra = {}
        elif method == "scrib-minus":
            config = LossConfig(CLASS_SPECIFIC, targets, PenaltyWeights.uniform(k, lam))
            res = scrib_minus_calibrate(valid, config)
            summary = evaluate(test, res.thresholds)
            thresholds = [float(v) for v in res.thresholds]
            extra = {"loss_valid": res.loss}
        elif method == "scrib":
            config = LossConfig(CLASS_SPECIFIC, targets, PenaltyWeights.uniform(k, lam))
            res = calibrate(
                valid, config, restarts=restarts, neighborhood=neighborhood,
                seed=_streams.child_seed(seed, _streams.SWEEP_TARGET, i),
            )
            summary = evaluate(test, res.thresholds)
            thresholds = [float(v) for v in res.thresholds]
            extra = {"loss_valid": res.loss}
        else:
            raise ConfigError(f"unknown report method {method!r}")

        exc = excess_risk(summary, targets)
        bounds = {
            str(eps): [
                _tail_bound_or_none(float(summary.risk[c]), eps, int(summary.sure[c]))
                for c in range(k)
            ]
            for eps in REPORT_EPSILONS
        }
        entries[method] = MethodReport(
            method=method,
            thresholds=thresholds,
            summary_test=summary.to_dict(),
            excess=[float(v) for v in exc],
            mean_excess=float(exc.mean()),
            tail_bounds=bounds,
            extra=extra,
        ).to_dict()

    return {
        "targets": [float(v) for v in tv],
        "seed": seed,
        "lambda": lam,
        "methods": entries,
    }
