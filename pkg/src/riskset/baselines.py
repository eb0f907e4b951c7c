"""Reference calibrators: max-score thresholding, per-class coverage
quantiles, and a single shared threshold under the full loss."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .core import (
    NEG_INF,
    POS_INF,
    LabeledDataset,
    evaluate,
    summarize_sets,
)
from .errors import ConfigError
from .loss import CHANCE, CLASS_SPECIFIC, LABEL, LossConfig, loss_from_counts
from .search import CalibrationResult


@dataclass(frozen=True)
class SgrResult:
    """Outcome of max-confidence threshold selection for an overall target.

    Accepted rows are those whose maximum class score exceeds
    ``confidence_threshold``; as a set classifier, accepted rows predict
    the argmax singleton and rejected rows predict the full label set.
    """

    confidence_threshold: float
    coverage: float
    achieved_risk: float
    feasible: bool
    n_accepted: int
    r_star: float


def sgr_calibrate(data: LabeledDataset, r_star: float) -> SgrResult:
    """Largest acceptance prefix (by max score) with empirical risk <= target.

    Rows are sorted by confidence descending and prefixes grow whole
    tie-blocks at a time, so rows sharing the boundary confidence are
    accepted or rejected together.  The returned threshold sits strictly
    between the last accepted and first rejected distinct confidence
    (``-inf`` for full acceptance, ``+inf`` when no prefix qualifies).
    """
    if not 0.0 <= r_star <= 1.0:
        raise ConfigError("r_star must lie in [0, 1]")
    scores = data.scores.values
    y = data.labels
    n = data.n_rows
    conf = scores.max(axis=1)
    pred = scores.argmax(axis=1)  # ties resolve to the lowest class index
    order = np.argsort(-conf, kind="stable")
    c_sorted = conf[order]
    wrong = (pred != y)[order]
    errors = np.cumsum(wrong)

    sizes = np.arange(1, n + 1)
    feasible = errors / sizes <= r_star
    block_end = np.empty(n, dtype=bool)
    block_end[:-1] = c_sorted[1:] < c_sorted[:-1]
    block_end[-1] = True

    qualifying = np.flatnonzero(feasible & block_end)
    if qualifying.size == 0:
        return SgrResult(
            confidence_threshold=POS_INF, coverage=0.0, achieved_risk=0.0,
            feasible=False, n_accepted=0, r_star=float(r_star),
        )
    p = int(qualifying[-1]) + 1  # largest qualifying prefix size
    if p == n:
        threshold = NEG_INF
    else:
        a, b = float(c_sorted[p]), float(c_sorted[p - 1])
        threshold = a + 0.5 * (b - a)
        if not a < threshold < b:
            # adjacent floats: fall back to the rejected confidence, which
            # the strict > membership keeps out anyway
            threshold = a
    return SgrResult(
        confidence_threshold=threshold,
        coverage=p / n,
        achieved_risk=float(errors[p - 1] / p),
        feasible=True,
        n_accepted=p,
        r_star=float(r_star),
    )


def sgr_membership(scores_values: np.ndarray, threshold: float) -> np.ndarray:
    """Set predictions of the max-score rule: argmax singleton when the
    confidence clears the threshold, the full label set otherwise."""
    scores_values = np.asarray(scores_values, dtype=np.float64)
    n, k = scores_values.shape
    conf = scores_values.max(axis=1)
    pred = scores_values.argmax(axis=1)
    accepted = conf > threshold
    member = np.ones((n, k), dtype=bool)
    member[accepted] = False
    member[np.flatnonzero(accepted), pred[accepted]] = True
    return member


def sgr_evaluate(data: LabeledDataset, threshold: float):
    return summarize_sets(sgr_membership(data.scores.values, threshold), data.labels, data.n_classes)


def label_calibrate(data: LabeledDataset, alpha_star) -> np.ndarray:
    """Per-class coverage quantiles: ``t_k`` is the largest class-``k`` score
    among label-``k`` rows whose empirical CDF value stays within the
    mis-coverage budget ``alpha_star[k]`` (``-inf`` when none qualifies, so
    the class is always covered).  Under strict membership the realized
    calibration-set mis-coverage is <= the budget by construction."""
    alpha = np.asarray(alpha_star, dtype=np.float64)
    k = data.n_classes
    if alpha.shape != (k,):
        raise ConfigError(f"alpha_star must have length {k}")
    if np.any((alpha < 0) | (alpha > 1)):
        raise ConfigError("alpha_star entries must lie in [0, 1]")
    t = np.full(k, NEG_INF)
    for c in range(k):
        vals = np.sort(data.scores.values[data.labels == c, c])
        if vals.size == 0:
            warnings.warn(f"class {c} absent from the calibration data; threshold set to -inf")
            continue
        frac_le = np.searchsorted(vals, vals, side="right") / vals.size
        ok = np.flatnonzero(frac_le <= alpha[c])
        if ok.size:
            t[c] = vals[ok[-1]]
    return t


def scrib_minus_calibrate(data: LabeledDataset, config: LossConfig) -> CalibrationResult:
    """Global 1-D minimum of the loss over a single shared threshold.

    Scans the sorted union of all observed scores (plus ``-inf``),
    maintaining the counters by interval bookkeeping: a row is certain
    exactly while the shared threshold lies in [second-largest, largest) of
    its scores, and erroneous there iff its argmax is not its label.
    Ties break toward the smaller threshold.
    """
    k = data.n_classes
    config.check_k(k)
    scores = data.scores.values
    y = data.labels
    n = data.n_rows

    flat = np.sort(scores.ravel())
    uniq, counts = np.unique(flat, return_counts=True)
    n_cand = uniq.shape[0] + 1  # candidate 0 is -inf

    top2 = np.partition(scores, k - 2, axis=1)[:, k - 2 :]
    v2, v1 = top2[:, 0], top2[:, 1]
    amax = scores.argmax(axis=1)

    # Interval [v2, v1) of certainty, mapped to candidate indices.
    start = np.searchsorted(uniq, v2, side="left") + 1
    end = np.searchsorted(uniq, v1, side="left") + 1
    wrong = amax != y

    sure = np.zeros((k, n_cand), dtype=np.int64)
    err = np.zeros((k, n_cand), dtype=np.int64)
    for c in range(k):
        rows = y == c
        np.add.at(sure[c], start[rows], 1)
        np.add.at(sure[c], end[rows], -1)
        bad = rows & wrong
        np.add.at(err[c], start[bad], 1)
        np.add.at(err[c], end[bad], -1)
    np.cumsum(sure, axis=1, out=sure)
    np.cumsum(err, axis=1, out=err)
    n_certain = sure.sum(axis=0)

    kw = {}
    total_size = None
    if config.ambiguity != CHANCE:
        removed = np.zeros(n_cand, dtype=np.int64)
        removed[1:] = np.cumsum(counts)
        total_size = n * k - removed
    if config.kind == CLASS_SPECIFIC:
        kw = dict(sure=sure, err=err)
    elif config.kind == LABEL:
        label_counts = np.bincount(y, minlength=k).astype(np.int64)
        s_y = scores[np.arange(n), y]
        miss_at = np.searchsorted(uniq, s_y, side="left") + 1
        miss = np.zeros((k, n_cand), dtype=np.int64)
        for c in range(k):
            np.add.at(miss[c], miss_at[y == c], 1)
        np.cumsum(miss, axis=1, out=miss)
        kw = dict(miss=miss, label_counts=label_counts)
    else:
        kw = dict(total_err=err.sum(axis=0))

    losses = loss_from_counts(
        config, n_rows=n, n_certain=n_certain, total_set_size=total_size, **kw
    )
    j = int(np.argmin(losses))
    t_star = NEG_INF if j == 0 else float(uniq[j - 1])
    thresholds = np.full(k, t_star)
    summary = evaluate(data, thresholds)
    return CalibrationResult(
        thresholds=thresholds,
        loss=float(losses[j]),
        summary=summary,
        restarts_used=0,
        seed=0,
        neighborhood_sampled=False,
        diagnostics={"shared_threshold": t_star, "n_candidates": int(n_cand)},
    )
