"""Domain types and the set-classifier evaluation engine.

A set classifier is parameterized by one threshold per class: class ``k``
is a member of the prediction set for a row exactly when its score is
*strictly greater* than ``t[k]``.  The strict predicate is used everywhere
in the toolkit (baselines included); ``-inf`` means "always include the
class" and ``+inf`` means "never include it".

All statistics are accumulated as integers and divided once, so two code
paths that agree on the raw counts agree on the derived rates bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, ValidationError

NEG_INF = float("-inf")
POS_INF = float("inf")


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ScoreMatrix:
    """N x K matrix of per-class scores from a blackbox classifier.

    Scores do not need to sum to one or be calibrated; only the per-class
    rank order of rows is assumed meaningful.  Entries must be finite.
    """

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64, copy=True)
        if v.ndim != 2:
            raise DimensionError(f"score matrix must be 2-D, got shape {v.shape}")
        if v.shape[0] < 1 or v.shape[1] < 2:
            raise ValidationError(f"need at least 1 row and 2 classes, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValidationError("score matrix contains NaN or infinite entries")
        object.__setattr__(self, "values", _readonly(v))

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_classes(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class LabeledDataset:
    """A score matrix paired with integer labels in ``{0, ..., K-1}``."""

    scores: ScoreMatrix
    labels: np.ndarray

    def __post_init__(self):
        y = np.array(self.labels, dtype=np.int64, copy=True)
        if y.ndim != 1 or y.shape[0] != self.scores.n_rows:
            raise DimensionError(
                f"labels must be a vector of length {self.scores.n_rows}, got shape {y.shape}"
            )
        if y.size and (y.min() < 0 or y.max() >= self.scores.n_classes):
            raise ValidationError(f"labels must lie in [0, {self.scores.n_classes})")
        object.__setattr__(self, "labels", _readonly(y))

    @property
    def n_rows(self) -> int:
        return self.scores.n_rows

    @property
    def n_classes(self) -> int:
        return self.scores.n_classes

    def take(self, rows: np.ndarray) -> "LabeledDataset":
        return LabeledDataset(ScoreMatrix(self.scores.values[rows]), self.labels[rows])


def as_thresholds(t, k: int) -> np.ndarray:
    """Validate and return a length-``k`` float64 threshold vector.

    ``-inf``/``+inf`` sentinels are legal entries; NaN is not.
    """
    arr = np.array(t, dtype=np.float64, copy=True)
    if arr.shape != (k,):
        raise DimensionError(f"threshold vector must have length {k}, got shape {arr.shape}")
    if np.any(np.isnan(arr)):
        raise ValidationError("threshold vector contains NaN")
    return arr


@dataclass(frozen=True)
class EvalSummary:
    """Every risk/ambiguity statistic of a set classifier on one dataset.

    Per class ``k``: ``sure[k]`` rows of label ``k`` got a singleton set,
    ``err[k]`` of those singletons exclude ``k``, ``risk[k]`` is their
    ratio (0 when ``sure[k]`` is 0), and ``miscoverage[k]`` is the fraction
    of label-``k`` rows whose set misses ``k``.  Globally,
    ``chance_ambiguity`` is the fraction of rows whose set is not a
    singleton (empty sets count as ambiguous), ``size_ambiguity`` the mean
    set cardinality and ``overall_risk`` the pooled error rate over all
    certain rows.  Raw integer counters are kept so that losses derived
    from two summaries with equal counts are bitwise equal.
    """

    n_rows: int
    n_classes: int
    sure: np.ndarray          # (K,) int64
    err: np.ndarray           # (K,) int64
    miss: np.ndarray          # (K,) int64: label-k rows with k excluded
    label_counts: np.ndarray  # (K,) int64
    n_certain: int
    total_set_size: int
    n_empty: int = 0  # |H| = 0 rows; ambiguous rows split as (n_rows - n_certain - n_empty) multi + n_empty empty
    risk: np.ndarray = field(init=False)
    miscoverage: np.ndarray = field(init=False)
    chance_ambiguity: float = field(init=False)
    size_ambiguity: float = field(init=False)
    overall_risk: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "risk", _readonly(_ratio(self.err, self.sure)))
        object.__setattr__(self, "miscoverage", _readonly(_ratio(self.miss, self.label_counts)))
        n_ambiguous = self.n_rows - self.n_certain
        object.__setattr__(self, "chance_ambiguity", n_ambiguous / self.n_rows)
        object.__setattr__(self, "size_ambiguity", self.total_set_size / self.n_rows)
        total_err = int(self.err.sum())
        object.__setattr__(
            self, "overall_risk", total_err / self.n_certain if self.n_certain > 0 else 0.0
        )

    @property
    def total_err(self) -> int:
        return int(self.err.sum())

    def to_dict(self) -> dict:
        return {
            "n_rows": self.n_rows,
            "k": self.n_classes,
            "sure": [int(v) for v in self.sure],
            "err": [int(v) for v in self.err],
            "risk": [float(v) for v in self.risk],
            "miscoverage": [float(v) for v in self.miscoverage],
            "label_counts": [int(v) for v in self.label_counts],
            "n_certain": self.n_certain,
            "n_empty": self.n_empty,
            "chance_ambiguity": self.chance_ambiguity,
            "size_ambiguity": self.size_ambiguity,
            "overall_risk": self.overall_risk,
        }


def _ratio(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    out = np.zeros(num.shape, dtype=np.float64)
    np.divide(num, den, out=out, where=den > 0)
    return out


@dataclass(frozen=True)
class RiskTargets:
    """Target levels for the risk being controlled.

    ``mode`` is ``"class_specific"`` (per-class conditional risk),
    ``"overall"`` (pooled risk, scalar target) or ``"miscoverage"``
    (per-class unconditional coverage).
    """

    mode: str
    values: np.ndarray | float

    MODES = ("class_specific", "overall", "miscoverage")

    def __post_init__(self):
        from .errors import ConfigError

        if self.mode not in self.MODES:
            raise ConfigError(f"unknown target mode {self.mode!r}")
        if self.mode == "overall":
            v = float(self.values)
            if not 0.0 <= v <= 1.0:
                raise ConfigError("overall risk target must lie in [0, 1]")
            object.__setattr__(self, "values", v)
        else:
            v = np.array(self.values, dtype=np.float64, copy=True)
            if v.ndim != 1:
                raise ConfigError("per-class targets must be a vector")
            if np.any((v < 0) | (v > 1)):
                raise ConfigError("targets must lie in [0, 1]")
            object.__setattr__(self, "values", _readonly(v))

    @classmethod
    def class_specific(cls, values) -> "RiskTargets":
        return cls("class_specific", values)

    @classmethod
    def overall(cls, value: float) -> "RiskTargets":
        return cls("overall", value)

    @classmethod
    def miscoverage(cls, values) -> "RiskTargets":
        return cls("miscoverage", values)


@dataclass(frozen=True)
class PenaltyWeights:
    """Penalty coefficients: one ``lam`` per class plus the optional small
    two-sided coefficient ``lam_prime`` used by overall-risk sweeps
    (``None`` disables the two-sided term)."""

    lam: np.ndarray
    lam_prime: float | None = None

    def __post_init__(self):
        from .errors import ConfigError

        lam = np.array(self.lam, dtype=np.float64, copy=True)
        if lam.ndim != 1 or np.any(lam < 0):
            raise ConfigError("lam must be a vector of non-negative reals")
        if self.lam_prime is not None and self.lam_prime < 0:
            raise ConfigError("lam_prime must be non-negative")
        object.__setattr__(self, "lam", _readonly(lam))

    @classmethod
    def uniform(cls, k: int, lam: float = 1e4, lam_prime: float | None = None) -> "PenaltyWeights":
        return cls(np.full(k, float(lam)), lam_prime)

    @classmethod
    def for_sweep(cls, k: int, lam: float = 1e4) -> "PenaltyWeights":
        # Two-sided term enabled at 1e-4 of lam, used when sampling curve points.
        return cls(np.full(k, float(lam)), 1e-4 * float(lam))


def predict_set(scores_row, t) -> np.ndarray:
    """Membership mask of one prediction set: ``{k : scores_row[k] > t[k]}``."""
    row = np.asarray(scores_row, dtype=np.float64)
    if row.ndim != 1:
        raise DimensionError("scores_row must be a vector")
    if not np.all(np.isfinite(row)):
        raise ValidationError("scores_row contains non-finite entries")
    tv = as_thresholds(t, row.shape[0])
    return row > tv


def membership_matrix(scores: ScoreMatrix, t) -> np.ndarray:
    """(N, K) boolean membership mask of the set classifier on a score matrix."""
    tv = as_thresholds(t, scores.n_classes)
    return scores.values > tv


def summarize_sets(member: np.ndarray, labels: np.ndarray, n_classes: int) -> EvalSummary:
    """Count every summary statistic from an explicit (N, K) membership mask."""
    member = np.asarray(member, dtype=bool)
    labels = np.asarray(labels)
    n, k = member.shape
    if k != n_classes or labels.shape != (n,):
        raise DimensionError("membership mask and labels disagree on shape")
    if n == 0:
        raise DimensionError("cannot summarize an empty dataset")
    cnt = member.sum(axis=1)
    certain = cnt == 1
    member_y = member[np.arange(n), labels]
    label_counts = np.bincount(labels, minlength=n_classes).astype(np.int64)
    sure = np.bincount(labels[certain], minlength=n_classes).astype(np.int64)
    err = np.bincount(labels[certain & ~member_y], minlength=n_classes).astype(np.int64)
    miss = np.bincount(labels[~member_y], minlength=n_classes).astype(np.int64)
    return EvalSummary(
        n_rows=n,
        n_classes=n_classes,
        sure=sure,
        err=err,
        miss=miss,
        label_counts=label_counts,
        n_certain=int(sure.sum()),
        total_set_size=int(cnt.sum()),
        n_empty=int((cnt == 0).sum()),
    )


def evaluate(data: LabeledDataset, t) -> EvalSummary:
    """Evaluate the threshold classifier on a labeled dataset in one pass."""
    return summarize_sets(membership_matrix(data.scores, t), data.labels, data.n_classes)


def excess_risk(summary: EvalSummary, targets: RiskTargets) -> np.ndarray:
    """Per-class excess over the targets: ``max(0, risk_k - target_k)``."""
    from .errors import ConfigError

    if targets.mode != "class_specific":
        raise ConfigError("excess_risk needs class_specific targets")
    tv = np.asarray(targets.values)
    if tv.shape != summary.risk.shape:
        raise DimensionError("targets length does not match the summary")
    return np.maximum(summary.risk - tv, 0.0)
