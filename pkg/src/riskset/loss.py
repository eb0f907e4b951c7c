"""Loss functions turning risk constraints into an unconstrained objective.

Three kinds are supported:

* ``class_specific`` -- ambiguity + sum_k lam_k * (risk_k - target_k)_+^2
* ``overall``        -- ambiguity + lam * (overall_risk - target)_+^2
                        [+ lam' * (overall_risk - target)^2 when enabled]
* ``label``          -- ambiguity + sum_k lam_k * (miscoverage_k - target_k)_+^2

The arithmetic lives in one vectorized kernel operating on integer
counters.  The scalar path (``loss``) and every incremental scanner feed
the same kernel, so equal counts give bitwise-equal losses.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import EvalSummary, PenaltyWeights, RiskTargets
from .errors import ConfigError

CLASS_SPECIFIC = "class_specific"
OVERALL = "overall"
LABEL = "label"

CHANCE = "chance"
SIZE = "size"

_TARGET_MODE = {CLASS_SPECIFIC: "class_specific", OVERALL: "overall", LABEL: "miscoverage"}


@dataclass(frozen=True)
class LossConfig:
    """Loss kind, targets, penalty weights and which ambiguity to charge.

    ``ambiguity`` defaults to chance-ambiguity for ``class_specific`` and
    ``overall`` losses and to size-ambiguity for the ``label`` loss.
    """

    kind: str
    targets: RiskTargets
    weights: PenaltyWeights
    ambiguity: str = ""

    def __post_init__(self):
        if self.kind not in (CLASS_SPECIFIC, OVERALL, LABEL):
            raise ConfigError(f"unknown loss kind {self.kind!r}")
        if self.targets.mode != _TARGET_MODE[self.kind]:
            raise ConfigError(
                f"loss kind {self.kind!r} needs targets in mode "
                f"{_TARGET_MODE[self.kind]!r}, got {self.targets.mode!r}"
            )
        if not self.ambiguity:
            object.__setattr__(self, "ambiguity", SIZE if self.kind == LABEL else CHANCE)
        if self.ambiguity not in (CHANCE, SIZE):
            raise ConfigError(f"unknown ambiguity kind {self.ambiguity!r}")

    def check_k(self, k: int) -> None:
        if self.weights.lam.shape[0] != k:
            raise ConfigError(f"lam has length {self.weights.lam.shape[0]}, expected {k}")
        if self.kind != OVERALL and np.asarray(self.targets.values).shape[0] != k:
            raise ConfigError("targets length does not match the number of classes")


def _relu_sq_term(lam: float, rate: np.ndarray, target: float) -> np.ndarray:
    d = rate - target
    d = np.where(d > 0.0, d, 0.0)
    return lam * d * d


def loss_from_counts(
    config: LossConfig,
    n_rows: int,
    n_certain: np.ndarray,
    total_set_size: np.ndarray | None = None,
    sure: np.ndarray | None = None,
    err: np.ndarray | None = None,
    total_err: np.ndarray | None = None,
    miss: np.ndarray | None = None,
    label_counts: np.ndarray | None = None,
) -> np.ndarray:
    """Vectorized loss over B candidate states given integer counters.

    ``n_certain``/``total_set_size``/``total_err`` have shape (B,),
    per-class counters shape (K, B).  Accumulation order is fixed
    (ambiguity first, then classes 0..K-1) so any two callers with equal
    counts obtain identical floats.
    """
    n_certain = np.asarray(n_certain)
    if config.ambiguity == CHANCE:
        amb = (n_rows - n_certain) / n_rows
    else:
        amb = np.asarray(total_set_size) / n_rows

    pen = np.zeros(n_certain.shape, dtype=np.float64)
    lam = config.weights.lam
    if config.kind == CLASS_SPECIFIC:
        tv = config.targets.values
        for c in range(lam.shape[0]):
            rate = np.zeros(pen.shape, dtype=np.float64)
            np.divide(err[c], sure[c], out=rate, where=np.asarray(sure[c]) > 0)
            pen = pen + _relu_sq_term(lam[c], rate, tv[c])
    elif config.kind == OVERALL:
        rate = np.zeros(pen.shape, dtype=np.float64)
        np.divide(total_err, n_certain, out=rate, where=n_certain > 0)
        target = config.targets.values
        pen = pen + _relu_sq_term(lam[0], rate, target)
        if config.weights.lam_prime is not None:
            d = rate - target
            pen = pen + config.weights.lam_prime * d * d
    else:  # LABEL
        tv = config.targets.values
        for c in range(lam.shape[0]):
            rate = np.zeros(pen.shape, dtype=np.float64)
            np.divide(miss[c], label_counts[c], out=rate, where=np.asarray(label_counts[c]) > 0)
            pen = pen + _relu_sq_term(lam[c], rate, tv[c])
    return amb + pen


def loss(summary: EvalSummary, config: LossConfig) -> float:
    """Loss of one evaluated classifier state."""
    config.check_k(summary.n_classes)
    one = lambda x: np.asarray([x], dtype=np.int64)
    percls = lambda a: np.asarray(a, dtype=np.int64).reshape(summary.n_classes, 1)
    out = loss_from_counts(
        config,
        n_rows=summary.n_rows,
        n_certain=one(summary.n_certain),
        total_set_size=one(summary.total_set_size),
        sure=percls(summary.sure),
        err=percls(summary.err),
        total_err=one(summary.total_err),
        miss=percls(summary.miss),
        label_counts=percls(summary.label_counts),
    )
    return float(out[0])
