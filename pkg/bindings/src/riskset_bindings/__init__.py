"""In-process bindings: the calibration toolkit over plain numeric arrays.

Entry points accept in-memory ``(N, K)`` score arrays and length-``N``
label arrays, validate them against the core invariants, and delegate to
the library.  Given identical inputs and seeds, ``calibrate`` returns
exactly the content the command-line tool writes to a threshold file, so
results move freely between pipelines and scripts.

Arrays are never mutated; non-contiguous or non-float64 inputs are copied
on entry.  Validation failures raise the library's exceptions (ValueError
family via ``riskset.RisksetError``) before any work starts.  Long
computations run inside NumPy kernels, which release the interpreter lock
on their own; the bindings add no locking of their own.
"""

from __future__ import annotations

import numpy as np

import riskset as _core
from riskset.bounds import TailBoundQuery
from riskset.cli import calibration_payload

__version__ = _core.__version__

__all__ = [
    "__version__",
    "calibrate",
    "evaluate",
    "generate",
    "predict_set",
    "risk_tail_bound",
]

_CONFIG_KEYS = {
    "method", "loss", "targets", "lambda", "restarts", "neighborhood",
    "subsample", "seed", "threads",
}


def _dataset(scores_array, labels_array) -> _core.LabeledDataset:
    scores = np.ascontiguousarray(scores_array, dtype=np.float64)
    labels = np.ascontiguousarray(labels_array)
    return _core.LabeledDataset(_core.ScoreMatrix(scores), labels)


def _as_target_list(targets) -> list:
    if np.isscalar(targets):
        return [float(targets)]
    return [float(v) for v in np.asarray(targets).ravel()]


def generate(n: int, k: int, signal, sigma: float, seed: int):
    """Synthetic dataset as ``(scores, labels)`` arrays; see the core docs."""
    data = _core.generate(
        _core.SynthSpec(n=int(n), k_classes=int(k), signal=signal, sigma=float(sigma), seed=int(seed))
    )
    return data.scores.values.copy(), data.labels.copy()


def calibrate(scores_array, labels_array, config: dict) -> dict:
    """Calibrate thresholds on in-memory arrays.

    ``config`` keys mirror the command-line flags: ``method`` (scrib,
    scrib-minus, label or sgr), ``loss`` (class, overall or label),
    ``targets`` (scalar or length-K sequence), ``lambda``, ``restarts``,
    ``neighborhood`` (bool or "on"/"off"), ``subsample``, ``seed`` and
    ``threads``.  Returns the same mapping the CLI writes as a threshold
    file: thresholds, membership marker, loss recipe and diagnostics.
    """
    if not isinstance(config, dict):
        raise _core.ConfigError("config must be a mapping")
    unknown = set(config) - _CONFIG_KEYS
    if unknown:
        raise _core.ConfigError(f"unknown config keys: {sorted(unknown)}")
    data = _dataset(scores_array, labels_array)
    neighborhood = config.get("neighborhood", True)
    if isinstance(neighborhood, str):
        neighborhood = neighborhood == "on"
    return calibration_payload(
        data,
        method=config.get("method", "scrib"),
        loss_name=config.get("loss", "class"),
        raw_targets=_as_target_list(config.get("targets", 0.1)),
        lam=float(config.get("lambda", 1e4)),
        restarts=int(config.get("restarts", 10)),
        neighborhood=bool(neighborhood),
        subsample=config.get("subsample"),
        seed=int(config.get("seed", 0)),
        threads=int(config.get("threads", 1)),
    )


def predict_set(scores_array, thresholds) -> np.ndarray:
    """Boolean membership mask (rows x classes) under strict thresholds."""
    scores = np.ascontiguousarray(scores_array, dtype=np.float64)
    if scores.ndim == 1:
        return _core.predict_set(scores, thresholds)
    return _core.membership_matrix(_core.ScoreMatrix(scores), thresholds)


def evaluate(scores_array, labels_array, thresholds) -> dict:
    """Every risk/ambiguity statistic of the induced set classifier."""
    data = _dataset(scores_array, labels_array)
    return _core.evaluate(data, thresholds).to_dict()


def risk_tail_bound(r: float, epsilon: float, n_k: int) -> float:
    """Upper bound on the chance the empirical class risk exceeds r + epsilon."""
    return _core.risk_tail_bound(TailBoundQuery(float(r), float(epsilon), int(n_k)))
