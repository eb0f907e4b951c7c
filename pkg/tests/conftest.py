import numpy as np
import pytest

import riskset as rs


@pytest.fixture
def toy2():
    """Two rows, two classes, separable."""
    return rs.LabeledDataset(rs.ScoreMatrix([[0.9, 0.1], [0.2, 0.8]]), [0, 1])


def random_dataset(seed, n=None, k=None, quantize=None):
    g = np.random.default_rng(seed)
    n = n or int(g.integers(3, 80))
    k = k or int(g.integers(2, 6))
    if quantize:
        scores = g.integers(0, quantize, (n, k)) / quantize
    else:
        scores = g.random((n, k))
    labels = g.integers(0, k, n)
    return rs.LabeledDataset(rs.ScoreMatrix(scores), labels)


def random_config(seed, k, kind=None):
    g = np.random.default_rng(seed + 77)
    kind = kind or ("class_specific", "overall", "label")[seed % 3]
    lam = float(g.choice([0.0, 1.0, 100.0, 1e4]))
    if kind == "class_specific":
        targets = rs.RiskTargets.class_specific(g.random(k) * 0.4)
    elif kind == "overall":
        targets = rs.RiskTargets.overall(float(g.random() * 0.4))
    else:
        targets = rs.RiskTargets.miscoverage(g.random(k) * 0.5)
    lam_prime = 0.01 if (kind == "overall" and seed % 2) else None
    amb = rs.SIZE if seed % 5 == 0 else ""
    return rs.LossConfig(kind, targets, rs.PenaltyWeights.uniform(k, lam, lam_prime), amb)


def recount_summary(data, t):
    """From-definition recount of every summary statistic, plain Python."""
    n, k = data.n_rows, data.n_classes
    sure = [0] * k
    err = [0] * k
    miss = [0] * k
    counts = [0] * k
    n_certain = 0
    total_size = 0
    for i in range(n):
        members = {c for c in range(k) if data.scores.values[i, c] > t[c]}
        y = int(data.labels[i])
        counts[y] += 1
        total_size += len(members)
        if len(members) == 1:
            n_certain += 1
            sure[y] += 1
            if y not in members:
                err[y] += 1
        if y not in members:
            miss[y] += 1
    return dict(sure=sure, err=err, miss=miss, counts=counts,
                n_certain=n_certain, total_size=total_size)
