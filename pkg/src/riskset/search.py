"""Threshold search: fast per-coordinate scan, coordinate descent, restarts.

The per-coordinate scan ranks one class column and walks its sorted values
once, maintaining set-size / sure / err counters incrementally; total cost
is O(KN) instead of the O(KN^2) of re-evaluating the loss at every
candidate.  Because the other K-1 thresholds are frozen during the scan,
every counter trajectory is a cumulative sum of precomputable per-step
integer deltas, which is what the vectorized implementation below builds.

Candidate semantics (shared with every oracle in the test suite):

* membership is strict (score > t), so a threshold equal to a duplicated
  value excludes *all* rows carrying that value -- the scan only stops at
  states realizable by an actual number (blocks of equal values are
  consumed before the loss is read);
* the column maximum is never a candidate (it would mean never predicting
  the class), but ``-inf`` is, so a coordinate can be relaxed entirely;
* ties in loss break toward the smallest candidate index, i.e. the most
  inclusive threshold.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from . import _streams
from .core import (
    NEG_INF,
    EvalSummary,
    LabeledDataset,
    as_thresholds,
    evaluate,
)
from .errors import ConfigError, DimensionError, ResourceError
from .loss import CHANCE, CLASS_SPECIFIC, LABEL, OVERALL, LossConfig, loss, loss_from_counts

DEFAULT_RESTARTS = 10
DEFAULT_NEIGHBORHOOD_DRAWS = 1000
DEFAULT_WINDOW_FRAC = 0.1
MAX_OUTER_ITERS = 100
GRID_LIMIT = 10**7


@dataclass(frozen=True)
class SortedColumns:
    """Per-class sorted score columns plus the index bookkeeping.

    ``values[j, k]`` is the (j+1)-th smallest score of class ``k``;
    ``order[j, k]`` is the row it came from; ``rank_lt[i, k]`` counts rows
    with a strictly smaller class-``k`` score than row ``i`` (used to test
    membership against a quantile index without touching float values).
    """

    values: np.ndarray
    order: np.ndarray
    rank_lt: np.ndarray

    @classmethod
    def from_scores(cls, scores) -> "SortedColumns":
        v = scores.values if hasattr(scores, "values") else np.asarray(scores, dtype=np.float64)
        n, k = v.shape
        order = np.argsort(v, axis=0, kind="stable").astype(np.int64)
        vals = np.take_along_axis(v, order, axis=0)
        rank_lt = np.empty((n, k), dtype=np.int32)
        for c in range(k):
            rank_lt[:, c] = np.searchsorted(vals[:, c], v[:, c], side="left")
        return cls(values=vals, order=order, rank_lt=rank_lt)

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_classes(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class QuickSearchResult:
    value: float
    loss: float
    index: int  # quantile index of the chosen state; 0 encodes -inf


def _membership_state(data: LabeledDataset, tv: np.ndarray):
    """(member, cnt, member_y) of the current thresholds, shared by the K
    per-coordinate scans of one outer iteration (t is frozen during them)."""
    member = data.scores.values > tv
    cnt = member.sum(axis=1, dtype=np.int64)
    member_y = member[np.arange(data.n_rows), data.labels]
    return member, cnt, member_y


def quicksearch(
    cols: SortedColumns,
    data: LabeledDataset,
    t,
    d: int,
    config: LossConfig,
    return_trace: bool = False,
    _state=None,
):
    """Best threshold for coordinate ``d`` with all other coordinates fixed.

    Returns a :class:`QuickSearchResult`; with ``return_trace`` also returns
    ``(indices, values, losses)`` over every realizable candidate state, in
    scan order, for cross-checking against a from-scratch rescan.
    """
    n, k = data.n_rows, data.n_classes
    if not 0 <= d < k:
        raise DimensionError(f"coordinate {d} out of range for K={k}")
    config.check_k(k)
    tv = as_thresholds(t, k)

    y = data.labels
    member, cnt, member_y_all = _state if _state is not None else _membership_state(data, tv)
    # restrict to the non-d classes: these counters are frozen during the scan
    base = cnt - member[:, d]
    member_y = member_y_all & (y != d)

    # State 0: t_d = -inf, every row keeps class d.
    certain0 = base == 0

    # Step deltas: removing the j-th smallest class-d value flips exactly
    # one row out of membership, and its effect depends only on the frozen
    # non-d state of that row.
    rows = cols.order[: n - 1, d]
    b = base[rows]
    yy = y[rows]
    gain = b == 1   # row becomes a (non-d) singleton
    lose = b == 0   # row was the {d} singleton, set becomes empty
    s_delta = gain.astype(np.int64) - lose.astype(np.int64)
    e_delta = (gain & ((yy == d) | ~member_y[rows])).astype(np.int64) - (
        lose & (yy != d)
    ).astype(np.int64)

    n_certain = np.empty(n, dtype=np.int64)
    n_certain[0] = int(certain0.sum())
    np.cumsum(s_delta, out=n_certain[1:])
    n_certain[1:] += n_certain[0]

    total_size = None
    if config.ambiguity != CHANCE:
        total_size = int(base.sum()) + n - np.arange(n, dtype=np.int64)

    kw = {}
    if config.kind == CLASS_SPECIFIC:
        sure0 = np.bincount(y[certain0], minlength=k).astype(np.int64)
        err0 = np.bincount(y[certain0 & (y != d)], minlength=k).astype(np.int64)
        sure = np.empty((k, n), dtype=np.int64)
        err = np.empty((k, n), dtype=np.int64)
        for c in range(k):
            mask = yy == c
            sure[c, 0] = sure0[c]
            np.cumsum(s_delta * mask, out=sure[c, 1:])
            sure[c, 1:] += sure0[c]
            err[c, 0] = err0[c]
            np.cumsum(e_delta * mask, out=err[c, 1:])
            err[c, 1:] += err0[c]
        kw = dict(sure=sure, err=err)
    elif config.kind == OVERALL:
        total_err = np.empty(n, dtype=np.int64)
        total_err[0] = int((certain0 & (y != d)).sum())
        np.cumsum(e_delta, out=total_err[1:])
        total_err[1:] += total_err[0]
        kw = dict(total_err=total_err)
    else:  # LABEL: only class d's miscoverage moves during the scan
        miss0 = np.bincount(y[(y != d) & ~member_y], minlength=k).astype(np.int64)
        miss = np.repeat(miss0[:, None], n, axis=1)
        np.cumsum(yy == d, out=miss[d, 1:])
        miss[d, 1:] += miss0[d]
        label_counts = np.bincount(y, minlength=k).astype(np.int64)
        kw = dict(miss=miss, label_counts=label_counts)

    losses = loss_from_counts(
        config, n_rows=n, n_certain=n_certain, total_set_size=total_size, **kw
    )

    vals = cols.values[:, d]
    valid = np.zeros(n, dtype=bool)
    valid[0] = True
    if n >= 2:
        valid[1:] = vals[1:] > vals[:-1]

    masked = np.where(valid, losses, np.inf)
    j = int(np.argmin(masked))
    result = QuickSearchResult(
        value=NEG_INF if j == 0 else float(vals[j - 1]),
        loss=float(losses[j]),
        index=j,
    )
    if return_trace:
        idxs = np.flatnonzero(valid)
        trace_vals = np.where(idxs == 0, NEG_INF, vals[np.maximum(idxs - 1, 0)])
        return result, (idxs, trace_vals, losses[idxs])
    return result


@dataclass(frozen=True)
class DescentResult:
    thresholds: np.ndarray
    indices: np.ndarray
    loss: float
    accepted_losses: list
    n_outer: int
    hit_cap: bool


def _indices_for(cols: SortedColumns, t: np.ndarray) -> np.ndarray:
    """Quantile index of each threshold value: #{rows with score <= t_k}."""
    k = cols.n_classes
    idx = np.empty(k, dtype=np.int64)
    for c in range(k):
        idx[c] = np.searchsorted(cols.values[:, c], t[c], side="right")
    return idx


def coordinate_descent(
    data: LabeledDataset,
    config: LossConfig,
    init,
    cols: SortedColumns | None = None,
    max_outer: int = MAX_OUTER_ITERS,
) -> DescentResult:
    """Repeatedly scan all coordinates and apply the single best update.

    Each outer iteration runs the per-coordinate scan for every class
    against the current thresholds and commits only the coordinate whose
    conditional optimum improves the loss the most; it stops when no
    coordinate improves strictly, or at ``max_outer`` as a safety cap.
    Accepted losses are strictly decreasing, so termination is guaranteed
    on the finite candidate grid.
    """
    k = data.n_classes
    if cols is None:
        cols = SortedColumns.from_scores(data.scores)
    t = as_thresholds(init, k)
    idx = _indices_for(cols, t)
    current = loss(evaluate(data, t), config)
    history = [current]
    hit_cap = False
    n_outer = 0
    for _ in range(max_outer):
        n_outer += 1
        state = _membership_state(data, t)
        best_c, best = -1, None
        for c in range(k):
            r = quicksearch(cols, data, t, c, config, _state=state)
            if best is None or r.loss < best.loss:
                best_c, best = c, r
        if best.loss < current:
            current = best.loss
            t[best_c] = best.value
            idx[best_c] = best.index
            history.append(current)
        else:
            break
    else:
        hit_cap = True
    return DescentResult(
        thresholds=t, indices=idx, loss=current, accepted_losses=history,
        n_outer=n_outer, hit_cap=hit_cap,
    )


@dataclass(frozen=True)
class CalibrationResult:
    thresholds: np.ndarray
    loss: float
    summary: EvalSummary
    restarts_used: int
    seed: int
    neighborhood_sampled: bool
    diagnostics: dict = field(default_factory=dict)


def _batched_index_losses(data, cols, J, config, chunk=256):
    """Loss of every quantile-index threshold vector in ``J`` (B, K).

    Membership is decided by integer rank comparison (index j includes row
    i in class k iff j <= rank_lt[i, k]), which is exactly 'score > value
    at index j' and is immune to duplicated score values.
    """
    scores = data.scores.values
    y = data.labels
    n, k = scores.shape
    lt = cols.rank_lt
    lt_y = lt[np.arange(n), y]
    need_classwise = config.kind in (CLASS_SPECIFIC, LABEL)
    if need_classwise:
        onehot = (y[:, None] == np.arange(k)).astype(np.float32)
    label_counts = np.bincount(y, minlength=k).astype(np.int64)

    J32 = np.ascontiguousarray(J, dtype=np.int32)
    out = np.empty(J.shape[0], dtype=np.float64)
    for lo in range(0, J.shape[0], chunk):
        jc = J32[lo : lo + chunk]
        b = jc.shape[0]
        cnt = np.zeros((b, n), dtype=np.int16)
        for c in range(k):
            cnt += jc[:, c : c + 1] <= lt[None, :, c]
        member_y = jc[:, y] <= lt_y[None, :]
        certain = cnt == 1
        wrong = certain & ~member_y

        n_certain = certain.sum(axis=1, dtype=np.int64)
        total_size = None
        if config.ambiguity != CHANCE:
            total_size = cnt.sum(axis=1, dtype=np.int64)
        kw = {}
        if config.kind == CLASS_SPECIFIC:
            # Counts are small integers, exactly representable in float32.
            sure = (certain.astype(np.float32) @ onehot).astype(np.int64).T
            err = (wrong.astype(np.float32) @ onehot).astype(np.int64).T
            kw = dict(sure=sure, err=err)
        elif config.kind == OVERALL:
            kw = dict(total_err=wrong.sum(axis=1, dtype=np.int64))
        else:
            miss = ((~member_y).astype(np.float32) @ onehot).astype(np.int64).T
            kw = dict(miss=miss, label_counts=label_counts)
        out[lo : lo + b] = loss_from_counts(
            config, n_rows=n, n_certain=n_certain, total_set_size=total_size, **kw
        )
    return out


def calibrate(
    data: LabeledDataset,
    config: LossConfig,
    restarts: int = DEFAULT_RESTARTS,
    neighborhood: bool = True,
    neighborhood_draws: int = DEFAULT_NEIGHBORHOOD_DRAWS,
    window_frac: float = DEFAULT_WINDOW_FRAC,
    subsample: int | None = None,
    seed: int = 0,
    threads: int = 1,
    max_outer: int = MAX_OUTER_ITERS,
    refine_rounds: int = 20,
    refine_descents: int = 3,
    extra_inits=(),
) -> CalibrationResult:
    """Full calibration: random restarts, then quantile-window refinement.

    Runs ``restarts`` independent descents from thresholds drawn uniformly
    from each sorted column (each restart owns a private RNG stream, so the
    result does not depend on ``threads``), keeps the lowest loss, then --
    when ``neighborhood`` is on -- repeatedly draws ``neighborhood_draws``
    threshold vectors whose quantile indices lie within
    ``window_frac * N`` of the incumbent's indices (clamped to [1, N-1]),
    keeps the overall minimum, and restarts the descent from the best few
    samples.  Rounds continue while they improve (at most
    ``refine_rounds``): a single sampling pass is not enough, because the
    risk penalty creates plateaus where no single-coordinate move is
    admissible and only the sample-then-descend loop travels along them.
    ``extra_inits`` seeds additional descents (used to warm-start sweeps
    from a neighboring target's solution).  With ``subsample`` the search
    runs on a seeded uniform row subset but the reported summary and loss
    are on the full data.
    """
    k = data.n_classes
    config.check_k(k)
    if restarts < 1:
        raise ConfigError("restarts must be >= 1")

    search_data = data
    subsample_rows = None
    if subsample is not None:
        if subsample < k:
            raise ConfigError(f"subsample={subsample} is below K={k}: quantiles degenerate")
        if subsample > data.n_rows:
            raise ConfigError("subsample exceeds the number of rows")
        subsample_rows = np.sort(
            _streams.stream(seed, _streams.SUBSAMPLE).choice(
                data.n_rows, size=subsample, replace=False
            )
        )
        search_data = data.take(subsample_rows)

    cols = SortedColumns.from_scores(search_data.scores)
    m = search_data.n_rows
    arange_k = np.arange(k)

    def run_restart(r: int) -> DescentResult:
        gen = _streams.stream(seed, _streams.RESTART, r)
        # uniform over the admissible positions: the column maximum is never
        # a candidate (it would silence the class), so do not start there
        idx0 = gen.integers(1, max(2, m), size=k)
        init = cols.values[idx0 - 1, arange_k]
        return coordinate_descent(search_data, config, init, cols=cols, max_outer=max_outer)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            descents = list(pool.map(run_restart, range(restarts)))
    else:
        descents = [run_restart(r) for r in range(restarts)]
    for init in extra_inits:
        descents.append(
            coordinate_descent(search_data, config, init, cols=cols, max_outer=max_outer)
        )

    best = descents[0]
    for d in descents[1:]:
        if d.loss < best.loss:
            best = d
    t, idx, incumbent = best.thresholds.copy(), best.indices.copy(), best.loss

    sampled = False
    improved_by_sampling = False
    rounds_used = 0
    if neighborhood and m >= 2 and neighborhood_draws > 0:
        sampled = True
        w = math.floor(window_frac * m)
        gen = _streams.stream(seed, _streams.NEIGHBORHOOD)
        for _ in range(refine_rounds):
            rounds_used += 1
            center = np.clip(idx, 1, m - 1)
            lo = np.maximum(1, center - w)
            hi = np.minimum(m - 1, center + w)
            J = np.empty((neighborhood_draws, k), dtype=np.int64)
            for c in range(k):
                J[:, c] = gen.integers(lo[c], hi[c] + 1, size=neighborhood_draws)
            losses = _batched_index_losses(search_data, cols, J, config)
            improved = False
            b = int(np.argmin(losses))
            if losses[b] < incumbent:
                incumbent = float(losses[b])
                idx = J[b].copy()
                t = cols.values[idx - 1, arange_k].astype(np.float64)
                improved = improved_by_sampling = True
            for bi in np.argsort(losses, kind="stable")[:refine_descents]:
                d = coordinate_descent(
                    search_data, config, cols.values[J[bi] - 1, arange_k],
                    cols=cols, max_outer=max_outer,
                )
                if d.loss < incumbent:
                    incumbent = d.loss
                    t, idx = d.thresholds.copy(), d.indices.copy()
                    improved = improved_by_sampling = True
            if not improved:
                break

    summary = evaluate(data, t)
    final_loss = loss(summary, config) if subsample is not None else incumbent
    diagnostics = {
        "restart_losses": [d.loss for d in descents],
        "hit_iteration_cap": any(d.hit_cap for d in descents),
        "neighborhood_improved": improved_by_sampling,
        "refine_rounds_used": rounds_used,
        "indices": idx.tolist(),
        "subsample": None if subsample_rows is None else int(subsample_rows.size),
        "search_loss": incumbent,
    }
    return CalibrationResult(
        thresholds=t,
        loss=final_loss,
        summary=summary,
        restarts_used=restarts,
        seed=seed,
        neighborhood_sampled=sampled,
        diagnostics=diagnostics,
    )


def coordinate_candidates(cols: SortedColumns, d: int):
    """Realizable candidate (index, value) pairs for one coordinate.

    Index 0 encodes -inf; index j >= 1 maps to the j-th smallest value and
    is kept only when the next sorted value is strictly greater, which
    drops duplicate-block interiors and the column maximum.
    """
    vals = cols.values[:, d]
    n = vals.shape[0]
    idxs = [0]
    values = [NEG_INF]
    for j in range(1, n):
        if vals[j] > vals[j - 1]:
            idxs.append(j)
            values.append(float(vals[j - 1]))
    return np.asarray(idxs, dtype=np.int64), np.asarray(values, dtype=np.float64)


def exhaustive_oracle(
    data: LabeledDataset,
    config: LossConfig,
    mode: str,
    t=None,
    d: int | None = None,
    grid_limit: int = GRID_LIMIT,
):
    """Brute-force reference optimizers.

    ``per_coordinate`` re-evaluates the full loss from scratch at every
    candidate of one coordinate (``t`` and ``d`` required); ``full_grid``
    enumerates every candidate tuple and returns the exact global optimum,
    breaking ties toward the lexicographically smallest index tuple.
    Returns ``(thresholds, loss)``.
    """
    k = data.n_classes
    config.check_k(k)
    cols = SortedColumns.from_scores(data.scores)
    if mode == "per_coordinate":
        if t is None or d is None:
            raise ConfigError("per_coordinate mode requires t and d")
        if not 0 <= d < k:
            raise DimensionError(f"coordinate {d} out of range for K={k}")
        base = as_thresholds(t, k)
        _, values = coordinate_candidates(cols, d)
        best_v, best_l = None, None
        for v in values:
            base[d] = v
            l = loss(evaluate(data, base), config)
            if best_l is None or l < best_l:
                best_v, best_l = float(v), l
        base[d] = best_v
        return base, best_l
    if mode == "full_grid":
        per_coord = [coordinate_candidates(cols, c)[1] for c in range(k)]
        total = 1
        for vals in per_coord:
            total *= vals.shape[0]
        if total > grid_limit:
            raise ResourceError(f"grid of {total} tuples exceeds the limit of {grid_limit}")
        best_t, best_l = None, None
        for combo in product(*per_coord):
            tv = np.asarray(combo, dtype=np.float64)
            l = loss(evaluate(data, tv), config)
            if best_l is None or l < best_l:
                best_t, best_l = tv, l
        return best_t, best_l
    raise ConfigError(f"unknown oracle mode {mode!r}")
