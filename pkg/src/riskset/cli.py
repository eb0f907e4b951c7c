"""Command-line surface.

Subcommands: synth, calibrate, apply, evaluate, sweep, correlate, bound,
report.  Exit status is 0 on success, 1 on any validation problem (bad
flags, malformed files, inconsistent shapes) and 2 on I/O failure; errors
are reported as a single ``error: <category>: <message>`` line on stderr.

Labels and class ids are 0-indexed in every file.  ``--seed`` falls back
to the ``RISKSET_SEED`` environment variable.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__, bench, io
from .baselines import label_calibrate, scrib_minus_calibrate, sgr_calibrate, sgr_membership
from .bounds import TailBoundQuery, risk_tail_bound
from .core import PenaltyWeights, RiskTargets, membership_matrix, summarize_sets
from .errors import ConfigError, RisksetError, ValidationError
from .loss import CLASS_SPECIFIC, LABEL, OVERALL, LossConfig, loss as loss_of
from .search import calibrate

_LOSS_KINDS = {"class": CLASS_SPECIFIC, "overall": OVERALL, "label": LABEL}


class _CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _CliError(message)


def _parse_floats(text: str) -> list:
    try:
        return [float(v) for v in text.split(",") if v != ""]
    except ValueError:
        raise _CliError(f"cannot parse float list {text!r}") from None


def _resolve_seed(value, required: bool) -> int:
    if value is None:
        env = os.environ.get("RISKSET_SEED")
        if env is not None:
            try:
                value = int(env)
            except ValueError:
                raise _CliError(f"RISKSET_SEED={env!r} is not an integer") from None
        elif required:
            raise _CliError("a seed is required (--seed or RISKSET_SEED)")
        else:
            value = 0
    if value < 0:
        raise _CliError("seed must be non-negative")
    return int(value)


def _targets_vector(values: list, k: int) -> np.ndarray:
    if len(values) == 1:
        return np.full(k, values[0])
    if len(values) != k:
        raise ConfigError(f"expected {k} targets (or one to broadcast), got {len(values)}")
    return np.asarray(values)


def build_parser() -> _Parser:
    p = _Parser(prog="riskset", description=__doc__)
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("synth", help="generate a synthetic dataset CSV")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--signal", required=True, help="comma-separated strengths, length K")
    sp.add_argument("--sigma", type=float, required=True)
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--out", required=True)

    cp = sub.add_parser("calibrate", help="fit thresholds and write a threshold JSON")
    cp.add_argument("--data", required=True)
    cp.add_argument("--method", choices=("scrib", "scrib-minus", "label", "sgr"), required=True)
    cp.add_argument("--loss", choices=tuple(_LOSS_KINDS), default="class")
    cp.add_argument("--targets", required=True, help="comma-separated, or one value to broadcast")
    cp.add_argument("--lambda", dest="lam", type=float, default=1e4)
    cp.add_argument("--restarts", type=int, default=10)
    cp.add_argument("--neighborhood", choices=("on", "off"), default="on")
    cp.add_argument("--subsample", type=int, default=None)
    cp.add_argument("--seed", type=int, default=None)
    cp.add_argument("--threads", type=int, default=1)
    cp.add_argument("--out", required=True)

    ap = sub.add_parser("apply", help="write per-row predicted sets for a threshold file")
    ap.add_argument("--data", required=True)
    ap.add_argument("--thresholds", required=True)
    ap.add_argument("--out", required=True)

    ep = sub.add_parser("evaluate", help="print the evaluation summary of a threshold file")
    ep.add_argument("--data", required=True)
    ep.add_argument("--thresholds", required=True)
    ep.add_argument("--format", choices=("json", "csv"), default="json")

    wp = sub.add_parser("sweep", help="accuracy-ambiguity sweep and AUC")
    wp.add_argument("--valid", required=True)
    wp.add_argument("--test", required=True)
    wp.add_argument("--methods", default="scrib,sgr")
    wp.add_argument("--stride", type=float, default=0.01)
    wp.add_argument("--anchors", default="0,1", help="ambiguity span endpoints lo,hi")
    wp.add_argument("--lambda", dest="lam", type=float, default=1e4)
    wp.add_argument("--restarts", type=int, default=10)
    wp.add_argument("--neighborhood", choices=("on", "off"), default="on")
    wp.add_argument("--seed", type=int, default=None)
    wp.add_argument("--threads", type=int, default=1)
    wp.add_argument("--out", default=None, help="JSON report path (stdout when omitted)")
    wp.add_argument("--curves-out", default=None, help="flat CSV of curve points")

    xp = sub.add_parser("correlate", help="chance- vs size-ambiguity correlation")
    xp.add_argument("--valid", required=True)
    xp.add_argument("--test", required=True)
    xp.add_argument("--trials", type=int, default=1000)
    xp.add_argument("--seed", type=int, default=None)

    bp = sub.add_parser("bound", help="print the risk deviation tail bound")
    bp.add_argument("--r", type=float, required=True)
    bp.add_argument("--eps", type=float, required=True)
    bp.add_argument("--n", type=int, required=True)

    rp = sub.add_parser("report", help="class-specific risk report across methods")
    rp.add_argument("--valid", required=True)
    rp.add_argument("--test", required=True)
    rp.add_argument("--targets", required=True)
    rp.add_argument("--methods", default="sgr,label,scrib-minus,scrib")
    rp.add_argument("--lambda", dest="lam", type=float, default=1e4)
    rp.add_argument("--restarts", type=int, default=10)
    rp.add_argument("--seed", type=int, default=None)
    rp.add_argument("--out", default=None)

    return p


def _cmd_synth(args) -> int:
    from .synth import SynthSpec, generate

    seed = _resolve_seed(args.seed, required=True)
    signal = _parse_floats(args.signal)
    spec = SynthSpec(n=args.n, k_classes=args.k, signal=signal, sigma=args.sigma, seed=seed)
    io.write_dataset_csv(args.out, generate(spec))
    return 0


def _loss_config(kind: str, targets: np.ndarray | float, k: int, lam: float) -> LossConfig:
    if kind == OVERALL:
        return LossConfig(OVERALL, RiskTargets.overall(float(targets)), PenaltyWeights.uniform(k, lam))
    mode = RiskTargets.class_specific if kind == CLASS_SPECIFIC else RiskTargets.miscoverage
    return LossConfig(kind, mode(targets), PenaltyWeights.uniform(k, lam))


def calibration_payload(
    data,
    method: str,
    loss_name: str,
    raw_targets: list,
    lam: float,
    restarts: int,
    neighborhood: bool,
    subsample,
    seed: int,
    threads: int = 1,
) -> dict:
    """Calibrate with any method and build the threshold-file payload.

    One code path serves both the CLI and the in-process bindings, so the
    two surfaces produce identical content for identical inputs.
    """
    k = data.n_classes
    kind = _LOSS_KINDS[loss_name]

    if method == "sgr":
        if len(raw_targets) != 1:
            raise ConfigError("sgr takes a single overall risk target")
        res = sgr_calibrate(data, raw_targets[0])
        return io.threshold_payload(
            k, [res.confidence_threshold] * k, "sgr", "overall", raw_targets[0], None, seed,
            {
                "coverage": res.coverage,
                "achieved_risk": res.achieved_risk,
                "feasible": res.feasible,
                "summary": summarize_sets(
                    sgr_membership(data.scores.values, res.confidence_threshold),
                    data.labels, k,
                ).to_dict(),
            },
        )
    if method == "label":
        alpha = _targets_vector(raw_targets, k)
        t = label_calibrate(data, alpha)
        config = _loss_config(LABEL, alpha, k, lam)
        summary = summarize_sets(membership_matrix(data.scores, t), data.labels, k)
        return io.threshold_payload(
            k, t, "label", "label", [float(v) for v in alpha], lam, seed,
            {"summary": summary.to_dict(), "loss": loss_of(summary, config)},
        )

    if kind == OVERALL:
        if len(raw_targets) != 1:
            raise ConfigError("overall loss takes a single target")
        targets_arg: np.ndarray | float = raw_targets[0]
        targets_json: object = raw_targets[0]
    else:
        tv = _targets_vector(raw_targets, k)
        targets_arg = tv
        targets_json = [float(v) for v in tv]
    config = _loss_config(kind, targets_arg, k, lam)
    if method == "scrib-minus":
        res = scrib_minus_calibrate(data, config)
    elif method == "scrib":
        res = calibrate(
            data, config,
            restarts=restarts,
            neighborhood=neighborhood,
            subsample=subsample,
            seed=seed,
            threads=threads,
        )
    else:
        raise ConfigError(f"unknown calibration method {method!r}")
    return io.threshold_payload(
        k, res.thresholds, method, loss_name, targets_json, lam, seed,
        {
            "loss": res.loss,
            "summary": res.summary.to_dict(),
            "restarts_used": res.restarts_used,
            "neighborhood_sampled": res.neighborhood_sampled,
            **res.diagnostics,
        },
    )


def _cmd_calibrate(args) -> int:
    data = io.read_dataset_csv(args.data)
    seed = _resolve_seed(args.seed, required=args.method == "scrib")
    payload = calibration_payload(
        data,
        method=args.method,
        loss_name=args.loss,
        raw_targets=_parse_floats(args.targets),
        lam=args.lam,
        restarts=args.restarts,
        neighborhood=args.neighborhood == "on",
        subsample=args.subsample,
        seed=seed,
        threads=args.threads,
    )
    io.write_threshold_json(args.out, payload)
    return 0


def _sets_for(payload: dict, data) -> np.ndarray:
    if payload["k"] != data.n_classes:
        raise ValidationError(
            f"threshold file has k={payload['k']} but the data has K={data.n_classes}"
        )
    if payload.get("method") == "sgr":
        return sgr_membership(data.scores.values, float(payload["thresholds_array"][0]))
    return membership_matrix(data.scores, payload["thresholds_array"])


def _cmd_apply(args) -> int:
    data = io.read_dataset_csv(args.data)
    payload = io.read_threshold_json(args.thresholds)
    io.write_sets_csv(args.out, _sets_for(payload, data))
    return 0


def _cmd_evaluate(args) -> int:
    data = io.read_dataset_csv(args.data)
    payload = io.read_threshold_json(args.thresholds)
    summary = summarize_sets(_sets_for(payload, data), data.labels, data.n_classes)
    d = summary.to_dict()
    if args.format == "json":
        print(json.dumps(d, indent=2))
    else:
        keys, cells = [], []
        for key, value in d.items():
            if isinstance(value, list):
                keys.extend(f"{key}_{i}" for i in range(len(value)))
                cells.extend(repr(v) for v in value)
            else:
                keys.append(key)
                cells.append(repr(value))
        print(",".join(keys))
        print(",".join(cells))
    return 0


def _cmd_sweep(args) -> int:
    valid = io.read_dataset_csv(args.valid)
    test = io.read_dataset_csv(args.test)
    seed = _resolve_seed(args.seed, required=True)
    anchors = _parse_floats(args.anchors)
    if len(anchors) != 2:
        raise _CliError("--anchors must be lo,hi")
    methods = [m for m in args.methods.split(",") if m]
    results = {}
    for i, method in enumerate(methods):
        results[method] = bench.auc_sweep(
            valid, test, method,
            stride=args.stride,
            span_anchors=(anchors[0], anchors[1]),
            seed=seed + i,
            lam=args.lam,
            restarts=args.restarts,
            neighborhood=args.neighborhood == "on",
            threads=args.threads,
        )
    doc = {"seed": seed, "stride": args.stride, "anchors": anchors,
           "methods": {m: r.to_dict() for m, r in results.items()}}
    text = json.dumps(doc, indent=2)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    if args.curves_out:
        import csv as _csv

        with open(args.curves_out, "w", newline="", encoding="utf-8") as fh:
            w = _csv.writer(fh)
            w.writerow(["method", "ambiguity", "accuracy", "target", "synthetic"])
            for m, r in results.items():
                for pt in r.curve:
                    w.writerow([
                        m, format(pt.ambiguity, ".17g"), format(pt.accuracy, ".17g"),
                        "" if pt.target_used is None else format(pt.target_used, ".17g"),
                        "1" if pt.synthetic else "0",
                    ])
    return 0


def _cmd_correlate(args) -> int:
    valid = io.read_dataset_csv(args.valid)
    test = io.read_dataset_csv(args.test)
    seed = _resolve_seed(args.seed, required=True)
    pearson, spearman = bench.ambiguity_correlation(valid, test, trials=args.trials, seed=seed)
    print(json.dumps({"pearson": pearson, "spearman": spearman}, indent=2))
    return 0


def _cmd_bound(args) -> int:
    print(repr(risk_tail_bound(TailBoundQuery(args.r, args.eps, args.n))))
    return 0


def _cmd_report(args) -> int:
    valid = io.read_dataset_csv(args.valid)
    test = io.read_dataset_csv(args.test)
    seed = _resolve_seed(args.seed, required=True)
    targets = RiskTargets.class_specific(_targets_vector(_parse_floats(args.targets), valid.n_classes))
    methods = [m for m in args.methods.split(",") if m]
    doc = bench.risk_report(
        valid, test, methods, targets, seed=seed, lam=args.lam, restarts=args.restarts
    )
    text = json.dumps(doc, indent=2)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return 0


_COMMANDS = {
    "synth": _cmd_synth,
    "calibrate": _cmd_calibrate,
    "apply": _cmd_apply,
    "evaluate": _cmd_evaluate,
    "sweep": _cmd_sweep,
    "correlate": _cmd_correlate,
    "bound": _cmd_bound,
    "report": _cmd_report,
}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return _COMMANDS[args.command](args)
    except _CliError as e:
        print(f"error: usage: {e}", file=sys.stderr)
        return 1
    except RisksetError as e:
        print(f"error: validation: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"error: io: {e}", file=sys.stderr)
        return 2


def entry() -> None:
    sys.exit(main())
