"""File formats used by the command-line surface.

* dataset CSV: header ``s0,...,s{K-1},y``; float cells carry 17 significant
  digits so binary64 values round-trip exactly; labels are 0-indexed.
* threshold JSON: thresholds (numbers, or "-inf"/"+inf" for the
  sentinels), the fixed membership marker "strict_greater", the loss
  recipe, seed and diagnostics.  Loading refuses any other membership
  marker.
* set CSV: one row per input row with the ``|``-joined member classes.
"""

from __future__ import annotations

import csv
import json
import math

import numpy as np

from .core import LabeledDataset, ScoreMatrix
from .errors import ValidationError

MEMBERSHIP_MARKER = "strict_greater"


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_dataset_csv(path, data: LabeledDataset) -> None:
    k = data.n_classes
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow([f"s{c}" for c in range(k)] + ["y"])
        for row, label in zip(data.scores.values, data.labels):
            w.writerow([_fmt(v) for v in row] + [str(int(label))])


def read_dataset_csv(path) -> LabeledDataset:
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValidationError(f"{path}: empty dataset file") from None
        k = len(header) - 1
        if k < 2 or header != [f"s{c}" for c in range(k)] + ["y"]:
            raise ValidationError(f"{path}: malformed dataset header {header!r}")
        scores, labels = [], []
        for ln, row in enumerate(reader, start=2):
            if len(row) != k + 1:
                raise ValidationError(f"{path}:{ln}: expected {k + 1} cells, got {len(row)}")
            try:
                scores.append([float(v) for v in row[:k]])
                labels.append(int(row[k]))
            except ValueError as e:
                raise ValidationError(f"{path}:{ln}: {e}") from None
        if not scores:
            raise ValidationError(f"{path}: dataset has no rows")
    return LabeledDataset(ScoreMatrix(np.asarray(scores)), np.asarray(labels))


def _encode_threshold(v: float):
    if math.isinf(v):
        return "-inf" if v < 0 else "+inf"
    return float(v)


def _decode_threshold(v) -> float:
    if isinstance(v, str):
        if v == "-inf":
            return float("-inf")
        if v == "+inf":
            return float("inf")
        raise ValidationError(f"bad threshold entry {v!r}")
    return float(v)


def threshold_payload(
    k: int,
    thresholds,
    method: str,
    loss_kind,
    targets,
    lam,
    seed,
    diagnostics: dict,
) -> dict:
    return {
        "k": int(k),
        "thresholds": [_encode_threshold(float(v)) for v in thresholds],
        "membership": MEMBERSHIP_MARKER,
        "method": method,
        "loss_kind": loss_kind,
        "targets": targets,
        "lambda": lam,
        "seed": seed,
        "diagnostics": diagnostics,
    }


def write_threshold_json(path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def read_threshold_json(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as e:
            raise ValidationError(f"{path}: malformed JSON: {e}") from None
    if payload.get("membership") != MEMBERSHIP_MARKER:
        raise ValidationError(
            f"{path}: membership marker {payload.get('membership')!r} is not "
            f"{MEMBERSHIP_MARKER!r}"
        )
    k = payload.get("k")
    raw = payload.get("thresholds")
    if not isinstance(k, int) or not isinstance(raw, list) or len(raw) != k:
        raise ValidationError(f"{path}: thresholds do not match k")
    payload["thresholds_array"] = np.asarray([_decode_threshold(v) for v in raw])
    return payload


def write_sets_csv(path, member: np.ndarray) -> None:
    member = np.asarray(member, dtype=bool)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["row", "set", "size"])
        for i, row in enumerate(member):
            ids = np.flatnonzero(row)
            w.writerow([str(i), "|".join(str(int(c)) for c in ids), str(int(ids.size))])


def read_sets_csv(path, k: int) -> np.ndarray:
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["row", "set", "size"]:
            raise ValidationError(f"{path}: malformed set-file header {header!r}")
        rows = []
        for ln, row in enumerate(reader, start=2):
            if len(row) != 3:
                raise ValidationError(f"{path}:{ln}: expected 3 cells")
            mask = np.zeros(k, dtype=bool)
            if row[1]:
                ids = [int(v) for v in row[1].split("|")]
                if any(not 0 <= c < k for c in ids):
                    raise ValidationError(f"{path}:{ln}: class id out of range")
                mask[ids] = True
            if int(row[2]) != int(mask.sum()):
                raise ValidationError(f"{path}:{ln}: size does not match the set")
            rows.append(mask)
    return np.asarray(rows, dtype=bool)
