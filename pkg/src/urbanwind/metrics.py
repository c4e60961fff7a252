"""Accuracy statistics, per-complexity-class reports, comfort interpretation.

Error statistics default to open cells only (wind is undefined inside
solids); the all-cells policy exists for apples-to-apples comparisons with
the unmasked training objective.  The pooled 90th percentile uses the
nearest-rank order statistic over every included cell; the per-sample
reading (90th percentile of per-sample MAEs) is reported alongside it.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import dataio
from .checkpoint import Surrogate
from .oracle import WindField

MASK_POLICIES = ("open-cells-only", "all-cells")


@dataclass(frozen=True)
class ComfortSpec:
    """Ordered wind-speed bands (name, closed upper bound in m/s).

    The defaults are illustrative configuration in the Lawson/Davenport
    family, not published constants; deployments should load project bands
    from a config file.
    """

    bands: tuple[tuple[str, float], ...] = (
        ("sitting-long", 2.5),
        ("sitting-short", 4.0),
        ("strolling", 6.0),
        ("walking", 8.0),
        ("uncomfortable", 15.0),
    )

    def __post_init__(self) -> None:
        bounds = [b for _, b in self.bands]
        if not bounds:
            raise ValueError("comfort spec needs at least one band")
        if any(b2 <= b1 for b1, b2 in zip(bounds, bounds[1:])):
            raise ValueError("comfort band bounds must be strictly increasing")

    @property
    def names(self) -> list[str]:
        return [n for n, _ in self.bands] + ["exceeds-bands"]


SOLID_CLASS = -1


def load_comfort_spec(path) -> ComfortSpec:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    return ComfortSpec(bands=tuple((str(n), float(b)) for n, b in doc["bands"]))


def error_stats(pred: WindField, truth: WindField, mask_policy: str = "open-cells-only") -> np.ndarray:
    """Per-cell absolute errors between two fields of identical provenance."""
    if pred.factors.shape != truth.factors.shape:
        raise ValueError(f"shape mismatch: {pred.factors.shape} vs {truth.factors.shape}")
    for attr in ("direction", "slice_height", "scene_id"):
        a, b = getattr(pred, attr), getattr(truth, attr)
        if a and b and a != b:
            raise ValueError(f"provenance mismatch on {attr}: {a!r} vs {b!r}")
    return abs_errors(pred.factors, truth.factors, truth.valid_mask, mask_policy)


def abs_errors(pred: np.ndarray, truth: np.ndarray, valid: np.ndarray,
               mask_policy: str = "open-cells-only") -> np.ndarray:
    if mask_policy not in MASK_POLICIES:
        raise ValueError(f"mask_policy must be one of {MASK_POLICIES}")
    err = np.abs(np.asarray(pred, dtype=np.float64) - np.asarray(truth, dtype=np.float64))
    if mask_policy == "open-cells-only":
        return err[np.asarray(valid, dtype=bool)]
    return err.ravel()


def percentile_90(errors) -> float:
    """Nearest-rank 90th percentile: sorted ascending, element ceil(0.9 N)."""
    arr = np.asarray(errors, dtype=np.float64).ravel()
    if arr.size == 0:
        raise ValueError("percentile of empty sample")
    rank = math.ceil(0.9 * arr.size)  # 1-based
    return float(np.sort(arr)[rank - 1])


def factor_error_threshold(inlet_speed_10m: float, tolerance: float = 1.0) -> float:
    """Wind-factor error that corresponds to a +-tolerance m/s speed error."""
    if not inlet_speed_10m > 0:
        raise ValueError("inlet speed must be > 0")
    return tolerance / inlet_speed_10m


def comfort_map(field: WindField | np.ndarray, inlet_speed: float,
                spec: ComfortSpec = ComfortSpec(),
                valid: np.ndarray | None = None) -> np.ndarray:
    """Per-cell comfort band index; closed-above bands, first match wins.

    Solid cells get the sentinel -1; speeds above every bound get index
    len(bands) ("exceeds-bands").
    """
    if isinstance(field, WindField):
        factors = field.factors
        valid = field.valid_mask if valid is None else valid
    else:
        factors = np.asarray(field)
    speed = factors.astype(np.float64) * inlet_speed
    out = np.full(speed.shape, len(spec.bands), dtype=np.int16)
    for k in range(len(spec.bands) - 1, -1, -1):
        out[speed <= spec.bands[k][1]] = k
    if valid is not None:
        out[~np.asarray(valid, dtype=bool)] = SOLID_CLASS
    return out


# ---------------------------------------------------------------------------
# dataset-level report


@dataclass(frozen=True)
class EvalReport:
    mae_mean: float
    mae_std: float
    p90: float
    p90_per_sample: float
    per_class: dict[str, dict[str, float]]
    n_samples: int
    n_cells: int
    mask_policy: str
    extras: dict = field(default_factory=dict)

    def to_json(self) -> str:
        doc = {
            "format": "urbanwind-eval/1",
            "mae_mean": self.mae_mean,
            "mae_std": self.mae_std,
            "p90": self.p90,
            "p90_per_sample": self.p90_per_sample,
            "per_class": self.per_class,
            "n_samples": self.n_samples,
            "n_cells": self.n_cells,
            "mask_policy": self.mask_policy,
            "extras": self.extras,
        }
        return json.dumps(doc, indent=1, sort_keys=True)


def _triple(errors: np.ndarray, sample_maes: list[float], n_samples: int) -> dict[str, float]:
    return {
        "mae_mean": float(errors.mean()) if errors.size else 0.0,
        "mae_std": float(errors.std()) if errors.size else 0.0,
        "p90": percentile_90(errors) if errors.size else 0.0,
        "p90_per_sample": percentile_90(sample_maes) if sample_maes else 0.0,
        "n_samples": n_samples,
        "n_cells": int(errors.size),
    }


def build_report(per_sample_errors: list[np.ndarray], classes: list[str],
                 mask_policy: str, extras: dict | None = None) -> EvalReport:
    if len(per_sample_errors) != len(classes):
        raise ValueError("one class tag per error sample required")
    pooled = np.concatenate(per_sample_errors) if per_sample_errors else np.zeros(0)
    sample_maes = [float(e.mean()) for e in per_sample_errors if e.size]
    per_class: dict[str, dict[str, float]] = {}
    for cls in dataio.COMPLEXITY_CLASSES:
        errs = [e for e, c in zip(per_sample_errors, classes) if c == cls]
        maes = [float(e.mean()) for e in errs if e.size]
        pooled_cls = np.concatenate(errs) if errs else np.zeros(0)
        per_class[cls] = _triple(pooled_cls, maes, len(errs))
    top = _triple(pooled, sample_maes, len(per_sample_errors))
    return EvalReport(
        mae_mean=top["mae_mean"],
        mae_std=top["mae_std"],
        p90=top["p90"],
        p90_per_sample=top["p90_per_sample"],
        per_class=per_class,
        n_samples=len(per_sample_errors),
        n_cells=top["n_cells"],
        mask_policy=mask_policy,
        extras=extras or {},
    )


def constant_baseline_mae(truths: np.ndarray, valids: np.ndarray) -> tuple[float, float]:
    """Best constant predictor (the open-cell median) and its masked MAE."""
    vals = truths[valids]
    if vals.size == 0:
        raise ValueError("no open cells in the evaluation set")
    c = float(np.median(vals))
    return c, float(np.mean(np.abs(vals - c)))


def evaluate(surrogate: Surrogate, manifest: dataio.DatasetManifest, root,
             split: str = "test", mask_policy: str = "open-cells-only") -> EvalReport:
    """Run the surrogate over a manifest split and report error statistics."""
    x, y, v, entries = dataio.load_pairs(manifest, root, split=split)
    if not entries:
        raise ValueError(f"split {split!r} is empty")
    errors: list[np.ndarray] = []
    classes: list[str] = []
    for k, e in enumerate(entries):
        pred = surrogate.predict(x[k])
        errors.append(abs_errors(pred, y[k], v[k], mask_policy))
        classes.append(e.complexity)
    baseline_c, baseline_mae = constant_baseline_mae(y, v)
    return build_report(
        errors, classes, mask_policy,
        extras={
            "split": split,
            "constant_baseline": baseline_c,
            "constant_baseline_mae": baseline_mae,
        },
    )
