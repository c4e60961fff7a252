"""Shared inference core behind both the CLI and the HTTP service.

One code path turns (scene document | pre-encoded stack) plus parameters
into the response grid set: MC-dropout mean, standard deviation, variance,
comfort classes, and the obstacle mask.  Seeds are always echoed back so any
result is replayable bit-for-bit.
"""

from __future__ import annotations

import base64
import secrets
import time
from dataclasses import dataclass, field

import numpy as np

from . import dataio, mcdropout, metrics, scene as sc
from .checkpoint import Surrogate


class InferenceError(ValueError):
    """Semantic problem with an inference request (maps to HTTP 422)."""


@dataclass(frozen=True)
class InferenceRequest:
    """Either a scene document (dict) or a pre-encoded 4-channel stack."""

    scene: dict | None = None
    encoded: np.ndarray | None = None
    direction: str = "W"
    slice_height: float = 1.5
    inlet_speed: float = 5.0
    mc_samples: int = 30
    dropout_p: float = 0.5
    seed: int | None = None


@dataclass(frozen=True)
class InferenceResult:
    mean: np.ndarray
    stddev: np.ndarray
    variance: np.ndarray
    comfort: np.ndarray
    mask: np.ndarray
    seed: int
    timing_ms: float
    model_info: dict = field(default_factory=dict)


def validate_request(req: InferenceRequest, input_size: int) -> np.ndarray:
    """Check parameter ranges and return the encoded 4-channel stack."""
    if (req.scene is None) == (req.encoded is None):
        raise InferenceError("exactly one of {scene, encoded input} must be present")
    if req.mc_samples < 1:
        raise InferenceError("mc_samples must be >= 1")
    if not 0.0 <= req.dropout_p < 1.0:
        raise InferenceError("dropout_p must be in [0, 1)")
    if not req.slice_height > 0:
        raise InferenceError("slice_height must be > 0")
    if not req.inlet_speed > 0:
        raise InferenceError("inlet_speed must be > 0")
    try:
        direction = sc.CardinalDirection(req.direction)
    except ValueError as exc:
        raise InferenceError(f"unknown wind direction {req.direction!r}") from exc

    if req.encoded is not None:
        enc = np.asarray(req.encoded, dtype=np.float32)
        if enc.shape != (4, input_size, input_size):
            raise InferenceError(
                f"encoded input must be (4, {input_size}, {input_size}), got {enc.shape}")
        if not np.all(np.isfinite(enc)):
            raise InferenceError("encoded input contains non-finite values")
        return enc
    try:
        scene = sc.scene_from_dict(req.scene)
    except sc.SceneError as exc:
        raise InferenceError(f"invalid scene document: {exc}") from exc
    try:
        enc = sc.encode_for(scene, direction, req.slice_height, input_size)
    except sc.SceneError as exc:
        raise InferenceError(str(exc)) from exc
    return enc.channels


def run_inference(surrogate: Surrogate, req: InferenceRequest,
                  comfort: metrics.ComfortSpec = metrics.ComfortSpec()) -> InferenceResult:
    t0 = time.perf_counter()
    channels = validate_request(req, surrogate.input_size)
    seed = req.seed if req.seed is not None else secrets.randbelow(2**31)
    unc = mcdropout.mc_predict(surrogate, channels, n=req.mc_samples, p=req.dropout_p,
                               seed=seed)
    mask = sc.obstacle_mask_from_channels(channels)
    comfort_grid = metrics.comfort_map(unc.mean, req.inlet_speed, comfort, valid=~mask)
    mean = np.where(mask, 0.0, unc.mean).astype(np.float32)
    stddev = np.where(mask, 0.0, unc.stddev).astype(np.float32)
    variance = np.where(mask, 0.0, unc.variance).astype(np.float32)
    timing_ms = (time.perf_counter() - t0) * 1000.0
    return InferenceResult(
        mean=mean,
        stddev=stddev,
        variance=variance,
        comfort=comfort_grid,
        mask=mask,
        seed=seed,
        timing_ms=timing_ms,
        model_info=model_info(surrogate),
    )


def model_info(surrogate: Surrogate) -> dict:
    meta = surrogate.meta
    return {
        "checkpoint_id": meta.get("checkpoint_id", ""),
        "epoch": meta.get("epoch"),
        "seed": meta.get("seed"),
        "input_size": surrogate.input_size,
        "generator": meta.get("generator"),
        "discriminator": meta.get("discriminator"),
        "normalization": meta.get("normalization"),
        "format_version": meta.get("format_version"),
    }


def result_fields(res: InferenceResult) -> dict[str, dataio.FieldFile]:
    """The response grids as role-tagged single-channel field files."""
    return {
        "mean": dataio.FieldFile(res.mean[None], dataio.Role.PREDICTION),
        "stddev": dataio.FieldFile(res.stddev[None], dataio.Role.STDDEV),
        "variance": dataio.FieldFile(res.variance[None], dataio.Role.VARIANCE),
        "comfort": dataio.FieldFile(res.comfort.astype(np.float32)[None], dataio.Role.COMFORT),
        "mask": dataio.FieldFile(res.mask.astype(np.float32)[None], dataio.Role.MASK),
    }


def fields_b64(res: InferenceResult) -> dict[str, str]:
    return {
        name: base64.b64encode(dataio.field_to_bytes(ff)).decode("ascii")
        for name, ff in result_fields(res).items()
    }
