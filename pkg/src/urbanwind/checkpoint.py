"""Named-tensor checkpoint container and the loadable surrogate model.

Checkpoint layout (little-endian, normative):

    bytes 0..3   magic "WCKP"
    u32          format version (1)
    u32          metadata length M
    M bytes      metadata: UTF-8 JSON, sorted keys
    u32          tensor count T
    T records:   u16 name length, name UTF-8, u8 dtype code (0=f32, 1=f64,
                 2=i64), u8 ndim, ndim x u32 dims, raw data
    u64          checksum: first 8 bytes of SHA-256 over everything between
                 the version field and the checksum

Generator tensors are prefixed "g." (parameters) / "gb." (batch-norm
buffers); discriminator tensors use "d." / "db.".  Metadata records the
configs, the input/target normalization constants, epoch and seed, so a
checkpoint is self-describing.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import asdict, dataclass

import numpy as np

from . import models

MAGIC = b"WCKP"
VERSION = 1
_DTYPES = {0: "<f4", 1: "<f8", 2: "<i8"}
_DTYPE_CODES = {np.dtype(np.float32): 0, np.dtype(np.float64): 1, np.dtype(np.int64): 2}


class CheckpointError(ValueError):
    """Base class for malformed checkpoint files."""


class BadMagicError(CheckpointError):
    pass


class BadVersionError(CheckpointError):
    pass


class LengthError(CheckpointError):
    pass


class ChecksumError(CheckpointError):
    pass


@dataclass(frozen=True)
class Checkpoint:
    meta: dict
    tensors: dict[str, np.ndarray]

    @property
    def checkpoint_id(self) -> str:
        return self.meta.get("checkpoint_id", "")


def _pack_tensor(name: str, arr: np.ndarray) -> bytes:
    code = _DTYPE_CODES[arr.dtype]
    nameb = name.encode("utf-8")
    head = struct.pack("<HB", len(nameb), code) + nameb
    head += struct.pack("<B", arr.ndim) + struct.pack(f"<{arr.ndim}I", *arr.shape)
    return head + arr.astype(_DTYPES[code]).tobytes()


def checkpoint_to_bytes(meta: dict, tensors: dict[str, np.ndarray]) -> bytes:
    metab = json.dumps(meta, sort_keys=True).encode("utf-8")
    body = struct.pack("<I", VERSION) + struct.pack("<I", len(metab)) + metab
    body += struct.pack("<I", len(tensors))
    for name in sorted(tensors):
        body += _pack_tensor(name, np.ascontiguousarray(tensors[name]))
    digest = hashlib.sha256(body[4:]).digest()[:8]
    return MAGIC + body + digest


def checkpoint_from_bytes(buf: bytes) -> Checkpoint:
    if len(buf) < 4 or buf[:4] != MAGIC:
        raise BadMagicError("not a WCKP checkpoint")
    if len(buf) < 20:
        raise LengthError("checkpoint truncated inside header")
    (version,) = struct.unpack_from("<I", buf, 4)
    if version != VERSION:
        raise BadVersionError(f"unsupported checkpoint version {version}")
    stored = buf[-8:]
    off = 8
    try:
        (meta_len,) = struct.unpack_from("<I", buf, off)
        off += 4
        meta = json.loads(buf[off:off + meta_len].decode("utf-8"))
        off += meta_len
        (count,) = struct.unpack_from("<I", buf, off)
        off += 4
        tensors: dict[str, np.ndarray] = {}
        for _ in range(count):
            name_len, code = struct.unpack_from("<HB", buf, off)
            off += 3
            name = buf[off:off + name_len].decode("utf-8")
            off += name_len
            (ndim,) = struct.unpack_from("<B", buf, off)
            off += 1
            dims = struct.unpack_from(f"<{ndim}I", buf, off)
            off += 4 * ndim
            dt = np.dtype(_DTYPES[code])
            nbytes = int(np.prod(dims, dtype=np.int64)) * dt.itemsize
            if off + nbytes > len(buf) - 8:
                raise LengthError("checkpoint truncated inside tensor data")
            tensors[name] = np.frombuffer(buf[off:off + nbytes], dtype=dt).reshape(dims).copy()
            off += nbytes
    except (struct.error, UnicodeDecodeError, json.JSONDecodeError, KeyError) as exc:
        raise LengthError(f"checkpoint structure damaged: {exc}") from exc
    if off != len(buf) - 8:
        raise LengthError(f"checkpoint has {len(buf) - 8 - off} unexpected trailing bytes")
    if hashlib.sha256(buf[8:-8]).digest()[:8] != stored:
        raise ChecksumError("checkpoint checksum mismatch")
    return Checkpoint(meta=meta, tensors=tensors)


def save_checkpoint(path, meta: dict, tensors: dict[str, np.ndarray]) -> None:
    blob = checkpoint_to_bytes(meta, tensors)
    with open(path, "wb") as fh:
        fh.write(blob)


def load_checkpoint(path) -> Checkpoint:
    with open(path, "rb") as fh:
        return checkpoint_from_bytes(fh.read())


def build_meta(gen_cfg: models.GeneratorConfig, disc_cfg: models.DiscriminatorConfig,
               train_cfg, epoch: int, seed: int, tensors: dict[str, np.ndarray]) -> dict:
    tensor_digest = hashlib.sha256()
    for name in sorted(tensors):
        tensor_digest.update(name.encode())
        tensor_digest.update(np.ascontiguousarray(tensors[name]).tobytes())
    return {
        "format_version": VERSION,
        "kind": "urbanwind-cgan",
        "checkpoint_id": tensor_digest.hexdigest()[:16],
        "epoch": epoch,
        "seed": seed,
        "generator": asdict(gen_cfg),
        "discriminator": asdict(disc_cfg),
        "train": asdict(train_cfg) if train_cfg is not None else None,
        "normalization": {"height_ref": models.HEIGHT_REF, "factor_max": models.FACTOR_MAX},
    }


class Surrogate:
    """A generator loaded from a checkpoint, ready for prediction."""

    def __init__(self, generator: models.UNetGenerator, meta: dict):
        self.generator = generator
        self.meta = meta

    @classmethod
    def from_checkpoint(cls, ckpt: Checkpoint | str) -> "Surrogate":
        if not isinstance(ckpt, Checkpoint):
            ckpt = load_checkpoint(ckpt)
        try:
            gen_cfg = models.GeneratorConfig(**ckpt.meta["generator"])
        except (KeyError, TypeError) as exc:
            raise CheckpointError(f"checkpoint metadata lacks a generator config: {exc}") from exc
        gen = models.UNetGenerator(gen_cfg, np.random.default_rng(0))
        for name in gen.params:
            key = f"g.{name}"
            if key not in ckpt.tensors:
                raise CheckpointError(f"checkpoint is missing tensor {key}")
            if ckpt.tensors[key].shape != gen.params[name].shape:
                raise CheckpointError(f"tensor {key} has shape {ckpt.tensors[key].shape}, "
                                      f"expected {gen.params[name].shape}")
            gen.params[name] = ckpt.tensors[key].copy()
        for name in gen.buffers:
            key = f"gb.{name}"
            if key not in ckpt.tensors:
                raise CheckpointError(f"checkpoint is missing tensor {key}")
            gen.buffers[name] = ckpt.tensors[key].copy()
        return cls(gen, ckpt.meta)

    @property
    def input_size(self) -> int:
        return self.generator.cfg.input_size

    def predict(self, channels: np.ndarray, dropout_rng: np.random.Generator | None = None,
                dropout_p: float | None = None) -> np.ndarray:
        """Wind factors (H, W) from a raw 4-channel geometry stack."""
        x = models.normalize_input(channels)[None]
        y, _ = self.generator.forward(x, training=False, dropout_rng=dropout_rng,
                                      dropout_p=dropout_p)
        return models.decode_factors(y[0, 0])
