"""Binary field files, dataset manifests, disjoint-by-scene splits, generation.

Field file layout (little-endian, normative):

    bytes 0..3    magic "WFLD"
    u32           format version (1)
    u32           channel count C
    u32           height H
    u32           width W
    u32           role tag (see Role)
    C*H*W*f32     payload, channel-major then row-major
    u64           checksum: first 8 bytes of SHA-256 of the payload

Truth files carry two channels: [0] wind factor, [1] validity (1.0 open,
0.0 solid at the probe plane, canopy obstructions included).

The manifest is a JSON document with stable ordering: scenes in generation
order, directions in compass order, slice heights ascending.  Paths are
stored relative to the manifest's directory.
"""

from __future__ import annotations

import hashlib
import json
import struct
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from enum import IntEnum
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import oracle, scene as sc

MAGIC = b"WFLD"
VERSION = 1
_HEADER = struct.Struct("<4s5I")


class Role(IntEnum):
    INPUT_STACK = 0
    TRUTH = 1
    PREDICTION = 2
    VARIANCE = 3
    MASK = 4
    COMFORT = 5
    STDDEV = 6


class FieldFormatError(ValueError):
    """Base class for malformed field files."""


class BadMagicError(FieldFormatError):
    pass


class BadVersionError(FieldFormatError):
    pass


class BadHeaderError(FieldFormatError):
    pass


class LengthError(FieldFormatError):
    pass


class ChecksumError(FieldFormatError):
    pass


@dataclass(frozen=True)
class FieldFile:
    channels: np.ndarray  # (C, H, W) float32
    role: Role

    def __post_init__(self) -> None:
        ch = np.ascontiguousarray(self.channels, dtype=np.float32)
        if ch.ndim != 3:
            raise ValueError(f"field payload must be (C, H, W), got {ch.shape}")
        object.__setattr__(self, "channels", ch)
        object.__setattr__(self, "role", Role(self.role))


def _checksum(payload: bytes) -> int:
    return int.from_bytes(hashlib.sha256(payload).digest()[:8], "little")


def field_to_bytes(ff: FieldFile) -> bytes:
    c, h, w = ff.channels.shape
    payload = ff.channels.astype("<f4").tobytes()
    header = _HEADER.pack(MAGIC, VERSION, c, h, w, int(ff.role))
    return header + payload + struct.pack("<Q", _checksum(payload))


def field_from_bytes(buf: bytes) -> FieldFile:
    if len(buf) < 4 or buf[:4] != MAGIC:
        raise BadMagicError("not a WFLD field file")
    if len(buf) < _HEADER.size:
        raise LengthError("field file truncated inside header")
    _, version, c, h, w, role = _HEADER.unpack_from(buf)
    if version != VERSION:
        raise BadVersionError(f"unsupported field format version {version}")
    try:
        role_tag = Role(role)
    except ValueError as exc:
        raise BadHeaderError(f"unknown role tag {role}") from exc
    if c == 0 or h == 0 or w == 0:
        raise BadHeaderError(f"degenerate field shape ({c}, {h}, {w})")
    expect = _HEADER.size + c * h * w * 4 + 8
    if len(buf) != expect:
        raise LengthError(f"field file length {len(buf)} != expected {expect}")
    payload = buf[_HEADER.size:-8]
    (stored,) = struct.unpack("<Q", buf[-8:])
    if stored != _checksum(payload):
        raise ChecksumError("field payload checksum mismatch")
    channels = np.frombuffer(payload, dtype="<f4").reshape(c, h, w).copy()
    return FieldFile(channels=channels, role=role_tag)


def write_field(path, ff: FieldFile) -> None:
    Path(path).write_bytes(field_to_bytes(ff))


def read_field(path) -> FieldFile:
    return field_from_bytes(Path(path).read_bytes())


def encoded_to_field(enc: sc.EncodedInput) -> FieldFile:
    return FieldFile(channels=enc.channels, role=Role.INPUT_STACK)


def truth_to_field(wf: oracle.WindField) -> FieldFile:
    ch = np.stack([wf.factors, wf.valid_mask.astype(np.float32)])
    return FieldFile(channels=ch, role=Role.TRUTH)


# ---------------------------------------------------------------------------
# splits


def split_by_scene(scene_ids: Sequence[str], ratio: float = 0.8, seed: int = 0) -> tuple[list[str], list[str]]:
    """Partition scene ids into disjoint train/test sets by seeded shuffle.

    Train gets floor(ratio * N) scenes, test the remainder; all samples of a
    scene travel with it.
    """
    ids = list(scene_ids)
    if len(set(ids)) != len(ids):
        raise ValueError("scene ids must be unique")
    if len(ids) < 2:
        raise ValueError("need at least 2 scenes to split")
    if not 0 < ratio < 1:
        raise ValueError("ratio must be in (0, 1)")
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(ids))
    n_train = int(len(ids) * ratio)
    train = [ids[k] for k in sorted(order[:n_train])]
    test = [ids[k] for k in sorted(order[n_train:])]
    return train, test


def complexity_class(scene: sc.UrbanScene) -> str:
    """Table-style complexity tag derived mechanically from geometry."""
    if any(b.voids for b in scene.buildings):
        return "local-features"
    if not scene.terrain.is_constant and float(np.ptp(scene.terrain.values)) > 0:
        return "topography"
    if scene.trees:
        return "trees"
    return "simple-extrusion"


COMPLEXITY_CLASSES = ("simple-extrusion", "local-features", "topography", "trees")


# ---------------------------------------------------------------------------
# manifest


@dataclass(frozen=True)
class ManifestEntry:
    scene_id: str
    direction: str
    slice_height: float
    input_path: str
    truth_path: str
    complexity: str
    split: str
    converged: bool
    iterations: int
    residual: float


@dataclass(frozen=True)
class DatasetManifest:
    grid: int
    split_seed: int
    split_ratio: float
    entries: tuple[ManifestEntry, ...]
    failures: tuple[dict, ...] = ()

    def scene_ids(self) -> list[str]:
        seen: dict[str, None] = {}
        for e in self.entries:
            seen.setdefault(e.scene_id)
        return list(seen)

    def subset(self, split: str) -> list[ManifestEntry]:
        return [e for e in self.entries if e.split == split]


def save_manifest(manifest: DatasetManifest, path) -> None:
    doc = {
        "format": "urbanwind-manifest/1",
        "grid": manifest.grid,
        "split_seed": manifest.split_seed,
        "split_ratio": manifest.split_ratio,
        "entries": [asdict(e) for e in manifest.entries],
        "failures": list(manifest.failures),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_manifest(path, validate: bool = True) -> DatasetManifest:
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format") != "urbanwind-manifest/1":
        raise ValueError(f"unsupported manifest format {doc.get('format')!r}")
    entries = tuple(ManifestEntry(**e) for e in doc["entries"])
    manifest = DatasetManifest(
        grid=int(doc["grid"]),
        split_seed=int(doc["split_seed"]),
        split_ratio=float(doc["split_ratio"]),
        entries=entries,
        failures=tuple(doc.get("failures", ())),
    )
    if validate:
        _validate_manifest(manifest, path.parent)
    return manifest


def _validate_manifest(manifest: DatasetManifest, root: Path) -> None:
    splits_by_scene: dict[str, set[str]] = {}
    for e in manifest.entries:
        splits_by_scene.setdefault(e.scene_id, set()).add(e.split)
        for rel, want_role, want_c in (
            (e.input_path, Role.INPUT_STACK, 4),
            (e.truth_path, Role.TRUTH, 2),
        ):
            p = root / rel
            if not p.exists():
                raise FileNotFoundError(f"manifest references missing file {p}")
            ff = read_field(p)
            if ff.role != want_role:
                raise ValueError(f"{p}: role {ff.role.name}, expected {want_role.name}")
            if ff.channels.shape != (want_c, manifest.grid, manifest.grid):
                raise ValueError(f"{p}: shape {ff.channels.shape} does not match manifest grid")
    for sid, splits in splits_by_scene.items():
        if len(splits) > 1:
            raise ValueError(f"scene {sid} appears in multiple splits: {sorted(splits)}")


# ---------------------------------------------------------------------------
# generation


def _entry_arrays(scene: sc.UrbanScene, direction: sc.CardinalDirection, slice_height: float,
                  grid: int, cfg: oracle.SolverConfig):
    aligned = sc.align_to_wind(scene, direction)
    enc = sc.encode(aligned, slice_height, grid)
    solid = sc.obstacle_mask(enc) | sc.canopy_obstruction_mask(aligned, slice_height, grid)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", oracle.NonConvergence)
        wf = oracle.solve(
            solid, cfg,
            direction=direction.value, slice_height=slice_height, scene_id=scene.scene_id,
        )
    return enc, wf


def _gen_worker(args):
    scene, direction, slice_height, grid, cfg = args
    try:
        enc, wf = _entry_arrays(scene, direction, slice_height, grid, cfg)
    except oracle.AllSolidError as exc:
        return (scene.scene_id, direction.value, slice_height, None, None, str(exc))
    return (scene.scene_id, direction.value, slice_height, enc, wf, None)


def generate_dataset(
    scenes: Sequence[sc.UrbanScene],
    out_dir,
    directions: Iterable[sc.CardinalDirection] = sc.DIRECTIONS,
    slice_heights: Sequence[float] = (1.5,),
    solver_cfg: oracle.SolverConfig = oracle.SolverConfig(),
    grid: int = 64,
    split_ratio: float = 0.8,
    split_seed: int = 0,
    workers: int = 1,
) -> DatasetManifest:
    """Align/encode/solve every (scene, direction, slice) and write the pairs.

    Solver failures (no through path) are recorded in the manifest's failure
    list without aborting the batch; non-convergence is flagged per entry.
    Returns the manifest, also written to ``out_dir/manifest.json``.
    """
    if not scenes:
        raise ValueError("scene list is empty")
    ids = [s.scene_id for s in scenes]
    if len(set(ids)) != len(ids):
        raise ValueError("scene ids must be unique")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    directions = [sc.CardinalDirection(d) for d in directions]
    slice_heights = sorted(slice_heights)

    if len(scenes) >= 2:
        train_ids, _ = split_by_scene(ids, split_ratio, split_seed)
        train_set = set(train_ids)
    else:
        train_set = set(ids)

    tasks = [
        (scene, d, h, grid, solver_cfg)
        for scene in scenes
        for d in directions
        for h in slice_heights
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_gen_worker, tasks, chunksize=4))
    else:
        results = [_gen_worker(t) for t in tasks]

    classes = {s.scene_id: complexity_class(s) for s in scenes}
    entries: list[ManifestEntry] = []
    failures: list[dict] = []
    for sid, dirname, h, enc, wf, err in results:
        if err is not None:
            failures.append({"scene_id": sid, "direction": dirname, "slice_height": h, "error": err})
            continue
        stem = f"{sid}_{dirname}_{h:g}"
        input_rel = f"{stem}_input.wfld"
        truth_rel = f"{stem}_truth.wfld"
        write_field(out / input_rel, encoded_to_field(enc))
        write_field(out / truth_rel, truth_to_field(wf))
        entries.append(
            ManifestEntry(
                scene_id=sid,
                direction=dirname,
                slice_height=h,
                input_path=input_rel,
                truth_path=truth_rel,
                complexity=classes[sid],
                split="train" if sid in train_set else "test",
                converged=bool(wf.stats.converged),
                iterations=int(wf.stats.iterations),
                residual=float(wf.stats.final_residual),
            )
        )

    manifest = DatasetManifest(
        grid=grid,
        split_seed=split_seed,
        split_ratio=split_ratio,
        entries=tuple(entries),
        failures=tuple(failures),
    )
    save_manifest(manifest, out / "manifest.json")
    return manifest


def load_pairs(manifest: DatasetManifest, root, split: str | None = None):
    """Load (inputs, factors, valid) arrays for a manifest split.

    Returns float32 arrays shaped (N, 4, H, W), (N, H, W), (N, H, W) plus the
    entry list, in manifest order.
    """
    root = Path(root)
    entries = manifest.entries if split is None else tuple(manifest.subset(split))
    xs, ys, vs = [], [], []
    for e in entries:
        xs.append(read_field(root / e.input_path).channels)
        t = read_field(root / e.truth_path).channels
        ys.append(t[0])
        vs.append(t[1] > 0.5)
    g = manifest.grid
    x = np.stack(xs) if xs else np.zeros((0, 4, g, g), np.float32)
    y = np.stack(ys) if ys else np.zeros((0, g, g), np.float32)
    v = np.stack(vs) if vs else np.zeros((0, g, g), bool)
    return x, y, v, list(entries)
