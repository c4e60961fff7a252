"""Vector urban scenes, wind alignment, and four-channel height-map encoding.

A scene lives in a square of side ``bounds_side`` meters.  Array axes follow
raster convention: row index ``i`` runs north -> south (+y), column index
``j`` runs west -> east (+x), and cell (i, j) is centered at
``((j + 0.5) * h, (i + 0.5) * h)`` with ``h = bounds_side / grid``.

Wind directions are meteorological (the side the wind blows FROM).  The
canonical solver axis is wind from the west: inflow on the -x edge, flow
toward +x.  ``align_to_wind`` rigidly rotates the vector geometry about the
bounds center so any of the eight directions maps onto that axis.

Encoding produces four channels per probe plane ``z = z0 + slice_height``
(z0 = lowest ground elevation):

* channel 0, global: positive = distance from the probe up to the top of the
  highest solid occupying the probe point; negative = distance down to the
  highest solid surface below an open-air probe; zero only when grazing.
* channel 1, subtractive: height of a void's ceiling above the probe where
  the probe sits strictly inside a carved void, else 0.
* channel 2, topography: ground elevation above z0.
* channel 3, additive: top of the highest canopy element in the column minus
  the probe elevation (positive below/inside a canopy, negative above one),
  0 where the column holds no canopy.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

SCENE_FORMAT = "urbanwind-scene/1"

Vec2 = tuple[float, float]
PolygonT = tuple[Vec2, ...]


class SceneError(ValueError):
    """Raised for schema-invalid scenes or encode preconditions."""


class CardinalDirection(str, Enum):
    N = "N"
    NE = "NE"
    E = "E"
    SE = "SE"
    S = "S"
    SW = "SW"
    W = "W"
    NW = "NW"


#: Order used everywhere a "all eight directions" sweep happens.
DIRECTIONS = (
    CardinalDirection.N,
    CardinalDirection.NE,
    CardinalDirection.E,
    CardinalDirection.SE,
    CardinalDirection.S,
    CardinalDirection.SW,
    CardinalDirection.W,
    CardinalDirection.NW,
)

_SQ2 = math.sqrt(0.5)
# Rotation (cos, sin) that maps wind-from-<dir> onto the canonical west wind.
# Exact 0/+-1 entries for the cardinal cases keep 90-degree rotations exact.
_ALIGN_ROT: dict[CardinalDirection, tuple[float, float]] = {
    CardinalDirection.W: (1.0, 0.0),
    CardinalDirection.SW: (_SQ2, _SQ2),
    CardinalDirection.S: (0.0, 1.0),
    CardinalDirection.SE: (-_SQ2, _SQ2),
    CardinalDirection.E: (-1.0, 0.0),
    CardinalDirection.NE: (-_SQ2, -_SQ2),
    CardinalDirection.N: (0.0, -1.0),
    CardinalDirection.NW: (_SQ2, -_SQ2),
}

_ALIGN_DEG = {
    CardinalDirection.W: 0.0,
    CardinalDirection.SW: 45.0,
    CardinalDirection.S: 90.0,
    CardinalDirection.SE: 135.0,
    CardinalDirection.E: 180.0,
    CardinalDirection.NE: 225.0,
    CardinalDirection.N: 270.0,
    CardinalDirection.NW: 315.0,
}


@dataclass(frozen=True)
class Disc:
    """Circular footprint (canopy elements only)."""

    cx: float
    cy: float
    radius: float


@dataclass(frozen=True)
class Void:
    """Subtractive carve-out of a building: footprint x [z_low, z_high] above base."""

    footprint: PolygonT
    z_low: float
    z_high: float

    def __post_init__(self) -> None:
        if not self.z_low < self.z_high:
            raise SceneError(f"void requires z_low < z_high, got [{self.z_low}, {self.z_high}]")
        if self.z_low < 0:
            raise SceneError("void z_low must be >= 0")
        _validate_polygon(self.footprint, "void footprint")


@dataclass(frozen=True)
class Building:
    """Prismatic building: simple-polygon footprint extruded from base by height."""

    footprint: PolygonT
    base: float = 0.0
    height: float = 10.0
    voids: tuple[Void, ...] = ()

    def __post_init__(self) -> None:
        if not self.height > 0:
            raise SceneError(f"building height must be > 0, got {self.height}")
        _validate_polygon(self.footprint, "building footprint")
        for v in self.voids:
            if v.z_high > self.height:
                raise SceneError(
                    f"void extends above building: z_high {v.z_high} > height {self.height}"
                )


@dataclass(frozen=True)
class CanopyElement:
    """Additive porous/thin element (tree canopy, shading device).

    ``z_low``/``z_high`` are measured above the local terrain under the
    element, i.e. the element floats with the ground.
    """

    footprint: PolygonT | Disc
    z_low: float
    z_high: float

    def __post_init__(self) -> None:
        if not self.z_low < self.z_high:
            raise SceneError(f"canopy requires z_low < z_high, got [{self.z_low}, {self.z_high}]")
        if isinstance(self.footprint, Disc):
            if not self.footprint.radius > 0:
                raise SceneError("canopy disc radius must be > 0")
        else:
            _validate_polygon(self.footprint, "canopy footprint")


@dataclass(frozen=True)
class Terrain:
    """Ground elevation over the bounds: a constant or a row-major grid.

    ``rotation_deg`` records rigid rotation applied by ``align_to_wind``;
    queries pull sample points back through the inverse rotation so the grid
    itself is never resampled.
    """

    values: float | np.ndarray = 0.0
    rotation_deg: float = 0.0

    def __post_init__(self) -> None:
        v = self.values
        if isinstance(v, np.ndarray):
            if v.ndim != 2 or v.size == 0:
                raise SceneError("terrain grid must be a non-empty 2D array")
            if not np.all(np.isfinite(v)):
                raise SceneError("terrain elevations must be finite")
            v = np.asarray(v, dtype=np.float64)
            v.setflags(write=False)
            object.__setattr__(self, "values", v)
        elif not math.isfinite(float(v)):
            raise SceneError("terrain elevation must be finite")

    @property
    def is_constant(self) -> bool:
        return not isinstance(self.values, np.ndarray)

    def min_elevation(self) -> float:
        if self.is_constant:
            return float(self.values)
        return float(np.min(self.values))

    def sample(self, xs: np.ndarray, ys: np.ndarray, side: float) -> np.ndarray:
        """Nearest-neighbor elevation at world points (after inverse rotation)."""
        if self.is_constant:
            return np.full(np.broadcast(xs, ys).shape, float(self.values))
        c = side / 2.0
        if self.rotation_deg:
            th = math.radians(-self.rotation_deg)
            co, si = _snap_trig(math.cos(th), math.sin(th))
            dx, dy = xs - c, ys - c
            qx = c + co * dx - si * dy
            qy = c + si * dx + co * dy
        else:
            qx, qy = xs, ys
        grid = self.values
        th_, tw = grid.shape
        jj = np.clip((qx / side * tw).astype(np.int64), 0, tw - 1)
        ii = np.clip((qy / side * th_).astype(np.int64), 0, th_ - 1)
        return grid[ii, jj]


@dataclass(frozen=True)
class UrbanScene:
    """Ground-truth vector description of an urban patch."""

    bounds_side: float = 512.0
    terrain: Terrain = field(default_factory=Terrain)
    buildings: tuple[Building, ...] = ()
    trees: tuple[CanopyElement, ...] = ()
    scene_id: str = ""

    def __post_init__(self) -> None:
        if not self.bounds_side > 0:
            raise SceneError(f"bounds side must be > 0, got {self.bounds_side}")
        for b in self.buildings:
            _require_in_bounds(b.footprint, self.bounds_side, "building footprint")
        for t in self.trees:
            if isinstance(t.footprint, Disc):
                if not _point_in_bounds(t.footprint.cx, t.footprint.cy, self.bounds_side):
                    raise SceneError("canopy position lies outside bounds")
            else:
                _require_in_bounds(t.footprint, self.bounds_side, "canopy footprint")

    def datum(self) -> float:
        """Lowest ground elevation z0; probe planes are measured from here."""
        return self.terrain.min_elevation()

    def max_structure_top(self) -> float:
        """Highest solid elevation anywhere in the scene (terrain or roof)."""
        top = self.terrain.values if self.terrain.is_constant else float(np.max(self.terrain.values))
        top = float(top)
        for b in self.buildings:
            top = max(top, b.base + b.height)
        return top


@dataclass(frozen=True)
class EncodedInput:
    """Four-channel height-map stack for one (scene, direction, probe plane)."""

    channels: np.ndarray  # (4, H, W) float32
    slice_height: float
    direction: CardinalDirection
    meters_per_cell: float

    def __post_init__(self) -> None:
        ch = np.asarray(self.channels, dtype=np.float32)
        if ch.ndim != 3 or ch.shape[0] != 4 or ch.shape[1] != ch.shape[2]:
            raise SceneError(f"encoded input must be (4, H, H), got {ch.shape}")
        ch.setflags(write=False)
        object.__setattr__(self, "channels", ch)

    @property
    def grid(self) -> int:
        return self.channels.shape[1]


# ---------------------------------------------------------------------------
# geometry helpers


def _snap_trig(co: float, si: float) -> tuple[float, float]:
    # cos/sin of multiples of 90 deg must be exact so cardinal rotations are.
    def snap(v: float) -> float:
        for t in (-1.0, 0.0, 1.0):
            if abs(v - t) < 1e-12:
                return t
        return v

    return snap(co), snap(si)


def _point_in_bounds(x: float, y: float, side: float) -> bool:
    return 0.0 <= x <= side and 0.0 <= y <= side


def _require_in_bounds(poly: PolygonT, side: float, what: str) -> None:
    for (x, y) in poly:
        if not _point_in_bounds(x, y, side):
            raise SceneError(f"{what} vertex ({x}, {y}) lies outside bounds [0, {side}]")


def _validate_polygon(poly: PolygonT, what: str) -> None:
    if len(poly) < 3:
        raise SceneError(f"{what} needs >= 3 vertices")
    for p in poly:
        if not (math.isfinite(p[0]) and math.isfinite(p[1])):
            raise SceneError(f"{what} has non-finite vertex {p}")
    if _self_intersects(poly):
        raise SceneError(f"{what} is self-intersecting")


def _segments_properly_cross(p1: Vec2, p2: Vec2, q1: Vec2, q2: Vec2) -> bool:
    def orient(a: Vec2, b: Vec2, c: Vec2) -> float:
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    d1 = orient(q1, q2, p1)
    d2 = orient(q1, q2, p2)
    d3 = orient(p1, p2, q1)
    d4 = orient(p1, p2, q2)
    return ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0)) and d1 != 0 and d2 != 0 and d3 != 0 and d4 != 0


def _self_intersects(poly: PolygonT) -> bool:
    n = len(poly)
    for i in range(n):
        a1, a2 = poly[i], poly[(i + 1) % n]
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or (i + 1) % n == j:
                continue
            b1, b2 = poly[j], poly[(j + 1) % n]
            if _segments_properly_cross(a1, a2, b1, b2):
                return True
    return False


def polygon_contains(poly: PolygonT, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Vectorized even-odd (crossing number) containment of grid points."""
    inside = np.zeros(np.broadcast(xs, ys).shape, dtype=bool)
    n = len(poly)
    x0, y0 = poly[-1]
    for k in range(n):
        x1, y1 = poly[k]
        straddles = (y0 > ys) != (y1 > ys)
        if np.any(straddles):
            xcross = (x1 - x0) * (ys - y0) / (y1 - y0) + x0
            inside ^= straddles & (xs < xcross)
        x0, y0 = x1, y1
    return inside


def _contains(fp: PolygonT | Disc, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    if isinstance(fp, Disc):
        return (xs - fp.cx) ** 2 + (ys - fp.cy) ** 2 <= fp.radius**2
    return polygon_contains(fp, xs, ys)


def _rotate_poly(poly: PolygonT, co: float, si: float, c: float) -> PolygonT:
    return tuple(
        (c + co * (x - c) - si * (y - c), c + si * (x - c) + co * (y - c)) for (x, y) in poly
    )


def clip_polygon_to_square(poly: PolygonT, side: float) -> PolygonT | None:
    """Sutherland-Hodgman clip against [0, side]^2; None if nothing remains."""
    def clip_edge(pts: list[Vec2], inside, intersect) -> list[Vec2]:
        out: list[Vec2] = []
        if not pts:
            return out
        prev = pts[-1]
        prev_in = inside(prev)
        for cur in pts:
            cur_in = inside(cur)
            if cur_in:
                if not prev_in:
                    out.append(intersect(prev, cur))
                out.append(cur)
            elif prev_in:
                out.append(intersect(prev, cur))
            prev, prev_in = cur, cur_in
        return out

    def x_cut(level: float):
        def f(a: Vec2, b: Vec2) -> Vec2:
            t = (level - a[0]) / (b[0] - a[0])
            return (level, a[1] + t * (b[1] - a[1]))

        return f

    def y_cut(level: float):
        def f(a: Vec2, b: Vec2) -> Vec2:
            t = (level - a[1]) / (b[1] - a[1])
            return (a[0] + t * (b[0] - a[0]), level)

        return f

    pts = list(poly)
    pts = clip_edge(pts, lambda p: p[0] >= 0.0, x_cut(0.0))
    pts = clip_edge(pts, lambda p: p[0] <= side, x_cut(side))
    pts = clip_edge(pts, lambda p: p[1] >= 0.0, y_cut(0.0))
    pts = clip_edge(pts, lambda p: p[1] <= side, y_cut(side))
    if len(pts) < 3:
        return None
    return tuple(pts)


# ---------------------------------------------------------------------------
# operations


def align_to_wind(scene: UrbanScene, direction: CardinalDirection) -> UrbanScene:
    """Rigidly rotate the scene so wind from ``direction`` becomes the west wind.

    Vector geometry rotates exactly about the bounds center; anything the
    rotation pushes outside the square is clipped (possibly emptying the
    scene, which is valid).  Terrain grids are never resampled: the rotation
    is recorded and queries are pulled back through it.
    """
    direction = CardinalDirection(direction)
    co, si = _ALIGN_ROT[direction]
    deg = _ALIGN_DEG[direction]
    if deg == 0.0:
        return scene
    c = scene.bounds_side / 2.0

    buildings = []
    for b in scene.buildings:
        fp = clip_polygon_to_square(_rotate_poly(b.footprint, co, si, c), scene.bounds_side)
        if fp is None:
            continue
        voids = []
        for v in b.voids:
            vfp = clip_polygon_to_square(_rotate_poly(v.footprint, co, si, c), scene.bounds_side)
            if vfp is not None:
                voids.append(Void(vfp, v.z_low, v.z_high))
        buildings.append(Building(fp, b.base, b.height, tuple(voids)))

    trees = []
    for t in scene.trees:
        if isinstance(t.footprint, Disc):
            x = c + co * (t.footprint.cx - c) - si * (t.footprint.cy - c)
            y = c + si * (t.footprint.cx - c) + co * (t.footprint.cy - c)
            if _point_in_bounds(x, y, scene.bounds_side):
                trees.append(CanopyElement(Disc(x, y, t.footprint.radius), t.z_low, t.z_high))
        else:
            fp = clip_polygon_to_square(_rotate_poly(t.footprint, co, si, c), scene.bounds_side)
            if fp is not None:
                trees.append(CanopyElement(fp, t.z_low, t.z_high))

    terrain = scene.terrain
    if not terrain.is_constant:
        terrain = replace(terrain, rotation_deg=(terrain.rotation_deg + deg) % 360.0)
    return UrbanScene(
        bounds_side=scene.bounds_side,
        terrain=terrain,
        buildings=tuple(buildings),
        trees=tuple(trees),
        scene_id=scene.scene_id,
    )


def cell_centers(side: float, grid: int) -> tuple[np.ndarray, np.ndarray]:
    """World coordinates (xs, ys) of cell centers, each shaped (grid, grid)."""
    h = side / grid
    coords = (np.arange(grid, dtype=np.float64) + 0.5) * h
    xs = np.broadcast_to(coords[None, :], (grid, grid))
    ys = np.broadcast_to(coords[:, None], (grid, grid))
    return xs, ys


def encode(scene: UrbanScene, slice_height: float, grid: int) -> EncodedInput:
    """Rasterize a wind-aligned scene into the four-channel stack.

    Cells take the value at their center point; the probe plane is the
    horizontal plane ``z = datum + slice_height``.
    """
    if not slice_height > 0:
        raise SceneError(f"slice_height must be > 0, got {slice_height}")
    if grid < 1:
        raise SceneError("grid must be >= 1")
    side = scene.bounds_side
    xs, ys = cell_centers(side, grid)

    g = scene.terrain.sample(xs, ys, side)
    if not np.all(np.isfinite(g)):
        raise SceneError("terrain sample produced non-finite elevations")
    z0 = scene.datum()
    zp = z0 + slice_height

    in_solid = zp <= g  # underground
    top_solid = g.copy()  # highest solid top per column (terrain floor everywhere)
    below_top = np.where(g < zp, g, -np.inf)  # highest solid surface strictly below probe
    subtractive = np.zeros_like(g)

    for b in scene.buildings:
        fp = polygon_contains(b.footprint, xs, ys)
        if not fp.any():
            continue
        top = b.base + b.height
        in_void = np.zeros_like(fp)
        for v in b.voids:
            lo, hi = b.base + v.z_low, b.base + v.z_high
            if not (lo < zp < hi):
                continue
            vmask = fp & polygon_contains(v.footprint, xs, ys)
            in_void |= vmask
            np.maximum(subtractive, np.where(vmask, hi - zp, 0.0), out=subtractive)
            if v.z_low > 0:
                # solid shelf under the void is the nearest surface below
                below_top = np.where(vmask, np.maximum(below_top, lo), below_top)
        if b.base <= zp <= top:
            in_solid |= fp & ~in_void
        top_solid = np.where(fp, np.maximum(top_solid, top), top_solid)
        if top <= zp:
            below_top = np.where(fp, np.maximum(below_top, top), below_top)

    global_ch = np.where(in_solid, top_solid - zp, below_top - zp)
    subtractive = np.where(in_solid, 0.0, subtractive)

    has_add = np.zeros(g.shape, dtype=bool)
    add_top = np.full(g.shape, -np.inf)
    for t in scene.trees:
        fp = _contains(t.footprint, xs, ys)
        if not fp.any():
            continue
        has_add |= fp
        add_top = np.where(fp, np.maximum(add_top, g + t.z_high), add_top)
    additive = np.where(has_add, add_top - zp, 0.0)

    channels = np.stack([global_ch, subtractive, g - z0, additive]).astype(np.float32)
    return EncodedInput(
        channels=channels,
        slice_height=slice_height,
        direction=CardinalDirection.W,
        meters_per_cell=side / grid,
    )


def obstacle_mask(enc: EncodedInput) -> np.ndarray:
    """True where the probe plane sits inside solid; void cells are open."""
    return obstacle_mask_from_channels(enc.channels)


def obstacle_mask_from_channels(channels: np.ndarray) -> np.ndarray:
    """Mask rule on a bare 4-channel stack: solid above probe and no void."""
    return np.asarray((channels[0] > 0) & (channels[1] == 0))


def canopy_obstruction_mask(scene: UrbanScene, slice_height: float, grid: int) -> np.ndarray:
    """Cells whose canopy vertically spans the probe plane.

    The flow oracle treats such cells as blocking; canopies entirely above or
    below the probe leave the flow untouched.
    """
    side = scene.bounds_side
    xs, ys = cell_centers(side, grid)
    g = scene.terrain.sample(xs, ys, side)
    zp = scene.datum() + slice_height
    out = np.zeros(g.shape, dtype=bool)
    for t in scene.trees:
        fp = _contains(t.footprint, xs, ys)
        out |= fp & (g + t.z_low <= zp) & (zp <= g + t.z_high)
    return out


def encode_for(scene: UrbanScene, direction: CardinalDirection, slice_height: float, grid: int) -> EncodedInput:
    """align + encode, stamping the requested direction on the result."""
    enc = encode(align_to_wind(scene, direction), slice_height, grid)
    return replace(enc, direction=CardinalDirection(direction))


# ---------------------------------------------------------------------------
# scene document (UTF-8 JSON, schema "urbanwind-scene/1")


def _poly_to_json(poly: PolygonT) -> list[list[float]]:
    return [[float(x), float(y)] for (x, y) in poly]


def _poly_from_json(data: object, what: str) -> PolygonT:
    if not isinstance(data, list):
        raise SceneError(f"{what}: footprint must be a list of [x, y] pairs")
    try:
        return tuple((float(p[0]), float(p[1])) for p in data)
    except (TypeError, IndexError) as exc:
        raise SceneError(f"{what}: malformed vertex list") from exc


def scene_to_dict(scene: UrbanScene) -> dict:
    if scene.terrain.is_constant:
        terrain: dict = {"constant": float(scene.terrain.values)}
    else:
        terrain = {"grid": [[float(v) for v in row] for row in scene.terrain.values]}
        if scene.terrain.rotation_deg:
            terrain["rotation_deg"] = float(scene.terrain.rotation_deg)
    trees = []
    for t in scene.trees:
        if isinstance(t.footprint, Disc):
            shape: dict = {"disc": {"cx": t.footprint.cx, "cy": t.footprint.cy, "radius": t.footprint.radius}}
        else:
            shape = {"polygon": _poly_to_json(t.footprint)}
        trees.append({**shape, "z_low": t.z_low, "z_high": t.z_high})
    return {
        "format": SCENE_FORMAT,
        "scene_id": scene.scene_id,
        "bounds": {"side": scene.bounds_side},
        "terrain": terrain,
        "buildings": [
            {
                "footprint": _poly_to_json(b.footprint),
                "base": b.base,
                "height": b.height,
                "voids": [
                    {"footprint": _poly_to_json(v.footprint), "z_low": v.z_low, "z_high": v.z_high}
                    for v in b.voids
                ],
            }
            for b in scene.buildings
        ],
        "trees": trees,
    }


def scene_from_dict(data: dict) -> UrbanScene:
    if not isinstance(data, dict):
        raise SceneError("scene document must be a JSON object")
    if data.get("format") != SCENE_FORMAT:
        raise SceneError(f"unsupported scene format {data.get('format')!r}")
    try:
        side = float(data["bounds"]["side"])
    except (KeyError, TypeError) as exc:
        raise SceneError("scene document missing bounds.side") from exc

    tdata = data.get("terrain", {"constant": 0.0})
    if "constant" in tdata:
        terrain = Terrain(float(tdata["constant"]))
    elif "grid" in tdata:
        terrain = Terrain(np.asarray(tdata["grid"], dtype=np.float64), float(tdata.get("rotation_deg", 0.0)))
    else:
        raise SceneError("terrain must provide 'constant' or 'grid'")

    buildings = []
    for i, b in enumerate(data.get("buildings", [])):
        voids = tuple(
            Void(_poly_from_json(v["footprint"], f"building {i} void"), float(v["z_low"]), float(v["z_high"]))
            for v in b.get("voids", [])
        )
        buildings.append(
            Building(
                footprint=_poly_from_json(b["footprint"], f"building {i}"),
                base=float(b.get("base", 0.0)),
                height=float(b["height"]),
                voids=voids,
            )
        )

    trees = []
    for i, t in enumerate(data.get("trees", [])):
        if "disc" in t:
            d = t["disc"]
            fp: PolygonT | Disc = Disc(float(d["cx"]), float(d["cy"]), float(d["radius"]))
        elif "polygon" in t:
            fp = _poly_from_json(t["polygon"], f"tree {i}")
        else:
            raise SceneError(f"tree {i} must provide 'disc' or 'polygon'")
        trees.append(CanopyElement(fp, float(t["z_low"]), float(t["z_high"])))

    return UrbanScene(
        bounds_side=side,
        terrain=terrain,
        buildings=tuple(buildings),
        trees=tuple(trees),
        scene_id=str(data.get("scene_id", "")),
    )


def dumps_scene(scene: UrbanScene) -> str:
    return json.dumps(scene_to_dict(scene), indent=2, sort_keys=True)


def loads_scene(text: str) -> UrbanScene:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SceneError(f"scene document is not valid JSON: {exc}") from exc
    return scene_from_dict(data)


def save_scene(scene: UrbanScene, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_scene(scene))
        fh.write("\n")


def load_scene(path) -> UrbanScene:
    with open(path, encoding="utf-8") as fh:
        return loads_scene(fh.read())
