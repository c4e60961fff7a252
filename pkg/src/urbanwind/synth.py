"""Seeded random urban scenes for desk-scale experiments.

Four generation kinds map onto the complexity classes used in reports:
plain extrusion blocks, blocks with carved ground-level voids (arcades),
blocks on hilly terrain, and blocks with tree canopies.  Densities are tuned
so wakes cover a large share of the open area, which keeps constant-field
baselines weak.
"""

from __future__ import annotations

import math

import numpy as np

from .scene import Building, CanopyElement, Disc, Terrain, UrbanScene, Void

KINDS = ("simple", "voids", "terrain", "trees")


def _rotated_rect(rng: np.random.Generator, side: float,
                  placed: list[tuple[float, float, float]]) -> tuple[tuple[float, float], ...] | None:
    """One rotated rectangle keeping clear of already placed ones.

    Spacing stops buildings chaining into cross-flow walls, which would force
    extreme channel speed-ups in the 2D oracle.
    """
    w = rng.uniform(25.0, 70.0)
    d = rng.uniform(25.0, 70.0)
    ang = rng.uniform(0.0, math.pi)
    half_diag = 0.5 * math.hypot(w, d)
    margin = half_diag + 2.0
    for _ in range(40):
        cx = rng.uniform(margin, side - margin)
        cy = rng.uniform(margin, side - margin)
        if all(
            math.hypot(cx - px, cy - py) >= 0.8 * (half_diag + pr) + 12.0
            for (px, py, pr) in placed
        ):
            break
    else:
        return None
    placed.append((cx, cy, half_diag))
    ca, sa = math.cos(ang), math.sin(ang)
    pts = []
    for (dx, dy) in ((-w / 2, -d / 2), (w / 2, -d / 2), (w / 2, d / 2), (-w / 2, d / 2)):
        pts.append((cx + ca * dx - sa * dy, cy + sa * dx + ca * dy))
    return tuple(pts)


def _hilly_terrain(rng: np.random.Generator, side: float, res: int = 64) -> Terrain:
    coords = (np.arange(res) + 0.5) * (side / res)
    xs, ys = np.meshgrid(coords, coords)
    g = np.zeros((res, res))
    for _ in range(rng.integers(1, 3)):
        cx, cy = rng.uniform(0.2 * side, 0.8 * side, size=2)
        sigma = rng.uniform(30.0, 50.0)
        amp = rng.uniform(4.0, 12.0)
        g += amp * np.exp(-((xs - cx) ** 2 + (ys - cy) ** 2) / (2 * sigma**2))
    return Terrain(values=g)


def random_scene(
    rng: np.random.Generator,
    scene_id: str,
    side: float = 512.0,
    kind: str | None = None,
) -> UrbanScene:
    if kind is None:
        kind = rng.choice(KINDS, p=(0.4, 0.2, 0.2, 0.2))
    if kind not in KINDS:
        raise ValueError(f"unknown scene kind {kind!r}")

    terrain = _hilly_terrain(rng, side) if kind == "terrain" else Terrain(0.0)
    n_buildings = int(rng.integers(5, 9))
    buildings = []
    placed: list[tuple[float, float, float]] = []
    for _ in range(n_buildings):
        fp = _rotated_rect(rng, side, placed)
        if fp is None:
            continue
        height = float(rng.uniform(12.0, 90.0))
        base = 0.0
        if kind == "terrain" and not terrain.is_constant:
            cx = sum(p[0] for p in fp) / len(fp)
            cy = sum(p[1] for p in fp) / len(fp)
            base = float(terrain.sample(np.array(cx), np.array(cy), side))
        buildings.append(Building(footprint=fp, base=base, height=height))

    if kind == "voids":
        for k in rng.permutation(len(buildings))[: int(rng.integers(1, 3))]:
            b = buildings[k]
            xs = [p[0] for p in b.footprint]
            ys = [p[1] for p in b.footprint]
            cx, cy = (min(xs) + max(xs)) / 2, (min(ys) + max(ys)) / 2
            half = rng.uniform(8.0, 16.0)
            lo_x, hi_x = min(xs) - 1.0, max(xs) + 1.0
            strip = (
                (max(lo_x, 0.0), max(cy - half, 0.0)),
                (min(hi_x, side), max(cy - half, 0.0)),
                (min(hi_x, side), min(cy + half, side)),
                (max(lo_x, 0.0), min(cy + half, side)),
            )
            ceiling = float(rng.uniform(3.5, 6.0))
            buildings[k] = Building(
                footprint=b.footprint,
                base=b.base,
                height=b.height,
                voids=(Void(footprint=strip, z_low=0.0, z_high=ceiling),),
            )

    trees: list[CanopyElement] = []
    if kind == "trees":
        for _ in range(int(rng.integers(4, 11))):
            r = float(rng.uniform(8.0, 22.0))
            cx = float(rng.uniform(r, side - r))
            cy = float(rng.uniform(r, side - r))
            z_low = float(rng.uniform(0.5, 3.0))
            z_high = z_low + float(rng.uniform(4.0, 9.0))
            trees.append(CanopyElement(Disc(cx, cy, r), z_low=z_low, z_high=z_high))

    return UrbanScene(
        bounds_side=side,
        terrain=terrain,
        buildings=tuple(buildings),
        trees=tuple(trees),
        scene_id=scene_id,
    )


def random_scenes(n: int, seed: int = 0, side: float = 512.0) -> list[UrbanScene]:
    """n seeded scenes, cycling kinds so every complexity class is present."""
    rng = np.random.default_rng(seed)
    scenes = []
    for i in range(n):
        kind = KINDS[i % len(KINDS)] if i < 2 * len(KINDS) else None
        scenes.append(random_scene(rng, scene_id=f"synth-{seed}-{i:04d}", side=side, kind=kind))
    return scenes
