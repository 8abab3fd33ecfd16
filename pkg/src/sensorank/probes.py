"""Synthetic two-object scene probes.

Scenes place one colored shape on the left half of a gray canvas and one on
the right. From these we build two probe datasets:

* binding trials: a query scene plus four candidates (one target preserving
  the query's shape-position assignments under completely fresh colors, and
  three structured distractors), chance level 25%;
* same/different pairs: two scenes that either share their shape-position
  configuration (colors always change) or differ in it, chance level 50%.

Everything here is deterministic: each trial derives its own RNG stream from
(seed, stream tag, index), the renderer is pure, and the PNG writer emits
byte-identical files for identical pixels.
"""

from __future__ import annotations

import dataclasses
import json
import math
import struct
import zlib
from enum import IntEnum
from pathlib import Path

import numpy as np

from . import streams
from .errors import DatasetGenerationError

GENERATOR_VERSION = "1"

# --------------------------------------------------------------------------
# scene vocabulary
# --------------------------------------------------------------------------

CANVAS_PX = 224
HALF_EXTENT_PX = CANVAS_PX // 6          # 37
BACKGROUND_RGB = (200, 200, 200)
LEFT_CENTER = (CANVAS_PX // 4, CANVAS_PX // 2)        # (x, y) = (56, 112)
RIGHT_CENTER = (3 * CANVAS_PX // 4, CANVAS_PX // 2)   # (168, 112)


class Shape(IntEnum):
    """Shape vocabulary. Integer values are frozen; names serialize lowercase."""

    CIRCLE = 0
    SQUARE = 1
    TRIANGLE = 2

    @property
    def label(self) -> str:
        return self.name.lower()

    @classmethod
    def from_label(cls, label: str) -> "Shape":
        try:
            return cls[label.upper()]
        except KeyError:
            raise ValueError(f"unknown shape label {label!r}") from None


@dataclasses.dataclass(frozen=True)
class Color:
    name: str
    rgb: tuple[int, int, int]


# Palette order is load-bearing: trial generators draw colors by index.
PALETTE: tuple[Color, ...] = (
    Color("red", (220, 60, 60)),
    Color("green", (60, 180, 60)),
    Color("blue", (60, 60, 220)),
    Color("yellow", (220, 220, 60)),
    Color("purple", (160, 60, 200)),
    Color("cyan", (60, 200, 200)),
)
COLOR_BY_NAME = {c.name: c for c in PALETTE}


@dataclasses.dataclass(frozen=True)
class SceneSpec:
    """Symbolic description of a two-object scene."""

    left: tuple[Shape, Color]
    right: tuple[Shape, Color]
    canvas_px: int = CANVAS_PX
    shape_half_extent_px: int = HALF_EXTENT_PX
    background_rgb: tuple[int, int, int] = BACKGROUND_RGB

    def __post_init__(self) -> None:
        # The probe protocol is defined at exactly this geometry; anything
        # else would silently invalidate the downstream calibrations.
        if self.canvas_px != CANVAS_PX:
            raise ValueError(f"canvas_px must be {CANVAS_PX}, got {self.canvas_px}")
        if self.shape_half_extent_px != HALF_EXTENT_PX:
            raise ValueError(f"shape_half_extent_px must be {HALF_EXTENT_PX}")
        if tuple(self.background_rgb) != BACKGROUND_RGB:
            raise ValueError(f"background_rgb must be {BACKGROUND_RGB}")

    def to_json(self) -> dict:
        return {
            "left": [self.left[0].label, self.left[1].name],
            "right": [self.right[0].label, self.right[1].name],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "SceneSpec":
        def color(name: str) -> Color:
            try:
                return COLOR_BY_NAME[name]
            except KeyError:
                raise ValueError(f"unknown color name {name!r}") from None

        return cls(
            left=(Shape.from_label(obj["left"][0]), color(obj["left"][1])),
            right=(Shape.from_label(obj["right"][0]), color(obj["right"][1])),
        )


# --------------------------------------------------------------------------
# rendering
# --------------------------------------------------------------------------


def _shape_mask(kind: Shape, cx: int, cy: int, h: int, size: int) -> np.ndarray:
    """Boolean membership mask for one shape, boundary inclusive."""
    yy, xx = np.mgrid[0:size, 0:size]
    if kind is Shape.CIRCLE:
        return (xx - cx) ** 2 + (yy - cy) ** 2 <= h * h
    if kind is Shape.SQUARE:
        return (np.abs(xx - cx) <= h) & (np.abs(yy - cy) <= h)
    # Equilateral triangle, apex up, inscribed in the 2h x 2h bounding box:
    # base spans the bottom edge, apex sits at cy + h - h*sqrt(3).
    ax, ay = float(cx), cy + h - h * math.sqrt(3.0)
    bx, by = float(cx - h), float(cy + h)
    gx, gy = float(cx + h), float(cy + h)

    def edge(ux, uy, vx, vy):
        return (vx - ux) * (yy - uy) - (vy - uy) * (xx - ux)

    # A->B->C winds clockwise in image coordinates (y down), so the interior
    # is where every edge function is <= 0.
    return (edge(ax, ay, bx, by) <= 0) & (edge(bx, by, gx, gy) <= 0) & (edge(gx, gy, ax, ay) <= 0)


def render_scene(spec: SceneSpec) -> np.ndarray:
    """Rasterize a scene to a (224, 224, 3) uint8 array. Pure, no anti-aliasing."""
    size = spec.canvas_px
    img = np.empty((size, size, 3), dtype=np.uint8)
    img[:] = spec.background_rgb
    for (shape, color), (cx, cy) in ((spec.left, LEFT_CENTER), (spec.right, RIGHT_CENTER)):
        mask = _shape_mask(shape, cx, cy, spec.shape_half_extent_px, size)
        img[mask] = color.rgb
    return img


def write_png(path: Path | str, img: np.ndarray) -> None:
    """Minimal RGB8 PNG writer with a fixed compression level.

    Hand-rolled so dataset bytes do not depend on the PIL/zlib-wrapper version
    in the environment; zlib itself produces stable output for a fixed level.
    """
    if img.dtype != np.uint8 or img.ndim != 3 or img.shape[2] != 3:
        raise ValueError("expected (H, W, 3) uint8 image")
    height, width = img.shape[:2]
    raw = b"".join(b"\x00" + img[row].tobytes() for row in range(height))

    def chunk(tag: bytes, data: bytes) -> bytes:
        return (
            struct.pack(">I", len(data))
            + tag
            + data
            + struct.pack(">I", zlib.crc32(tag + data) & 0xFFFFFFFF)
        )

    ihdr = struct.pack(">IIBBBBB", width, height, 8, 2, 0, 0, 0)
    payload = (
        b"\x89PNG\r\n\x1a\n"
        + chunk(b"IHDR", ihdr)
        + chunk(b"IDAT", zlib.compress(raw, 9))
        + chunk(b"IEND", b"")
    )
    try:
        Path(path).write_bytes(payload)
    except OSError as exc:
        raise DatasetGenerationError(f"could not write image {path}: {exc}") from exc


# --------------------------------------------------------------------------
# trial generation
# --------------------------------------------------------------------------

DISTRACTOR_KINDS = ("shape_swap", "shape_swap2", "partial_match")


@dataclasses.dataclass(frozen=True)
class BindingTrial:
    query: SceneSpec
    candidates: tuple[SceneSpec, SceneSpec, SceneSpec, SceneSpec]
    target_index: int
    distractor_kinds: tuple[str, str, str]   # candidate order, target skipped

    @property
    def candidate_kinds(self) -> tuple[str, str, str, str]:
        """Kinds parallel to candidates, with "target" inserted."""
        kinds = list(self.distractor_kinds)
        kinds.insert(self.target_index, "target")
        return tuple(kinds)


@dataclasses.dataclass(frozen=True)
class SameDiffPair:
    image_a: SceneSpec
    image_b: SceneSpec
    label: str                        # "same" | "different"
    different_kind: str | None = None  # "shape_swap" | "shape_change"


def _scene(s_left: Shape, c_left: Color, s_right: Shape, c_right: Color) -> SceneSpec:
    return SceneSpec(left=(s_left, c_left), right=(s_right, c_right))


def gen_binding_trial(rng: np.random.Generator) -> BindingTrial:
    """One binding trial from a dedicated rng stream.

    Draw order is part of the dataset contract and must never change:
    shapes, query colors, target colors, swap2 colors, candidate shuffle.
    The query and target share zero colors; both swap distractors also avoid
    the query's colors; the swap2 color pair is redrawn until it differs from
    the target pair so the two swap distractors are distinct scenes.
    """
    s_idx = rng.choice(3, size=2, replace=False)
    s1, s2 = Shape(int(s_idx[0])), Shape(int(s_idx[1]))

    q_idx = rng.choice(6, size=2, replace=False)
    c1q, c2q = PALETTE[int(q_idx[0])], PALETTE[int(q_idx[1])]
    remaining = [i for i in range(6) if i not in set(int(j) for j in q_idx)]

    t_pick = rng.choice(4, size=2, replace=False)
    c1t, c2t = PALETTE[remaining[int(t_pick[0])]], PALETTE[remaining[int(t_pick[1])]]
    while True:
        d_pick = rng.choice(4, size=2, replace=False)
        c1d, c2d = PALETTE[remaining[int(d_pick[0])]], PALETTE[remaining[int(d_pick[1])]]
        if (c1d, c2d) != (c1t, c2t):
            break

    query = _scene(s1, c1q, s2, c2q)
    canonical = (
        _scene(s1, c1t, s2, c2t),   # target: bindings preserved, colors fresh
        _scene(s2, c1t, s1, c2t),   # shape_swap: shapes swapped, target colors stay in slots
        _scene(s2, c1d, s1, c2d),   # shape_swap2: shapes swapped, fresh disjoint colors
        _scene(s1, c1t, s1, c2t),   # partial_match: left correct, right repeats s1
    )
    kinds_canonical = ("target",) + DISTRACTOR_KINDS

    perm = rng.permutation(4)
    candidates = tuple(canonical[int(j)] for j in perm)
    target_index = int(np.where(perm == 0)[0][0])
    distractor_kinds = tuple(kinds_canonical[int(j)] for j in perm if int(j) != 0)
    return BindingTrial(query, candidates, target_index, distractor_kinds)


def gen_samediff_pair(rng: np.random.Generator, label: str | None = None) -> SameDiffPair:
    """One same/different pair; the dataset builder forces labels to alternate.

    SAME pairs keep the configuration and recolor both slots from the four
    colors unused by image A. DIFFERENT pairs either swap the two shapes
    (colors stay with their slots) or replace the left shape; shapes are
    drawn without replacement in the swap branch because swapping identical
    shapes would not change the scene.
    """
    if label is None:
        label = "same" if rng.random() < 0.5 else "different"
    if label not in ("same", "different"):
        raise ValueError(f"unknown label {label!r}")

    kind = None
    if label == "different":
        kind = "shape_swap" if rng.random() < 0.5 else "shape_change"

    if kind == "shape_swap":
        s_idx = rng.choice(3, size=2, replace=False)
    else:
        s_idx = rng.integers(0, 3, size=2)
    s1, s2 = Shape(int(s_idx[0])), Shape(int(s_idx[1]))

    c_idx = rng.choice(6, size=2, replace=False)
    c1, c2 = PALETTE[int(c_idx[0])], PALETTE[int(c_idx[1])]
    image_a = _scene(s1, c1, s2, c2)

    if label == "same":
        remaining = [i for i in range(6) if i not in set(int(j) for j in c_idx)]
        p = rng.choice(4, size=2, replace=False)
        image_b = _scene(s1, PALETTE[remaining[int(p[0])]], s2, PALETTE[remaining[int(p[1])]])
    elif kind == "shape_swap":
        image_b = _scene(s2, c1, s1, c2)
    else:
        s1_new = Shape(int(rng.choice([k for k in range(3) if k != int(s1)])))
        image_b = _scene(s1_new, c1, s2, c2)
    return SameDiffPair(image_a, image_b, label, kind)


# --------------------------------------------------------------------------
# datasets and manifests
# --------------------------------------------------------------------------


@dataclasses.dataclass
class DatasetManifest:
    """In-memory form of manifest.json; entries are JSON-shaped dicts."""

    kind: str
    seed: int
    generator_version: str
    entries: list[dict]

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "seed": self.seed,
            "generator_version": self.generator_version,
            "entries": self.entries,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "DatasetManifest":
        return cls(obj["kind"], obj["seed"], obj["generator_version"], obj["entries"])

    def image_paths(self) -> list[str]:
        return [p for entry in self.entries for p in entry["images"]]

    def scenes(self) -> dict[str, SceneSpec]:
        """Map relative image path -> symbolic scene."""
        out: dict[str, SceneSpec] = {}
        for entry in self.entries:
            for path, scene in zip(entry["images"], entry["scenes"]):
                out[path] = SceneSpec.from_json(scene)
        return out


def build_binding_manifest(n: int, seed: int) -> DatasetManifest:
    """Binding manifest with symbolic scenes; no pixels are produced here."""
    entries = []
    for i in range(n):
        rng = streams.generator(seed, streams.BINDING_TRIALS, i)
        trial = gen_binding_trial(rng)
        trial_id = f"binding-{i:05d}"
        images = [f"{trial_id}_query.png"] + [f"{trial_id}_cand{j}.png" for j in range(4)]
        scenes = [trial.query.to_json()] + [c.to_json() for c in trial.candidates]
        entries.append(
            {
                "id": trial_id,
                "images": images,
                "target_index": trial.target_index,
                "kinds": list(trial.candidate_kinds),
                "scenes": scenes,
            }
        )
    return DatasetManifest("binding", seed, GENERATOR_VERSION, entries)


def build_samediff_manifest(n: int, seed: int) -> DatasetManifest:
    """Same/different manifest; labels alternate so the balance is exact."""
    entries = []
    for i in range(n):
        rng = streams.generator(seed, streams.SAMEDIFF_PAIRS, i)
        pair = gen_samediff_pair(rng, label="same" if i % 2 == 0 else "different")
        pair_id = f"samediff-{i:05d}"
        entries.append(
            {
                "id": pair_id,
                "images": [f"{pair_id}_a.png", f"{pair_id}_b.png"],
                "label": pair.label,
                "different_kind": pair.different_kind,
                "scenes": [pair.image_a.to_json(), pair.image_b.to_json()],
            }
        )
    return DatasetManifest("samediff", seed, GENERATOR_VERSION, entries)


def gen_dataset(kind: str, n: int, seed: int, out_dir: Path | str) -> DatasetManifest:
    """Generate a dataset on disk: PNGs plus manifest.json.

    Regenerating with identical arguments rewrites byte-identical files, so
    the output directory can be treated as a content-addressed artifact.
    """
    builders = {"binding": build_binding_manifest, "samediff": build_samediff_manifest}
    if kind not in builders:
        raise ValueError(f"unknown dataset kind {kind!r}; expected one of {sorted(builders)}")
    manifest = builders[kind](n, seed)

    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise DatasetGenerationError(f"could not create {out_dir}: {exc}") from exc

    for path, scene in manifest.scenes().items():
        write_png(out_dir / path, render_scene(scene))

    manifest_path = out_dir / "manifest.json"
    try:
        manifest_path.write_text(json.dumps(manifest.to_json(), indent=2) + "\n")
    except OSError as exc:
        raise DatasetGenerationError(f"could not write {manifest_path}: {exc}") from exc
    return manifest


def load_manifest(path: Path | str) -> DatasetManifest:
    path = Path(path)
    if path.is_dir():
        path = path / "manifest.json"
    return DatasetManifest.from_json(json.loads(path.read_text()))
