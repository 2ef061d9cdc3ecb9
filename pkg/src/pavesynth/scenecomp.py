"""Top-down runway scenes: tiled concrete, composited cracks, lighting.

A scene is viewed by a downward orthographic camera with a constant ground
sample distance (``gsd``, meters per pixel). Each crack is rasterized into an
opacity mask, turned into a texture triplet and dropped into the concrete
exactly where its mask is set; the ground-truth mask is the union of those
opacity masks.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy import ndimage

from . import datasetio
from .cracksynth import CrackParams, generate_crack, rasterize_crack
from .errors import DatasetIOError, ParameterError
from .sample import Sample
from .texturegen import TileSpec, assemble_defect, synthesize_tile

logger = logging.getLogger(__name__)

CONDITIONS = ("noon", "dusk", "night", "noon_rain", "fog", "cloudy")
LUMA = np.array([0.299, 0.587, 0.114])

DUSK_TINT = np.array([1.0, 0.82, 0.62])
RAIN_ALBEDO = 0.7
RAIN_CONTRAST = 0.8
RAIN_STREAK_GAIN = 0.12
FOG_GRAY = 0.7
FOG_BLEND = 0.5
# crack windows are cut with this margin so the relief rim is computed in context
DEFECT_MARGIN_PX = 4


@dataclass(frozen=True)
class Spotlight:
    x: float
    y: float
    radius: float
    intensity: float


def _night_spotlights(width, height):
    # three runway light poles per frame width, alternating top and bottom edge
    spots = []
    spacing = width / 3
    radius = 0.2 * max(width, height)
    for k in range(3):
        y = 0.1 * height if k % 2 == 0 else 0.9 * height
        spots.append(Spotlight((k + 0.5) * spacing, y, radius, 1.1))
    return tuple(spots)


@dataclass(frozen=True)
class SceneConfig:
    image_size: tuple[int, int] = (1920, 1080)  # (width, height)
    gsd: float = 0.01
    tile_spec: TileSpec = field(default_factory=TileSpec)
    defects_per_scene: tuple[int, int] = (4, 10)
    long_crack_prob: float = 0.35
    crack_params: CrackParams = field(default_factory=CrackParams)
    crack_length_range_m: tuple[float, float] = (3.0, 8.0)
    darkening: float = 0.45
    condition: str = "noon"
    light_dir: tuple[float, float, float] = (0.35, -0.25, 0.9)
    light_intensity: float = 0.75
    ambient: float = 0.35
    spotlights: tuple[Spotlight, ...] = ()
    sensor_noise_std: float = 0.01
    seed: int = 0
    placement_retries: int = 20

    def validate(self) -> None:
        w, h = self.image_size
        if w < 1 or h < 1:
            raise ParameterError(f"image_size must be positive, got {self.image_size}")
        if not self.gsd > 0:
            raise ParameterError(f"gsd must be > 0, got {self.gsd}")
        if self.condition not in CONDITIONS:
            raise ParameterError(f"condition must be one of {CONDITIONS}, got {self.condition!r}")
        if self.light_intensity < 0 or any(s.intensity < 0 for s in self.spotlights):
            raise ParameterError("light intensities must be >= 0")
        if not 0 <= self.ambient <= 1:
            raise ParameterError(f"ambient must be in [0, 1], got {self.ambient}")
        lo, hi = self.defects_per_scene
        if not 0 <= lo <= hi:
            raise ParameterError(f"defects_per_scene must satisfy 0 <= min <= max, got {self.defects_per_scene}")
        if not 0 <= self.long_crack_prob <= 1:
            raise ParameterError(f"long_crack_prob must be in [0, 1], got {self.long_crack_prob}")
        lo, hi = self.crack_length_range_m
        if not 0 < lo <= hi:
            raise ParameterError(f"crack_length_range_m must satisfy 0 < min <= max, got {self.crack_length_range_m}")
        if not 0 < self.darkening <= 1:
            raise ParameterError(f"darkening must be in (0, 1], got {self.darkening}")
        if self.sensor_noise_std < 0:
            raise ParameterError(f"sensor_noise_std must be >= 0, got {self.sensor_noise_std}")
        if not np.linalg.norm(self.light_dir) > 0:
            raise ParameterError("light_dir must be nonzero")
        self.tile_spec.validate()
        self.crack_params.validate()

    @property
    def shape(self) -> tuple[int, int]:
        w, h = self.image_size
        return int(h), int(w)

    def with_condition(self, condition: str) -> "SceneConfig":
        """This config with the lighting preset of ``condition`` applied."""
        if condition not in CONDITIONS:
            raise ParameterError(f"condition must be one of {CONDITIONS}, got {condition!r}")
        preset = dict(CONDITION_PRESETS[condition])
        if condition == "night":
            preset["spotlights"] = _night_spotlights(*self.image_size)
        return replace(self, condition=condition, **preset)

    def to_dict(self) -> dict:
        return json.loads(json.dumps(asdict(self)))

    @classmethod
    def from_dict(cls, d: dict) -> "SceneConfig":
        d = dict(d)
        if "tile_spec" in d:
            d["tile_spec"] = TileSpec(**d["tile_spec"])
        if "crack_params" in d:
            cp = dict(d["crack_params"])
            if "width_range_m" in cp:
                cp["width_range_m"] = tuple(cp["width_range_m"])
            d["crack_params"] = CrackParams(**cp)
        if "spotlights" in d:
            d["spotlights"] = tuple(
                s if isinstance(s, Spotlight) else Spotlight(**s) if isinstance(s, dict) else Spotlight(*s)
                for s in d["spotlights"]
            )
        for key in ("image_size", "defects_per_scene", "crack_length_range_m", "light_dir"):
            if key in d:
                d[key] = tuple(d[key])
        return cls(**d)

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


CONDITION_PRESETS = {
    "noon": dict(ambient=0.35, light_intensity=0.75, light_dir=(0.35, -0.25, 0.9), spotlights=()),
    "dusk": dict(ambient=0.2, light_intensity=0.5, light_dir=(0.85, -0.2, 0.35), spotlights=()),
    "night": dict(ambient=0.05, light_intensity=0.0, light_dir=(0.0, 0.0, 1.0)),
    "noon_rain": dict(ambient=0.4, light_intensity=0.5, light_dir=(0.3, -0.2, 0.93), spotlights=()),
    "fog": dict(ambient=0.45, light_intensity=0.4, light_dir=(0.3, -0.2, 0.93), spotlights=()),
    "cloudy": dict(ambient=0.85, light_intensity=0.0, light_dir=(0.0, 0.0, 1.0), spotlights=()),
}


def v1_config(**overrides) -> SceneConfig:
    """Defaults tuned to roughly 1% crack pixels per 1920x1080 frame."""
    return replace(SceneConfig(), **overrides)


def v2_config(**overrides) -> SceneConfig:
    """Sparser variant, roughly 0.5% crack pixels."""
    base = SceneConfig(
        defects_per_scene=(2, 6),
        long_crack_prob=0.3,
        crack_length_range_m=(3.0, 7.0),
        crack_params=CrackParams(width_range_m=(0.03, 0.08)),
    )
    return replace(base, **overrides)


def derive_seed(master_seed: int, index: int) -> int:
    """Independent 64-bit seed for item ``index`` of a run."""
    ss = np.random.SeedSequence([int(master_seed) & (2**64 - 1), int(index)])
    return int(ss.generate_state(1, np.uint64)[0])


def luminance(image: np.ndarray) -> np.ndarray:
    return image @ LUMA


def _spotlight_field(shape, spotlights):
    h, w = shape
    field_ = np.zeros(shape)
    for s in spotlights:
        if s.intensity == 0 or s.radius <= 0:
            continue
        r0 = max(int(math.floor(s.y - s.radius)), 0)
        r1 = min(int(math.ceil(s.y + s.radius)) + 1, h)
        c0 = max(int(math.floor(s.x - s.radius)), 0)
        c1 = min(int(math.ceil(s.x + s.radius)) + 1, w)
        if r0 >= r1 or c0 >= c1:
            continue
        yy = np.arange(r0, r1)[:, None] + 0.5 - s.y
        xx = np.arange(c0, c1)[None, :] + 0.5 - s.x
        q = 1.0 - (xx * xx + yy * yy) / (s.radius * s.radius)
        field_[r0:r1, c0:c1] += s.intensity * np.where(q > 0, q * q, 0.0)
    return field_


def _rain_streaks(shape, rng):
    noise = rng.random(shape)
    streaks = ndimage.gaussian_filter(noise, sigma=(12.0, 0.6))
    streaks = (streaks - streaks.mean()) / (streaks.std() + 1e-12)
    return np.clip(streaks - 1.5, 0.0, None)


def apply_lighting(albedo: np.ndarray, normals: np.ndarray, config: SceneConfig) -> np.ndarray:
    """Shade an albedo raster and apply the condition's image-space effect.

    ``out = clamp(albedo * (ambient + intensity * max(0, n.l) + spots))``
    followed by the condition post-effect: dusk tints warm, rain darkens the
    surface, adds streaks and drops contrast, fog blends toward gray. Noon,
    night and cloudy have no post-effect beyond their presets.
    """
    if albedo.shape != normals.shape:
        raise ParameterError(f"albedo {albedo.shape} and normals {normals.shape} differ")
    if config.condition not in CONDITIONS:
        raise ParameterError(f"unknown condition {config.condition!r}")
    if config.condition == "noon_rain":
        albedo = albedo * RAIN_ALBEDO
    shade = np.full(albedo.shape[:2], float(config.ambient))
    if config.light_intensity > 0:
        light = np.asarray(config.light_dir, dtype=np.float64)
        light = light / np.linalg.norm(light)
        n = normals * 2.0 - 1.0
        shade = shade + config.light_intensity * np.maximum(n @ light, 0.0)
    if config.spotlights:
        shade = shade + _spotlight_field(albedo.shape[:2], config.spotlights)
    out = np.clip(albedo * shade[:, :, None], 0.0, 1.0)

    if config.condition == "dusk":
        out = out * DUSK_TINT
    elif config.condition == "noon_rain":
        rng = np.random.default_rng(np.random.SeedSequence([int(config.seed) & (2**64 - 1), 1]))
        out = out + RAIN_STREAK_GAIN * _rain_streaks(out.shape[:2], rng)[:, :, None]
        mean = out.mean()
        out = mean + RAIN_CONTRAST * (out - mean)
    elif config.condition == "fog":
        out = (1.0 - FOG_BLEND) * out + FOG_BLEND * FOG_GRAY
    return np.clip(out, 0.0, 1.0)


def _tiled_albedo(config: SceneConfig, rng) -> np.ndarray:
    h, w = config.shape
    tile_px = int(round(config.tile_spec.size_m / config.gsd))
    spec = replace(config.tile_spec, resolution_px=tile_px)
    oy = int(rng.integers(0, tile_px))
    ox = int(rng.integers(0, tile_px))
    rows = -(-(h + oy) // tile_px)
    cols = -(-(w + ox) // tile_px)
    seeds = rng.integers(0, 2**63, size=(rows, cols))
    canvas = np.empty((rows * tile_px, cols * tile_px, 3))
    for i in range(rows):
        for j in range(cols):
            tile = synthesize_tile(replace(spec, seed=int(seeds[i, j])))
            canvas[i * tile_px:(i + 1) * tile_px, j * tile_px:(j + 1) * tile_px] = tile
    return canvas[oy:oy + h, ox:ox + w]


def _place_defects(config: SceneConfig, rng):
    """Rasterized, non-overlapping cracks. Returns (paths, masks, warning)."""
    h, w = config.shape
    lo, hi = config.defects_per_scene
    wanted = int(rng.integers(lo, hi + 1))
    union = np.zeros((h, w), dtype=np.uint8)
    paths, masks = [], []
    warn = False
    tile_m = config.tile_spec.size_m
    for _ in range(wanted):
        placed = False
        for _attempt in range(max(int(config.placement_retries), 1)):
            if rng.random() < config.long_crack_prob:
                length = rng.uniform(1.5 * tile_m, 2.5 * tile_m)
            else:
                length = rng.uniform(*config.crack_length_range_m)
            origin = (rng.uniform(0, w * config.gsd), rng.uniform(0, h * config.gsd))
            seed = int(rng.integers(0, 2**63))
            params = replace(config.crack_params, target_length_m=length)
            path = generate_crack(seed, params, origin=origin)
            mask, empty = rasterize_crack(path, config.gsd, (h, w))
            if empty or np.any(mask & union):
                continue
            union |= mask
            paths.append(path)
            masks.append(mask)
            placed = True
            break
        if not placed:
            warn = True
    return paths, masks, warn


def compose_scene(config: SceneConfig) -> Sample:
    """Render one scene and its ground-truth mask."""
    config.validate()
    rng = np.random.default_rng(np.random.SeedSequence(int(config.seed) & (2**64 - 1)))
    h, w = config.shape
    albedo = _tiled_albedo(config, rng)
    normals = np.empty((h, w, 3))
    normals[...] = (0.5, 0.5, 1.0)
    paths, masks, warn = _place_defects(config, rng)
    mask = np.zeros((h, w), dtype=np.uint8)
    for k, m in enumerate(masks):
        rr = np.flatnonzero(m.any(axis=1))
        cc = np.flatnonzero(m.any(axis=0))
        r0 = max(rr[0] - DEFECT_MARGIN_PX, 0)
        r1 = min(rr[-1] + DEFECT_MARGIN_PX + 1, h)
        c0 = max(cc[0] - DEFECT_MARGIN_PX, 0)
        c1 = min(cc[-1] + DEFECT_MARGIN_PX + 1, w)
        win = (slice(r0, r1), slice(c0, c1))
        opacity = m[win]
        local = albedo[win].mean()
        tex = assemble_defect(opacity, int(rng.integers(0, 2**63)), config.darkening, base_gray=local)
        hole = opacity.astype(bool)
        albedo[win][hole] = tex.rgb[hole]
        normals[win][hole] = tex.normal[hole]
        mask |= m
    if warn:
        logger.warning("seed %d: placed %d of the requested defects", config.seed, len(paths))

    image = apply_lighting(albedo, normals, config)
    if config.sensor_noise_std > 0:
        image = np.clip(image + rng.normal(0.0, config.sensor_noise_std, image.shape), 0.0, 1.0)
    meta = {
        "seed": int(config.seed),
        "condition": config.condition,
        "defect_count": len(paths),
        "crack_pixel_fraction": float(np.count_nonzero(mask)) / mask.size,
        "placement_warning": bool(warn),
    }
    return Sample(image=image, mask=mask, meta=meta, defects=paths)


def _render_one(config: SceneConfig, index: int, master_seed: int, root: str) -> dict:
    seed = derive_seed(master_seed, index)
    sample = compose_scene(replace(config, seed=seed))
    name = f"{index:06d}"
    image_rel = f"images/{name}.png"
    mask_rel = f"masks/{name}.png"
    datasetio.save_image(os.path.join(root, image_rel), sample.image)
    datasetio.save_mask(os.path.join(root, mask_rel), sample.mask)
    return dict(id=name, image_path=image_rel, mask_path=mask_rel, meta=sample.meta)


def generate_dataset(
    config: SceneConfig,
    count: int,
    master_seed: int,
    out_dir,
    workers: int = 1,
    train_fraction: float = 0.8,
) -> datasetio.Manifest:
    """Render ``count`` scenes to ``out_dir`` and write the manifest.

    Sample ``i`` uses ``derive_seed(master_seed, i)``, so the files do not
    depend on ``workers`` or on scheduling. Raises :class:`DatasetIOError`
    listing the completed indices if any sample fails to write.
    """
    if count < 1:
        raise ParameterError(f"count must be >= 1, got {count}")
    config.validate()
    root = Path(out_dir)
    try:
        (root / "images").mkdir(parents=True, exist_ok=True)
        (root / "masks").mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise DatasetIOError(f"cannot create {root}: {exc}") from exc

    results: dict[int, dict] = {}
    failure = None
    if workers <= 1:
        for i in range(count):
            try:
                results[i] = _render_one(config, i, master_seed, str(root))
            except OSError as exc:
                failure = (i, exc)
                break
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {pool.submit(_render_one, config, i, master_seed, str(root)): i for i in range(count)}
            for fut in as_completed(futures):
                i = futures[fut]
                try:
                    results[i] = fut.result()
                except OSError as exc:
                    failure = failure or (i, exc)
    if failure is not None:
        i, exc = failure
        raise DatasetIOError(f"sample {i} failed: {exc}", completed=sorted(results))

    entries = [
        datasetio.ManifestEntry(source="synthetic", split="train", **results[i]) for i in range(count)
    ]
    header = {
        "format_version": datasetio.FORMAT_VERSION,
        "master_seed": int(master_seed),
        "config_hash": config.digest(),
        "count": int(count),
        "config": config.to_dict(),
    }
    manifest = datasetio.Manifest(entries, header, root)
    if count >= 2:
        manifest = datasetio.split(manifest, train_fraction, master_seed)
    datasetio.write_manifest(manifest, root)
    return manifest
