"""Concrete tile textures and per-defect texture triplets."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import ParameterError

NOISE_OCTAVES = 3
NOISE_PERSISTENCE = 0.5
# relative albedo of the joint between tiles
SEAM_DARKENING = 0.6
# crack depth relief saturates this many pixels inside the opacity mask
DEPTH_CLAMP_PX = 3.0
NORMAL_STRENGTH = 1.0


def _fade(t):
    return t * t * t * (t * (t * 6 - 15) + 10)


def _interp_matrix(n, cell):
    """Weights mapping a lattice of spacing ``cell`` px onto ``n`` samples."""
    coords = np.arange(n) / cell
    lo = np.floor(coords).astype(int)
    frac = _fade(coords - lo)
    m = np.zeros((n, lo[-1] + 2))
    rows = np.arange(n)
    m[rows, lo] = 1 - frac
    m[rows, lo + 1] += frac
    return m


def value_noise(shape, cell, rng):
    """Smooth value noise in [0, 1] with lattice spacing ``cell`` pixels.

    Lattice values are blended with quintic fade weights; the blend is
    separable, so it is evaluated as ``Wy @ lattice @ Wx.T``.
    """
    h, w = shape
    cell = max(float(cell), 1.0)
    wy = _interp_matrix(h, cell)
    wx = _interp_matrix(w, cell)
    lattice = rng.random((wy.shape[1], wx.shape[1]))
    return wy @ lattice @ wx.T


def fbm(shape, base_cell, rng, octaves=NOISE_OCTAVES, persistence=NOISE_PERSISTENCE):
    """Octave sum of value noise, standardized to zero mean and unit std."""
    total = np.zeros(shape)
    amp = 1.0
    cell = base_cell
    for _ in range(octaves):
        total += amp * value_noise(shape, cell, rng)
        amp *= persistence
        cell /= 2
    std = total.std()
    if std == 0:
        return total - total.mean()
    return (total - total.mean()) / std


@dataclass(frozen=True)
class TileSpec:
    size_m: float = 5.0
    resolution_px: int = 500
    base_gray: float = 0.55
    noise_amplitude: float = 0.08
    joint_width_m: float = 0.03
    seed: int = 0

    def validate(self) -> None:
        if not self.size_m > 0:
            raise ParameterError(f"size_m must be > 0, got {self.size_m}")
        if int(self.resolution_px) != self.resolution_px or self.resolution_px < 16:
            raise ParameterError(f"resolution_px must be an integer >= 16, got {self.resolution_px}")
        if not 0 < self.base_gray < 1:
            raise ParameterError(f"base_gray must be in (0, 1), got {self.base_gray}")
        if not self.noise_amplitude >= 0:
            raise ParameterError(f"noise_amplitude must be >= 0, got {self.noise_amplitude}")
        if not self.joint_width_m >= 0:
            raise ParameterError(f"joint_width_m must be >= 0, got {self.joint_width_m}")

    def seam_mask(self) -> np.ndarray:
        """Boolean ``(n, n)`` mask of pixels whose center lies within the joint."""
        n = int(self.resolution_px)
        centers = (np.arange(n) + 0.5) * (self.size_m / n)
        edge = np.minimum(centers, self.size_m - centers)
        near = edge < self.joint_width_m
        return near[:, None] | near[None, :]


def synthesize_tile(spec: TileSpec) -> np.ndarray:
    """Render one concrete tile as an ``(n, n, 3)`` albedo raster in [0, 1].

    Albedo is ``base_gray * (1 + noise_amplitude * z)`` where ``z`` is a
    standardized 3-octave value-noise field, then darkened along the joint.
    """
    spec.validate()
    n = int(spec.resolution_px)
    gray = np.full((n, n), spec.base_gray)
    if spec.noise_amplitude > 0:
        rng = np.random.default_rng(np.random.SeedSequence(int(spec.seed) & (2**64 - 1)))
        z = fbm((n, n), n / 8, rng)
        gray = spec.base_gray * (1.0 + spec.noise_amplitude * z)
    if spec.joint_width_m > 0:
        gray = np.where(spec.seam_mask(), gray * SEAM_DARKENING, gray)
    return np.repeat(np.clip(gray, 0.0, 1.0)[:, :, None], 3, axis=2)


def normal_from_gradient(height_proxy: np.ndarray, strength: float = NORMAL_STRENGTH) -> np.ndarray:
    """Tangent-space normal map of a height field, encoded as ``(n + 1) / 2``.

    Gradients are central differences in the interior and one-sided at the
    borders; the normal is ``normalize(-strength*gx, -strength*gy, 1)`` with
    ``gx`` along columns and ``gy`` along rows.
    """
    h = np.asarray(height_proxy, dtype=np.float64)
    if h.ndim != 2 or h.size == 0:
        raise ParameterError("height_proxy must be a nonempty 2-D raster")
    if not strength > 0:
        raise ParameterError(f"strength must be > 0, got {strength}")
    gy, gx = np.gradient(h) if min(h.shape) > 1 else _gradient_thin(h)
    n = np.stack([-strength * gx, -strength * gy, np.ones_like(h)], axis=-1)
    n /= np.linalg.norm(n, axis=-1, keepdims=True)
    return (n + 1.0) / 2.0


def _gradient_thin(h):
    gy = np.gradient(h, axis=0) if h.shape[0] > 1 else np.zeros_like(h)
    gx = np.gradient(h, axis=1) if h.shape[1] > 1 else np.zeros_like(h)
    return gy, gx


def decode_normals(encoded: np.ndarray) -> np.ndarray:
    return encoded * 2.0 - 1.0


@dataclass
class DefectTexture:
    rgb: np.ndarray
    normal: np.ndarray
    opacity: np.ndarray

    def __post_init__(self):
        shape = self.opacity.shape
        if self.rgb.shape[:2] != shape or self.normal.shape[:2] != shape:
            raise ParameterError("rgb, normal and opacity must share dimensions")


def crack_height(opacity: np.ndarray, darkening: float) -> np.ndarray:
    """Height proxy: depth into the crack, clamped at a few pixels.

    Pixels outside the raster count as intact surface, so a crack touching
    the raster edge still gets a rim there.
    """
    padded = np.pad(opacity.astype(bool), 1)
    depth = ndimage.distance_transform_edt(padded)[1:-1, 1:-1]
    return -darkening * np.minimum(depth, DEPTH_CLAMP_PX) / DEPTH_CLAMP_PX


def assemble_defect(
    opacity: np.ndarray,
    seed: int,
    darkening: float = 0.45,
    base_gray: float = 0.55,
    noise: float = 0.3,
    strength: float = NORMAL_STRENGTH,
) -> DefectTexture:
    """Build the RGB / normal / opacity triplet for one crack.

    The crack interior albedo is ``base_gray * darkening * (1 - noise * u)``
    with ``u`` smooth value noise in [0, 1], so it never exceeds ``darkening``
    times the surrounding concrete. Normals come from the depth relief of the
    opacity mask.
    """
    opacity = np.asarray(opacity)
    if not np.isin(opacity, (0, 1)).all():
        raise ParameterError("opacity must be binary")
    if not opacity.any():
        raise ParameterError("opacity is empty; a defect must cover at least one pixel")
    if not 0 < darkening <= 1:
        raise ParameterError(f"darkening must be in (0, 1], got {darkening}")
    if not 0 <= noise <= 1:
        raise ParameterError(f"noise must be in [0, 1], got {noise}")
    opacity = opacity.astype(np.uint8)
    shape = opacity.shape
    gray = np.full(shape, base_gray * darkening)
    if noise > 0:
        rng = np.random.default_rng(np.random.SeedSequence(int(seed) & (2**64 - 1)))
        u = value_noise(shape, 4.0, rng)
        gray = gray * (1.0 - noise * u)
    rgb = np.repeat(gray[:, :, None], 3, axis=2)
    normal = normal_from_gradient(crack_height(opacity, darkening), strength)
    return DefectTexture(rgb=rgb, normal=normal, opacity=opacity)
