"""Joint image/mask augmentation.

Images are resampled bilinearly, masks with nearest neighbour and then
re-binarized, so a mask never acquires fractional values. The pipeline runs
geometric -> elastic -> photometric -> motion blur, each stage gated by its
own probability and driven by a single seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage
from skimage import color

from .errors import ParameterError
from .sample import Sample


def _binarize(mask):
    return (mask > 0.5).astype(np.uint8)


def _per_channel(fn, image):
    return np.stack([fn(image[:, :, c]) for c in range(image.shape[2])], axis=-1)


# ---------------------------------------------------------------------------
# geometric


def flip_h(sample: Sample) -> Sample:
    return sample.with_arrays(sample.image[:, ::-1].copy(), sample.mask[:, ::-1].copy())


def flip_v(sample: Sample) -> Sample:
    return sample.with_arrays(sample.image[::-1].copy(), sample.mask[::-1].copy())


def _warp(sample: Sample, matrix: np.ndarray | None = None, displacement=None) -> Sample:
    """Resample once with ``out(q) = in(matrix @ (clip(q + d(q)) - c) + c)``.

    ``d`` is an optional elastic field whose out-of-range targets replicate
    the border; ``matrix`` is an optional affine about the center ``c``.
    Image samples outside the input replicate the border, mask samples there
    are background. One resampling step keeps image and mask boundaries
    within a pixel of each other however many transforms are composed.
    """
    h, w = sample.shape
    rows, cols = np.meshgrid(np.arange(h, dtype=np.float64), np.arange(w, dtype=np.float64), indexing="ij")
    if displacement is not None:
        dy, dx = displacement
        rows = np.clip(rows + dy, 0, h - 1)
        cols = np.clip(cols + dx, 0, w - 1)
    if matrix is not None:
        cy, cx = (h - 1) / 2, (w - 1) / 2
        y, x = rows - cy, cols - cx
        rows = matrix[0, 0] * y + matrix[0, 1] * x + cy
        cols = matrix[1, 0] * y + matrix[1, 1] * x + cx
    coords = np.array([rows, cols])
    image = _per_channel(
        lambda ch: ndimage.map_coordinates(ch, coords, order=1, mode="nearest"), sample.image
    )
    mask = ndimage.map_coordinates(
        sample.mask.astype(np.float64), coords, order=0, mode="constant", cval=0.0
    )
    return sample.with_arrays(np.clip(image, 0.0, 1.0), _binarize(mask))


def _rotation_matrix(degrees: float) -> np.ndarray:
    theta = math.radians(degrees)
    c, s = math.cos(theta), math.sin(theta)
    # (row, col) coordinates, rows pointing down
    return np.array([[c, -s], [s, c]])


def rotate(sample: Sample, degrees: float) -> Sample:
    """Rotate counter-clockwise about the image center, same output size."""
    quarter = degrees / 90.0
    if quarter == round(quarter):
        k = int(round(quarter)) % 4
        if k == 0:
            return sample.with_arrays(sample.image.copy(), sample.mask.copy())
        h, w = sample.shape
        if k == 2 or h == w:
            return sample.with_arrays(
                np.rot90(sample.image, k).copy(), np.rot90(sample.mask, k).copy()
            )
    return _warp(sample, _rotation_matrix(degrees))


def scale(sample: Sample, factor: float) -> Sample:
    """Zoom about the center by ``factor``; crops or pads to keep the size."""
    if not factor > 0:
        raise ParameterError(f"scale factor must be > 0, got {factor}")
    if factor == 1:
        return sample.with_arrays(sample.image.copy(), sample.mask.copy())
    return _warp(sample, np.eye(2) / factor)


def geometric(sample: Sample, op: str, value: float | None = None) -> Sample:
    """Apply one of ``flip_h``, ``flip_v``, ``rotate`` (degrees) or ``scale``."""
    if op == "flip_h":
        return flip_h(sample)
    if op == "flip_v":
        return flip_v(sample)
    if op == "rotate":
        return rotate(sample, 0.0 if value is None else value)
    if op == "scale":
        return scale(sample, 1.0 if value is None else value)
    raise ParameterError(f"unknown geometric op {op!r}")


# ---------------------------------------------------------------------------
# elastic


def displacement_fields(shape, alpha, sigma, rng):
    """Smoothed uniform(-1, 1) noise, Gaussian std ``sigma`` truncated at 3 sigma."""
    fields = []
    for _ in range(2):
        raw = rng.uniform(-1.0, 1.0, size=shape)
        fields.append(alpha * ndimage.gaussian_filter(raw, sigma, truncate=3.0, mode="reflect"))
    return fields


def elastic(sample: Sample, alpha: float, sigma: float, seed: int) -> Sample:
    """Elastic deformation with random smooth displacement fields.

    Out-of-range samples replicate the border for both image and mask.
    """
    if alpha < 0:
        raise ParameterError(f"alpha must be >= 0, got {alpha}")
    if not sigma > 0:
        raise ParameterError(f"sigma must be > 0, got {sigma}")
    if alpha == 0:
        return sample.with_arrays(sample.image.copy(), sample.mask.copy())
    rng = np.random.default_rng(int(seed) & (2**64 - 1))
    return _warp(sample, displacement=displacement_fields(sample.shape, alpha, sigma, rng))


# ---------------------------------------------------------------------------
# photometric


@dataclass(frozen=True)
class PhotometricParams:
    brightness: float = 0.0
    contrast: float = 1.0
    gamma: float = 1.0
    hue_deg: float = 0.0
    sharpen: float = 0.0  # unsharp-mask amount
    sharpen_sigma: float = 1.0
    blur_sigma: float = 0.0


def photometric(image: np.ndarray, params: PhotometricParams) -> np.ndarray:
    """Brightness, contrast, gamma, hue, sharpen and blur, in that order."""
    out = np.asarray(image, dtype=np.float64)
    if params.brightness != 0:
        out = out + params.brightness
    if params.contrast != 1:
        mean = out.mean()
        out = mean + params.contrast * (out - mean)
    if params.gamma != 1:
        if not params.gamma > 0:
            raise ParameterError(f"gamma must be > 0, got {params.gamma}")
        out = np.clip(out, 0.0, 1.0) ** params.gamma
    if params.hue_deg != 0:
        hsv = color.rgb2hsv(np.clip(out, 0.0, 1.0))
        hsv[..., 0] = (hsv[..., 0] + params.hue_deg / 360.0) % 1.0
        out = color.hsv2rgb(hsv)
    if params.sharpen > 0:
        blurred = _per_channel(lambda ch: ndimage.gaussian_filter(ch, params.sharpen_sigma), out)
        out = out + params.sharpen * (out - blurred)
    if params.blur_sigma > 0:
        out = _per_channel(lambda ch: ndimage.gaussian_filter(ch, params.blur_sigma), out)
    return np.clip(out, 0.0, 1.0)


# ---------------------------------------------------------------------------
# motion blur


def motion_kernel(length: int, angle: float) -> np.ndarray:
    """Normalized 1-px line of ``length`` pixels at ``angle`` radians.

    Angle 0 is horizontal; positive angles turn counter-clockwise as seen in
    an image with rows pointing down.
    """
    length = int(length)
    if length < 1:
        raise ParameterError(f"motion blur length must be >= 1, got {length}")
    if length == 1:
        return np.ones((1, 1))
    half = (length - 1) / 2
    t = np.linspace(-half, half, 8 * length)
    cols = np.floor(t * math.cos(angle) + 0.5).astype(int)
    rows = np.floor(-t * math.sin(angle) + 0.5).astype(int)
    cells = set(zip(rows.tolist(), cols.tolist()))
    radius = max(max(abs(r), abs(c)) for r, c in cells)
    k = np.zeros((2 * radius + 1, 2 * radius + 1))
    for r, c in cells:
        k[r + radius, c + radius] = 1.0
    return k / k.sum()


def motion_blur(image: np.ndarray, length: int, angle: float) -> np.ndarray:
    kernel = motion_kernel(length, angle)
    if kernel.shape == (1, 1):
        return np.array(image, dtype=np.float64, copy=True)
    return _per_channel(lambda ch: ndimage.convolve(ch, kernel, mode="nearest"), image)


# ---------------------------------------------------------------------------
# pipeline


@dataclass(frozen=True)
class AugmentConfig:
    p_flip_h: float = 0.5
    p_flip_v: float = 0.5
    p_rotate: float = 0.5
    rotation_deg: tuple[float, float] = (-180.0, 180.0)
    p_scale: float = 0.3
    scale_range: tuple[float, float] = (0.8, 1.25)
    p_elastic: float = 0.3
    elastic_alpha: float = 30.0
    elastic_sigma: float = 6.0
    p_photometric: float = 0.8
    brightness: tuple[float, float] = (-0.1, 0.1)
    contrast: tuple[float, float] = (0.8, 1.2)
    gamma: tuple[float, float] = (0.8, 1.25)
    hue_deg: tuple[float, float] = (-18.0, 18.0)
    p_sharpen: float = 0.2
    sharpen_amount: tuple[float, float] = (0.3, 1.0)
    p_blur: float = 0.2
    blur_sigma: tuple[float, float] = (0.5, 1.5)
    p_motion_blur: float = 0.3
    motion_length: tuple[int, int] = (3, 15)
    motion_angle: tuple[float, float] = (0.0, math.pi)

    def validate(self) -> None:
        for name in (
            "p_flip_h", "p_flip_v", "p_rotate", "p_scale", "p_elastic",
            "p_photometric", "p_sharpen", "p_blur", "p_motion_blur",
        ):
            p = getattr(self, name)
            if not 0 <= p <= 1:
                raise ParameterError(f"{name} must be in [0, 1], got {p}")
        if not self.elastic_sigma > 0:
            raise ParameterError(f"elastic_sigma must be > 0, got {self.elastic_sigma}")
        if self.elastic_alpha < 0:
            raise ParameterError(f"elastic_alpha must be >= 0, got {self.elastic_alpha}")
        if not 0 < self.scale_range[0] <= self.scale_range[1]:
            raise ParameterError(f"scale_range must be positive and ordered, got {self.scale_range}")
        if not 0 < self.gamma[0] <= self.gamma[1]:
            raise ParameterError(f"gamma range must be positive and ordered, got {self.gamma}")
        if not 1 <= self.motion_length[0] <= self.motion_length[1]:
            raise ParameterError(f"motion_length must satisfy 1 <= min <= max, got {self.motion_length}")

    @classmethod
    def identity(cls) -> "AugmentConfig":
        """Every stage disabled."""
        return cls(
            p_flip_h=0, p_flip_v=0, p_rotate=0, p_scale=0, p_elastic=0,
            p_photometric=0, p_sharpen=0, p_blur=0, p_motion_blur=0,
        )

    @classmethod
    def from_dict(cls, d: dict) -> "AugmentConfig":
        d = {k: tuple(v) if isinstance(v, list) else v for k, v in d.items()}
        return cls(**d)


def augment_pipeline(sample: Sample, config: AugmentConfig, seed: int) -> Sample:
    """Random augmentation, deterministic in ``(sample, config, seed)``."""
    config.validate()
    rng = np.random.default_rng(np.random.SeedSequence(int(seed) & (2**64 - 1)))
    out = sample.with_arrays(sample.image, sample.mask)

    if rng.random() < config.p_flip_h:
        out = flip_h(out)
    if rng.random() < config.p_flip_v:
        out = flip_v(out)
    # rotate, scale and elastic are composed and resampled in one step
    matrix = np.eye(2)
    if rng.random() < config.p_rotate:
        matrix = matrix @ _rotation_matrix(rng.uniform(*config.rotation_deg))
    if rng.random() < config.p_scale:
        matrix = matrix / rng.uniform(*config.scale_range)
    displacement = None
    if rng.random() < config.p_elastic:
        field_rng = np.random.default_rng(int(rng.integers(0, 2**63)))
        displacement = displacement_fields(
            out.shape, config.elastic_alpha, config.elastic_sigma, field_rng
        )
    affine = None if np.array_equal(matrix, np.eye(2)) else matrix
    if affine is not None or displacement is not None:
        out = _warp(out, affine, displacement)

    if rng.random() < config.p_photometric:
        params = PhotometricParams(
            brightness=rng.uniform(*config.brightness),
            contrast=rng.uniform(*config.contrast),
            gamma=rng.uniform(*config.gamma),
            hue_deg=rng.uniform(*config.hue_deg),
            sharpen=rng.uniform(*config.sharpen_amount) if rng.random() < config.p_sharpen else 0.0,
            blur_sigma=rng.uniform(*config.blur_sigma) if rng.random() < config.p_blur else 0.0,
        )
        out = out.with_arrays(photometric(out.image, params), out.mask)
    if rng.random() < config.p_motion_blur:
        length = int(rng.integers(config.motion_length[0], config.motion_length[1] + 1))
        out = out.with_arrays(motion_blur(out.image, length, rng.uniform(*config.motion_angle)), out.mask)
    return out
