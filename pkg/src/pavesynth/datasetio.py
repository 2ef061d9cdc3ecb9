"""Dataset persistence, manifests, splitting, cropping and padding.

On-disk layout::

    <root>/header.json        format_version, master_seed, config hash, ...
    <root>/manifest.jsonl     one entry per line
    <root>/images/<id>.png    8-bit RGB
    <root>/masks/<id>.png     8-bit gray, 0 = background, 255 = defect

Predictions are 16-bit single-channel PNGs holding ``round(p * 65535)``.
"""

from __future__ import annotations

import json
import logging
import warnings
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any

import numpy as np
from PIL import Image

from .errors import DatasetIOError, ParameterError
from .sample import Sample

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
SPLITS = ("train", "val")
MASK_THRESHOLD = 128
IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff")


class UnmatchedFilesWarning(UserWarning):
    """Some files had no partner during import."""


@dataclass
class ManifestEntry:
    id: str
    image_path: str
    mask_path: str
    split: str = "train"
    source: str = "synthetic"
    meta: dict[str, Any] = field(default_factory=dict)


@dataclass
class Manifest:
    entries: list[ManifestEntry]
    header: dict[str, Any] = field(default_factory=dict)
    root: Path | None = None

    def __post_init__(self):
        self.header.setdefault("format_version", FORMAT_VERSION)

    def __len__(self):
        return len(self.entries)

    def ids(self) -> list[str]:
        return [e.id for e in self.entries]

    def resolve(self, path: str) -> Path:
        p = Path(path)
        if p.is_absolute() or self.root is None:
            return p
        return self.root / p

    def validate(self, check_paths: bool = True) -> None:
        seen = set()
        for e in self.entries:
            if e.id in seen:
                raise ParameterError(f"duplicate manifest id {e.id!r}")
            seen.add(e.id)
            if e.split not in SPLITS:
                raise ParameterError(f"entry {e.id!r} has invalid split {e.split!r}")
            if check_paths:
                for p in (e.image_path, e.mask_path):
                    if not self.resolve(p).exists():
                        raise DatasetIOError(f"entry {e.id!r}: missing file {p}")

    def load_sample(self, entry: ManifestEntry) -> Sample:
        image = load_image(self.resolve(entry.image_path))
        mask = load_mask(self.resolve(entry.mask_path))
        return Sample(image, mask, dict(entry.meta, id=entry.id))


def manifest_path(path) -> Path:
    """Accept either a dataset root or the manifest file itself."""
    p = Path(path)
    return p / "manifest.jsonl" if p.is_dir() else p


def write_manifest(manifest: Manifest, root) -> Path:
    root = Path(root)
    manifest = replace(manifest, root=root)
    manifest.validate()
    root.mkdir(parents=True, exist_ok=True)
    (root / "header.json").write_text(json.dumps(manifest.header, indent=2, sort_keys=True) + "\n")
    path = root / "manifest.jsonl"
    with open(path, "w") as fh:
        for e in manifest.entries:
            fh.write(json.dumps(asdict(e), sort_keys=True) + "\n")
    return path


def read_manifest(path) -> Manifest:
    path = manifest_path(path)
    root = path.parent
    try:
        header_file = root / "header.json"
        header = json.loads(header_file.read_text()) if header_file.exists() else {}
        with open(path) as fh:
            entries = [ManifestEntry(**json.loads(line)) for line in fh if line.strip()]
    except OSError as exc:
        raise DatasetIOError(f"cannot read manifest {path}: {exc}") from exc
    return Manifest(entries, header, root)


# ---------------------------------------------------------------------------
# raster files


def _to_uint8(x):
    return np.round(np.clip(x, 0.0, 1.0) * 255).astype(np.uint8)


def _parent(path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def save_image(path, image: np.ndarray) -> None:
    # sensor noise makes images nearly incompressible; level 1 is ~3x faster than 6
    Image.fromarray(_to_uint8(image)).save(_parent(path), format="PNG", compress_level=1)


def load_image(path) -> np.ndarray:
    with Image.open(path) as im:
        return np.asarray(im.convert("RGB"), dtype=np.float64) / 255.0


def save_mask(path, mask: np.ndarray) -> None:
    Image.fromarray((np.asarray(mask) > 0).astype(np.uint8) * 255).save(_parent(path), format="PNG")


def load_mask(path) -> np.ndarray:
    """Load a mask and binarize it at 128, whatever the source encoding."""
    with Image.open(path) as im:
        if im.mode in ("I;16", "I;16B", "I"):
            arr = np.asarray(im, dtype=np.float64) / 257.0
        else:
            arr = np.asarray(im.convert("L"))
    return (arr >= MASK_THRESHOLD).astype(np.uint8)


def save_probability(path, prob: np.ndarray) -> None:
    q = np.round(np.clip(prob, 0.0, 1.0) * 65535).astype(np.uint16)
    Image.fromarray(q).save(_parent(path), format="PNG")


def load_probability(path) -> np.ndarray:
    with Image.open(path) as im:
        if im.mode not in ("I;16", "I;16B", "I", "L"):
            raise DatasetIOError(f"{path}: expected a single-channel image, got mode {im.mode}")
        arr = np.asarray(im, dtype=np.float64)
        scale = 255.0 if im.mode == "L" else 65535.0
    return arr / scale


# ---------------------------------------------------------------------------
# dataset operations


def split(manifest: Manifest, train_fraction: float, seed: int) -> Manifest:
    """Assign exactly ``round(N * train_fraction)`` entries to ``train``.

    The partition depends only on the set of ids and the seed, not on the
    entry order.
    """
    if not 0 < train_fraction < 1:
        raise ParameterError(f"train_fraction must be in (0, 1), got {train_fraction}")
    n = len(manifest.entries)
    if n < 2:
        raise ParameterError(f"need at least 2 entries to split, got {n}")
    n_train = int(round(n * train_fraction))
    ids = sorted(manifest.ids())
    order = np.random.default_rng(int(seed) & (2**64 - 1)).permutation(n)
    train = {ids[k] for k in order[:n_train]}
    entries = [replace(e, split="train" if e.id in train else "val") for e in manifest.entries]
    header = dict(manifest.header, split_seed=int(seed), train_fraction=float(train_fraction))
    return Manifest(entries, header, manifest.root)


def crop_sample(sample: Sample, size: int = 320, seed: int = 0) -> Sample:
    """Random ``size`` x ``size`` window, identical for image and mask."""
    h, w = sample.shape
    if h < size or w < size:
        raise ParameterError(f"sample {h}x{w} is smaller than crop {size}; pad it first")
    rng = np.random.default_rng(int(seed) & (2**64 - 1))
    top = int(rng.integers(0, h - size + 1))
    left = int(rng.integers(0, w - size + 1))
    win = (slice(top, top + size), slice(left, left + size))
    out = sample.with_arrays(sample.image[win].copy(), sample.mask[win].copy())
    out.meta["crop_offset"] = [top, left]
    return out


def pad_to_multiple(sample: Sample, multiple: int, fill: float | None = None):
    """Pad right and bottom up to the next multiple of ``multiple``.

    The image is edge-replicated unless ``fill`` is given; the mask is padded
    with zeros. Returns the padded sample and the original ``(H, W)``.
    """
    if int(multiple) != multiple or multiple < 1:
        raise ParameterError(f"multiple must be a positive integer, got {multiple}")
    h, w = sample.shape
    ph = -h % multiple
    pw = -w % multiple
    if ph == 0 and pw == 0:
        return sample.with_arrays(sample.image.copy(), sample.mask.copy()), (h, w)
    pads = ((0, ph), (0, pw))
    if fill is None:
        image = np.pad(sample.image, pads + ((0, 0),), mode="edge")
    else:
        image = np.pad(sample.image, pads + ((0, 0),), mode="constant", constant_values=fill)
    mask = np.pad(sample.mask, pads, mode="constant", constant_values=0)
    return sample.with_arrays(image, mask), (h, w)


def unpad(array_or_sample, dims):
    """Undo :func:`pad_to_multiple` on a sample or a prediction raster."""
    h, w = dims
    if isinstance(array_or_sample, Sample):
        s = array_or_sample
        return s.with_arrays(s.image[:h, :w].copy(), s.mask[:h, :w].copy())
    return array_or_sample[:h, :w]


def _stems(directory: Path) -> dict[str, Path]:
    out = {}
    for p in sorted(directory.iterdir()):
        if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES:
            out.setdefault(p.stem, p)
    return out


def import_external(images_dir, masks_dir, source: str | None = None) -> Manifest:
    """Pair images and masks by filename stem into a manifest sorted by id."""
    images_dir = Path(images_dir)
    masks_dir = Path(masks_dir)
    for d in (images_dir, masks_dir):
        if not d.is_dir():
            raise DatasetIOError(f"not a directory: {d}")
    images = _stems(images_dir)
    masks = _stems(masks_dir)
    matched = sorted(images.keys() & masks.keys())
    orphans = sorted(str(images[k]) for k in images.keys() - masks.keys())
    orphans += sorted(str(masks[k]) for k in masks.keys() - images.keys())
    if orphans:
        warnings.warn(f"unmatched files: {', '.join(orphans)}", UnmatchedFilesWarning, stacklevel=2)
    if not matched:
        raise DatasetIOError(f"no image/mask pairs found in {images_dir} and {masks_dir}")
    source = source or images_dir.resolve().parent.name or images_dir.name
    entries = [
        ManifestEntry(
            id=k,
            image_path=str(images[k].resolve()),
            mask_path=str(masks[k].resolve()),
            split="train",
            source=source,
        )
        for k in matched
    ]
    header = {"format_version": FORMAT_VERSION, "source": source, "unmatched": orphans}
    return Manifest(entries, header)
