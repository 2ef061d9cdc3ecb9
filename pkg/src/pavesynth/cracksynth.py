"""Procedural crack skeletons and their binary rasterization.

Cracks are grown as a heading random walk in metric, tile-local coordinates
(x to the right, y downwards, matching image columns and rows). Widths are
stored per vertex and interpolated linearly along each segment, so a crack
is a chain of tapered capsules.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError

BRANCH_ANGLE_RANGE = (math.radians(20.0), math.radians(70.0))
# fraction of the remaining budget handed to a new branch
_BRANCH_SHARE = (0.15, 0.4)
# vertices over which widths ramp down to width_min at each tip
_TAPER_VERTICES = 4


@dataclass(frozen=True)
class CrackParams:
    step_length_m: float = 0.05
    heading_jitter_rad: float = 0.15
    width_range_m: tuple[float, float] = (0.03, 0.10)
    width_jitter: float = 0.25
    branch_prob: float = 0.02
    max_branch_depth: int = 2
    target_length_m: float = 3.0

    def validate(self) -> None:
        wmin, wmax = self.width_range_m
        if not self.step_length_m > 0:
            raise ParameterError(f"step_length_m must be > 0, got {self.step_length_m}")
        if not self.heading_jitter_rad >= 0:
            raise ParameterError(
                f"heading_jitter_rad must be >= 0, got {self.heading_jitter_rad}"
            )
        if not 0 < wmin <= wmax:
            raise ParameterError(
                f"width_range_m must satisfy 0 < min <= max, got {self.width_range_m}"
            )
        if not self.width_jitter >= 0:
            raise ParameterError(f"width_jitter must be >= 0, got {self.width_jitter}")
        if not 0 <= self.branch_prob < 1:
            raise ParameterError(f"branch_prob must be in [0, 1), got {self.branch_prob}")
        if int(self.max_branch_depth) != self.max_branch_depth or self.max_branch_depth < 0:
            raise ParameterError(
                f"max_branch_depth must be a non-negative integer, got {self.max_branch_depth}"
            )
        if not self.target_length_m > 0:
            raise ParameterError(f"target_length_m must be > 0, got {self.target_length_m}")

    def scaled(self, k: float) -> "CrackParams":
        """Same crack statistics with every metric quantity multiplied by ``k``."""
        wmin, wmax = self.width_range_m
        return CrackParams(
            step_length_m=self.step_length_m * k,
            heading_jitter_rad=self.heading_jitter_rad,
            width_range_m=(wmin * k, wmax * k),
            width_jitter=self.width_jitter,
            branch_prob=self.branch_prob,
            max_branch_depth=self.max_branch_depth,
            target_length_m=self.target_length_m * k,
        )


@dataclass
class CrackPath:
    """A crack skeleton.

    ``vertices`` is ``(n, 2)`` in meters, ``widths`` is ``(n,)`` in meters.
    Each branch is paired with the index of the parent vertex it grows from.
    """

    vertices: np.ndarray
    widths: np.ndarray
    branches: list[tuple[int, "CrackPath"]] = field(default_factory=list)

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=np.float64).reshape(-1, 2)
        self.widths = np.asarray(self.widths, dtype=np.float64).reshape(-1)
        if len(self.vertices) < 2:
            raise ParameterError("a crack path needs at least 2 vertices")
        if len(self.widths) != len(self.vertices):
            raise ParameterError("widths must have one entry per vertex")
        if not np.all(self.widths > 0):
            raise ParameterError("all widths must be > 0")
        for index, _ in self.branches:
            if not 0 <= index < len(self.vertices):
                raise ParameterError(f"branch attachment index {index} out of range")

    def own_length(self) -> float:
        return float(np.sum(np.hypot(*np.diff(self.vertices, axis=0).T)))

    def total_length(self) -> float:
        return self.own_length() + sum(b.total_length() for _, b in self.branches)

    def depth(self) -> int:
        return 1 + max((b.depth() for _, b in self.branches), default=0) if self.branches else 0

    def walk(self):
        """Yield this path and every descendant branch, depth first."""
        yield self
        for _, branch in self.branches:
            yield from branch.walk()

    def translated(self, offset) -> "CrackPath":
        return CrackPath(
            self.vertices + np.asarray(offset, dtype=np.float64),
            self.widths.copy(),
            [(i, b.translated(offset)) for i, b in self.branches],
        )

    def bounds(self) -> tuple[float, float, float, float]:
        """(xmin, ymin, xmax, ymax) of all capsules including their radius."""
        lo = np.full(2, np.inf)
        hi = np.full(2, -np.inf)
        for p in self.walk():
            r = p.widths[:, None] / 2
            lo = np.minimum(lo, (p.vertices - r).min(axis=0))
            hi = np.maximum(hi, (p.vertices + r).max(axis=0))
        return lo[0], lo[1], hi[0], hi[1]

    def __eq__(self, other):
        if not isinstance(other, CrackPath):
            return NotImplemented
        return (
            np.array_equal(self.vertices, other.vertices)
            and np.array_equal(self.widths, other.widths)
            and len(self.branches) == len(other.branches)
            and all(i == j and a == b for (i, a), (j, b) in zip(self.branches, other.branches))
        )


def _grow(rng, params, start, heading, length, depth):
    wmin, wmax = params.width_range_m
    base_width = rng.uniform(wmin, wmax)
    points = [np.asarray(start, dtype=np.float64)]
    pending = []
    remaining = float(length)
    while remaining > 0:
        step = min(params.step_length_m, remaining)
        remaining -= step
        heading += rng.normal(0.0, params.heading_jitter_rad) if params.heading_jitter_rad else 0.0
        x, y = points[-1]
        points.append(np.array([x + step * math.cos(heading), y + step * math.sin(heading)]))
        if (
            remaining > 2 * params.step_length_m
            and depth < params.max_branch_depth
            and params.branch_prob > 0
            and rng.random() < params.branch_prob
        ):
            share = remaining * rng.uniform(*_BRANCH_SHARE)
            remaining -= share
            turn = rng.uniform(*BRANCH_ANGLE_RANGE) * (1 if rng.random() < 0.5 else -1)
            pending.append((len(points) - 1, heading + turn, share))

    n = len(points)
    if params.width_jitter > 0:
        widths = base_width * (1.0 + params.width_jitter * rng.standard_normal(n))
        widths = np.clip(widths, wmin, wmax)
        ramp = np.minimum(np.arange(n), np.arange(n)[::-1]) / _TAPER_VERTICES
        ramp = np.clip(ramp, 0.0, 1.0)
        widths = wmin + (widths - wmin) * ramp
    else:
        widths = np.full(n, base_width)

    branches = [
        (index, _grow(rng, params, points[index], h, share, depth + 1))
        for index, h, share in pending
    ]
    return CrackPath(np.array(points), widths, branches)


def generate_crack(seed: int, params: CrackParams, origin=(0.0, 0.0), heading=None) -> CrackPath:
    """Grow a crack skeleton whose total length (branches included) is the target.

    Branch lengths are taken out of the parent's remaining budget and the last
    step of every walk is shortened, so the total matches ``target_length_m``
    up to float rounding. Output is a pure function of ``(seed, params)`` and
    the optional placement arguments.
    """
    params.validate()
    rng = np.random.default_rng(np.random.SeedSequence(int(seed) & (2**64 - 1)))
    h0 = rng.uniform(0, 2 * math.pi)
    if heading is not None:
        h0 = float(heading)
    return _grow(rng, params, origin, h0, params.target_length_m, 0)


def _segments(path: CrackPath):
    for p in path.walk():
        for k in range(len(p.vertices) - 1):
            yield p.vertices[k], p.vertices[k + 1], p.widths[k], p.widths[k + 1]


def _capsule_hits(px, py, a, b, wa, wb):
    """Boolean hits of pixel centers ``(px, py)`` against one tapered capsule.

    All quantities are in pixel units.
    """
    dx = b[0] - a[0]
    dy = b[1] - a[1]
    seg2 = dx * dx + dy * dy
    rx = px - a[0]
    ry = py - a[1]
    if seg2 > 0:
        t = np.clip((rx * dx + ry * dy) / seg2, 0.0, 1.0)
    else:
        t = np.zeros_like(rx)
    ex = rx - t * dx
    ey = ry - t * dy
    half = (wa + t * (wb - wa)) / 2
    return ex * ex + ey * ey <= half * half


def rasterize_crack(path: CrackPath, gsd: float, canvas: tuple[int, int]):
    """Rasterize a crack into a binary opacity mask.

    Pixel ``(row, col)`` is set when its center lies within the interpolated
    half-width of some segment. ``canvas`` is ``(height, width)``. Returns
    ``(mask, empty)`` where ``mask`` is uint8 in {0, 1} and ``empty`` flags a
    path that does not touch the canvas at all.
    """
    if not gsd > 0:
        raise ParameterError(f"gsd must be > 0, got {gsd}")
    height, width = int(canvas[0]), int(canvas[1])
    if height <= 0 or width <= 0:
        raise ParameterError(f"canvas must be nonempty, got {canvas}")
    mask = np.zeros((height, width), dtype=np.uint8)
    for a, b, wa, wb in _segments(path):
        # pixel units; pixel (r, c) has its center at (c + 0.5, r + 0.5)
        a = a / gsd
        b = b / gsd
        wa = wa / gsd
        wb = wb / gsd
        reach = max(wa, wb) / 2
        c0 = max(int(math.floor(min(a[0], b[0]) - reach - 0.5)), 0)
        c1 = min(int(math.ceil(max(a[0], b[0]) + reach - 0.5)) + 1, width)
        r0 = max(int(math.floor(min(a[1], b[1]) - reach - 0.5)), 0)
        r1 = min(int(math.ceil(max(a[1], b[1]) + reach - 0.5)) + 1, height)
        if c0 >= c1 or r0 >= r1:
            continue
        px = np.arange(c0, c1, dtype=np.float64)[None, :] + 0.5
        py = np.arange(r0, r1, dtype=np.float64)[:, None] + 0.5
        hits = _capsule_hits(px, py, a, b, wa, wb)
        mask[r0:r1, c0:c1] |= hits.astype(np.uint8)
    return mask, not mask.any()
