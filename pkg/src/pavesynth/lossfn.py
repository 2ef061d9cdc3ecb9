"""Segmentation losses with analytic gradients w.r.t. the probability map.

The Generalised Dice loss treats defect and background as two classes with
weights ``w_l = 1 / (sum_n r_ln)^2``. It is scale free and punishes the
trivial all-background prediction that plain cross-entropy tolerates on
imbalanced masks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError

BCE_EPS = 1e-7
DICE_EPS = 1e-12


@dataclass
class LossValue:
    value: float
    gradient: np.ndarray


def _check(p, r):
    p = np.asarray(p, dtype=np.float64)
    r = np.asarray(r, dtype=np.float64)
    if p.shape != r.shape:
        raise ParameterError(f"prediction shape {p.shape} != mask shape {r.shape}")
    if p.size == 0:
        raise ParameterError("empty input")
    return p, r


def bce(p, r, eps: float = BCE_EPS) -> LossValue:
    """Mean binary cross-entropy on ``clamp(p, eps, 1 - eps)``."""
    p, r = _check(p, r)
    if not 0 < eps < 0.5:
        raise ParameterError(f"eps must be in (0, 0.5), got {eps}")
    pc = np.clip(p, eps, 1.0 - eps)
    n = p.size
    value = -np.mean(r * np.log(pc) + (1.0 - r) * np.log1p(-pc))
    grad = (-r / pc + (1.0 - r) / (1.0 - pc)) / n
    grad = np.where((p > eps) & (p < 1.0 - eps), grad, 0.0)
    return LossValue(float(value), grad)


def generalized_dice(p, r, eps: float = DICE_EPS) -> LossValue:
    """Two-class Generalised Dice loss.

    ``1 - (2 * sum_l w_l * sum_n r_ln p_ln + eps) / (sum_l w_l * sum_n (r_ln + p_ln) + eps)``
    with background ``r_0 = 1 - r``, ``p_0 = 1 - p``. The smoothing term keeps
    the loss defined, and exactly zero for a perfect prediction, when a class
    is empty; class weights are capped at ``1 / eps^2``.
    """
    p, r = _check(p, r)
    if not eps > 0:
        raise ParameterError(f"eps must be > 0, got {eps}")
    r0 = 1.0 - r
    p0 = 1.0 - p
    cap = 1.0 / (eps * eps)
    n1 = r.sum()
    n0 = r0.sum()
    w1 = min(1.0 / (n1 * n1), cap) if n1 > 0 else cap
    w0 = min(1.0 / (n0 * n0), cap) if n0 > 0 else cap

    inter = w1 * np.sum(r * p) + w0 * np.sum(r0 * p0)
    total = w1 * (n1 + p.sum()) + w0 * (n0 + p0.sum())
    num = 2.0 * inter + eps
    den = total + eps
    value = 1.0 - num / den

    d_inter = w1 * r - w0 * r0
    d_total = w1 - w0
    grad = -(2.0 * d_inter * den - num * d_total) / (den * den)
    return LossValue(float(value), grad)


def combined_loss(
    p,
    r,
    dice_weight: float = 1.0,
    bce_weight: float = 1.0,
    bce_eps: float = BCE_EPS,
    dice_eps: float = DICE_EPS,
) -> LossValue:
    """``dice_weight * GDL + bce_weight * BCE``, values and gradients alike."""
    if dice_weight < 0 or bce_weight < 0:
        raise ParameterError("loss weights must be >= 0")
    if dice_weight == 0 and bce_weight == 0:
        raise ParameterError("at least one loss weight must be positive")
    p, r = _check(p, r)
    value = 0.0
    grad = np.zeros_like(p)
    if dice_weight:
        d = generalized_dice(p, r, dice_eps)
        value += dice_weight * d.value
        grad += dice_weight * d.gradient
    if bce_weight:
        b = bce(p, r, bce_eps)
        value += bce_weight * b.value
        grad += bce_weight * b.gradient
    return LossValue(float(value), grad)
