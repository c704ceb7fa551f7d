"""Training losses: L1, GIoU, cross-entropy, focal, and their weights."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import tensor as T
from .errors import ShapeError, ConfigError
from .tensor import Tensor

PROB_EPS = 1e-12


@dataclass(frozen=True)
class LossWeights:
    """Multipliers for the multi-task objective."""

    lambda_l1: float = 2.5
    lambda_giou: float = 1.0
    lambda_hoc: float = 1.0
    lambda_ac: float = 1.0
    lambda_pose: float = 1.0

    def __post_init__(self):
        for name, value in self.__dict__.items():
            if not (math.isfinite(value) and value >= 0.0):
                raise ConfigError(f"loss weight {name} must be finite and non-negative, got {value}")


def l1_loss(pred: Tensor, target: Tensor) -> Tensor:
    if pred.shape != target.shape:
        raise ShapeError(f"l1_loss shapes differ: {pred.shape} vs {target.shape}")
    return T.tmean(T.absolute(T.sub(pred, target)))


def cross_entropy(logits: Tensor, target_index: int) -> Tensor:
    """Negative log softmax probability of the target class (1-d logits)."""
    probs = T.clamp(T.softmax(logits, axis=-1), PROB_EPS, 1.0)
    mask = np.zeros(logits.shape[-1])
    mask[target_index] = 1.0
    return -T.tsum(T.mul(T.log(probs), T.as_tensor(mask)))


def cross_entropy_rows(logits: Tensor, target_indices) -> Tensor:
    """Mean negative log softmax probability over rows of (n, c) logits."""
    targets = np.asarray(target_indices, dtype=np.intp)
    probs = T.clamp(T.softmax(logits, axis=-1), PROB_EPS, 1.0)
    mask = np.zeros(logits.shape)
    mask[np.arange(len(targets)), targets] = 1.0
    return -T.mul(T.tsum(T.mul(T.log(probs), T.as_tensor(mask))), T.as_tensor(1.0 / len(targets)))


def focal_loss(probs: Tensor, targets: Tensor, gamma: float = 2.0, alpha: float = 0.25) -> Tensor:
    """Mean focal term over all elements of a multi-hot target grid.

    Positives contribute -alpha * (1-p)^gamma * log(p), negatives
    -(1-alpha) * p^gamma * log(1-p). Probabilities are clamped away from
    {0, 1} so the logs stay finite.
    """
    if probs.shape != targets.shape:
        raise ShapeError(f"focal_loss shapes differ: {probs.shape} vs {targets.shape}")
    p = T.clamp(probs, PROB_EPS, 1.0 - PROB_EPS)
    one = T.as_tensor(np.ones(p.shape))
    pos = T.mul(T.mul(T.power(T.sub(one, p), gamma), T.log(p)), T.as_tensor(-alpha))
    neg = T.mul(T.mul(T.power(p, gamma), T.log(T.sub(one, p))), T.as_tensor(-(1.0 - alpha)))
    elems = T.add(T.mul(targets, pos), T.mul(T.sub(one, T.as_tensor(targets.data)), neg))
    return T.tmean(elems)


def cxcywh_to_xyxy(boxes: Tensor) -> Tensor:
    """Convert (n, 4) center/size boxes to corner form, differentiably."""
    cx = T.narrow(boxes, 1, 0, 1)
    cy = T.narrow(boxes, 1, 1, 2)
    half_w = T.mul(T.narrow(boxes, 1, 2, 3), T.as_tensor(0.5))
    half_h = T.mul(T.narrow(boxes, 1, 3, 4), T.as_tensor(0.5))
    return T.concat(
        [T.sub(cx, half_w), T.sub(cy, half_h), T.add(cx, half_w), T.add(cy, half_h)], axis=1
    )


def giou_pairs(pred_xyxy: Tensor, target_xyxy: Tensor) -> Tensor:
    """Per-row generalized IoU between aligned (n, 4) corner boxes."""

    def col(t: Tensor, i: int) -> Tensor:
        return T.narrow(t, 1, i, i + 1)

    ax1, ay1, ax2, ay2 = (col(pred_xyxy, i) for i in range(4))
    bx1, by1, bx2, by2 = (col(target_xyxy, i) for i in range(4))
    inter_w = T.relu(T.sub(T.minimum(ax2, bx2), T.maximum(ax1, bx1)))
    inter_h = T.relu(T.sub(T.minimum(ay2, by2), T.maximum(ay1, by1)))
    inter = T.mul(inter_w, inter_h)
    area_a = T.mul(T.sub(ax2, ax1), T.sub(ay2, ay1))
    area_b = T.mul(T.sub(bx2, bx1), T.sub(by2, by1))
    union = T.sub(T.add(area_a, area_b), inter)
    iou = T.div(inter, T.maximum(union, T.as_tensor(np.full(union.shape, 1e-12))))
    hull_w = T.sub(T.maximum(ax2, bx2), T.minimum(ax1, bx1))
    hull_h = T.sub(T.maximum(ay2, by2), T.minimum(ay1, by1))
    hull = T.maximum(T.mul(hull_w, hull_h), T.as_tensor(np.full(union.shape, 1e-12)))
    out = T.sub(iou, T.div(T.sub(hull, union), hull))
    return T.reshape(out, (pred_xyxy.shape[0],))


def giou_loss(pred_xyxy: Tensor, target_xyxy: Tensor) -> Tensor:
    """Mean (1 - GIoU) over aligned box pairs."""
    pairs = giou_pairs(pred_xyxy, target_xyxy)
    ones = T.as_tensor(np.ones(pairs.shape))
    return T.tmean(T.sub(ones, pairs))
