"""
Box Merging
IoU computation and deduplicated union of original and parsed widget boxes
"""

from typing import List, Sequence

import numpy as np

from src.actions import BBox

DEFAULT_IOU_CUTOFF = 0.9


def _as_array(boxes: Sequence[BBox]) -> np.ndarray:
    return np.array([b.to_list() for b in boxes], dtype=np.float64).reshape(-1, 4)


def iou_matrix(a: Sequence[BBox], b: Sequence[BBox]) -> np.ndarray:
    """
    Pairwise intersection-over-union

    Returns:
        Array of shape (len(a), len(b)). Two zero-area boxes have IoU 1 when
        identical and 0 otherwise.
    """
    A, B = _as_array(a), _as_array(b)
    if len(A) == 0 or len(B) == 0:
        return np.zeros((len(A), len(B)))

    x1 = np.maximum(A[:, None, 0], B[None, :, 0])
    y1 = np.maximum(A[:, None, 1], B[None, :, 1])
    x2 = np.minimum(A[:, None, 2], B[None, :, 2])
    y2 = np.minimum(A[:, None, 3], B[None, :, 3])
    inter = np.clip(x2 - x1, 0, None) * np.clip(y2 - y1, 0, None)

    area_a = (A[:, 2] - A[:, 0]) * (A[:, 3] - A[:, 1])
    area_b = (B[:, 2] - B[:, 0]) * (B[:, 3] - B[:, 1])
    union = area_a[:, None] + area_b[None, :] - inter

    identical = np.all(A[:, None, :] == B[None, :, :], axis=2)
    with np.errstate(divide='ignore', invalid='ignore'):
        iou = np.where(union > 0, inter / union, identical.astype(np.float64))
    return iou


def iou(a: BBox, b: BBox) -> float:
    return float(iou_matrix([a], [b])[0, 0])


def merge_boxes(original: Sequence[BBox], parsed: Sequence[BBox],
                iou_cutoff: float = DEFAULT_IOU_CUTOFF) -> List[BBox]:
    """
    Union of original and parsed boxes with IoU deduplication

    Original boxes are visited first, then parsed boxes; a box is kept only if
    its IoU with every kept box is below the cutoff, so a duplicate collapses
    onto the earlier (original) box.
    """
    if not 0 < iou_cutoff <= 1:
        raise ValueError(f"iou_cutoff must be in (0, 1], got {iou_cutoff}")

    kept: List[BBox] = []
    for box in list(original) + list(parsed):
        if kept and iou_matrix([box], kept).max() >= iou_cutoff:
            continue
        kept.append(box)
    return kept
