"""Pixel-level primitives over binary masks.

A mask is a 2-D boolean numpy array of shape (height, width). All operations
are pure functions over immutable inputs and can run concurrently.

Conventions:
  - connected components use 8-connectivity,
  - boundary extraction uses the 4-neighborhood (thin, single-pixel contours),
  - dilation uses a Euclidean disk (not Chebyshev).
"""

import math

import cv2
import numpy as np
from scipy import ndimage

from .errors import ShapeMismatchError

Mask = np.ndarray

_CROSS = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=np.uint8)
_EIGHT = np.ones((3, 3), dtype=int)


def as_mask(a) -> Mask:
    """Coerce input to a 2-D boolean array, rejecting degenerate shapes."""
    m = np.asarray(a)
    if m.ndim != 2:
        raise ShapeMismatchError(f"mask must be 2-D, got shape {m.shape}")
    if m.shape[0] < 1 or m.shape[1] < 1:
        raise ShapeMismatchError(f"mask dimensions must be positive, got {m.shape}")
    return m.astype(bool, copy=False)


def require_same_shape(a: Mask, b: Mask, context: str = "") -> None:
    if a.shape != b.shape:
        prefix = f"{context}: " if context else ""
        raise ShapeMismatchError(f"{prefix}shape mismatch {a.shape} vs {b.shape}")


def empty_like(shape) -> Mask:
    return np.zeros(shape, dtype=bool)


def area(m: Mask) -> int:
    """Number of foreground pixels."""
    return int(np.count_nonzero(m))


def union(a: Mask, b: Mask) -> Mask:
    require_same_shape(a, b, "union")
    return a | b


def intersection(a: Mask, b: Mask) -> Mask:
    require_same_shape(a, b, "intersection")
    return a & b


def iou(a: Mask, b: Mask) -> float:
    """Intersection over union; 1.0 when both masks are empty."""
    require_same_shape(a, b, "iou")
    uni = np.count_nonzero(a | b)
    if uni == 0:
        return 1.0
    return float(np.count_nonzero(a & b) / uni)


def connected_components(m: Mask) -> list[Mask]:
    """Split into 8-connected components.

    Ordered by decreasing area; ties by the component's first foreground
    pixel in row-major scan. Components are pairwise disjoint and their
    union reproduces the input bit-exactly.
    """
    m = as_mask(m)
    labels, n = ndimage.label(m, structure=_EIGHT)
    if n == 0:
        return []
    flat = labels.ravel()
    areas = np.bincount(flat, minlength=n + 1)[1:]
    vals, first_idx = np.unique(flat, return_index=True)
    first = np.empty(n, dtype=np.int64)
    first[vals[vals > 0] - 1] = first_idx[vals > 0]
    order = sorted(range(n), key=lambda i: (-int(areas[i]), int(first[i])))
    return [labels == i + 1 for i in order]


def boundary_pixels(m: Mask) -> Mask:
    """Foreground pixels with at least one 4-neighbor that is background
    or outside the image."""
    m = as_mask(m)
    interior = cv2.erode(m.astype(np.uint8), _CROSS,
                         borderType=cv2.BORDER_CONSTANT, borderValue=0) > 0
    return m & ~interior


def _disk(radius: float) -> np.ndarray:
    r = int(math.floor(radius))
    ys, xs = np.mgrid[-r : r + 1, -r : r + 1]
    return (ys * ys + xs * xs) <= radius * radius


def dilate(m: Mask, radius: float) -> Mask:
    """Euclidean dilation: p becomes foreground iff some foreground q has
    distance(p, q) <= radius. Radius 0 is the identity."""
    m = as_mask(m)
    if radius < 0:
        raise ValueError(f"radius must be non-negative, got {radius}")
    if radius < 1 or not m.any():
        return m.copy()
    return cv2.dilate(m.astype(np.uint8), _disk(radius).astype(np.uint8)) > 0


def erode(m: Mask, radius: float) -> Mask:
    """Euclidean erosion (dual of dilate); used by the synthetic jitter."""
    m = as_mask(m)
    if radius < 0:
        raise ValueError(f"radius must be non-negative, got {radius}")
    if radius < 1 or not m.any():
        return m.copy()
    return cv2.erode(m.astype(np.uint8), _disk(radius).astype(np.uint8),
                     borderType=cv2.BORDER_CONSTANT, borderValue=0) > 0
