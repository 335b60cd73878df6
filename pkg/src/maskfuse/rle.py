"""Uncompressed run-length codec for binary masks.

Runs are counted over a column-major traversal (top-to-bottom, then
left-to-right) and alternate starting with a background run, so a mask
whose first pixel is foreground gets a leading 0 count. This matches the
de-facto COCO uncompressed convention.
"""

from dataclasses import dataclass

import numpy as np

from .errors import CorruptEncodingError
from .masks import Mask, as_mask


@dataclass(frozen=True)
class RleMask:
    width: int
    height: int
    counts: tuple[int, ...]

    def to_dict(self) -> dict:
        return {"width": self.width, "height": self.height, "counts": list(self.counts)}

    @classmethod
    def from_dict(cls, d: dict) -> "RleMask":
        try:
            return cls(width=int(d["width"]), height=int(d["height"]),
                       counts=tuple(int(c) for c in d["counts"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise CorruptEncodingError(f"malformed RLE payload: {exc}") from exc


def encode_rle(m: Mask) -> RleMask:
    m = as_mask(m)
    h, w = m.shape
    flat = m.ravel(order="F").view(np.int8)
    boundaries = np.flatnonzero(np.diff(flat))
    edges = np.concatenate(([0], boundaries + 1, [flat.size]))
    counts = np.diff(edges).tolist()
    if flat[0]:
        counts = [0] + counts
    rle = RleMask(width=w, height=h, counts=tuple(counts))
    assert sum(rle.counts) == w * h
    return rle


def decode_rle(r: RleMask) -> Mask:
    if r.width < 1 or r.height < 1:
        raise CorruptEncodingError(f"invalid RLE dimensions {r.width}x{r.height}")
    total = r.width * r.height
    if any(c < 0 for c in r.counts):
        raise CorruptEncodingError("negative run length")
    if sum(r.counts) != total:
        raise CorruptEncodingError(
            f"RLE counts sum to {sum(r.counts)}, expected {total} for "
            f"{r.width}x{r.height}")
    if any(c == 0 for c in r.counts[1:]):
        raise CorruptEncodingError("zero-length run after the first count")
    flat = np.zeros(total, dtype=bool)
    pos = 0
    foreground = False
    for c in r.counts:
        if foreground:
            flat[pos : pos + c] = True
        pos += c
        foreground = not foreground
    return flat.reshape((r.height, r.width), order="F")
