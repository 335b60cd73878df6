"""Serialization of raw model outputs into the interchange layout.

Detector jobs emit one candidates.json per (video, expression) holding
per-frame candidate scores and column-major RLE payloads; refiner jobs emit
one 8-bit PNG per frame (foreground 255). Both append an entry to the
target root's manifest.json atomically, so a partially exported corpus
always has a parseable manifest.

Probability grids are binarized at a strict > 0.5 threshold. Exports are
idempotent: re-running over the same inputs rewrites identical bytes.
"""

import json
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

MANIFEST_NAME = "manifest.json"
CANDIDATES_NAME = "candidates.json"

KINDS = ("detector", "refiner")


class ExportError(Exception):
    pass


@dataclass
class ExportJob:
    kind: str                 # "detector" | "refiner"
    video_id: str
    expression_id: str
    width: int
    height: int
    frames: list              # detector: per frame list of (grid, score);
                              # refiner: per frame grid
    target_root: Path
    text: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ExportError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if not self.frames:
            raise ExportError(
                f"{self.video_id}/{self.expression_id}: no frames to export")


def binarize(grid, where: str) -> np.ndarray:
    """Boolean grids pass through; anything else is treated as probabilities
    and thresholded at a strict > 0.5."""
    arr = np.asarray(grid)
    if arr.ndim != 2:
        raise ExportError(f"{where}: mask grid must be 2-D, got shape {arr.shape}")
    if arr.dtype == bool:
        return arr
    return arr > 0.5


def encode_rle_counts(mask: np.ndarray) -> list:
    """Column-major run lengths, alternating starting with background."""
    flat = mask.ravel(order="F").view(np.int8)
    boundaries = np.flatnonzero(np.diff(flat))
    edges = np.concatenate(([0], boundaries + 1, [flat.size]))
    counts = np.diff(edges).tolist()
    if flat[0]:
        counts = [0] + counts
    return counts


def write_mask_png(mask: np.ndarray, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(mask.astype(np.uint8) * 255, mode="L").save(path,
                                                                format="PNG")


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def append_manifest_entry(job: ExportJob, ground_truth=None) -> None:
    """Insert (or replace) this job's (video, expression) entry in the
    target root's manifest, written atomically."""
    path = Path(job.target_root) / MANIFEST_NAME
    payload = {"videos": []}
    if path.exists():
        payload = json.loads(path.read_text())
    video = next((v for v in payload["videos"]
                  if v["video_id"] == job.video_id), None)
    if video is None:
        video = {"video_id": job.video_id, "frame_count": len(job.frames),
                 "width": job.width, "height": job.height, "expressions": []}
        payload["videos"].append(video)
    elif video["frame_count"] != len(job.frames) or \
            (video["width"], video["height"]) != (job.width, job.height):
        raise ExportError(
            f"video {job.video_id}: existing manifest entry disagrees on "
            f"frame count or dimensions")
    entry = {"expression_id": job.expression_id, "text": job.text,
             "ground_truth": ground_truth}
    video["expressions"] = [e for e in video["expressions"]
                            if e["expression_id"] != job.expression_id]
    video["expressions"].append(entry)
    video["expressions"].sort(key=lambda e: e["expression_id"])
    payload["videos"].sort(key=lambda v: v["video_id"])
    _atomic_write(path, json.dumps(payload, indent=2, sort_keys=True))


def export_outputs(job: ExportJob) -> Path:
    """Write one (video, expression) worth of model outputs under
    job.target_root; returns the expression directory."""
    out_dir = Path(job.target_root) / job.video_id / job.expression_id
    shape = (job.height, job.width)
    if job.kind == "detector":
        frames_payload = []
        for t, cands in enumerate(job.frames):
            where = f"{job.video_id}/{job.expression_id} frame {t}"
            entry = []
            for k, (grid, score) in enumerate(cands):
                score = float(score)
                if not 0.0 <= score <= 1.0:
                    raise ExportError(
                        f"{where}: candidate {k} score {score} outside [0, 1]")
                mask = binarize(grid, where)
                if mask.shape != shape:
                    raise ExportError(
                        f"{where}: candidate {k} has shape {mask.shape}, "
                        f"expected {shape}")
                entry.append({"score": score,
                              "rle": {"width": job.width, "height": job.height,
                                      "counts": encode_rle_counts(mask)}})
            frames_payload.append({"frame_index": t, "candidates": entry})
        payload = {"video_id": job.video_id,
                   "expression_id": job.expression_id,
                   "width": job.width, "height": job.height,
                   "frames": frames_payload}
        out_dir.mkdir(parents=True, exist_ok=True)
        _atomic_write(out_dir / CANDIDATES_NAME,
                      json.dumps(payload, indent=2, sort_keys=True))
    else:
        for t, grid in enumerate(job.frames):
            where = f"{job.video_id}/{job.expression_id} frame {t}"
            mask = binarize(grid, where)
            if mask.shape != shape:
                raise ExportError(
                    f"{where}: mask has shape {mask.shape}, expected {shape}")
            write_mask_png(mask, out_dir / f"{t:05d}.png")
    append_manifest_entry(job)
    return out_dir
