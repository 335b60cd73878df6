"""Serialization of masks, tracks, candidate sets and corpus manifests.

On-disk layout (all paths relative to a corpus/prediction root):

    <root>/manifest.json
    <root>/<video_id>/<expression_id>/<frame index, zero-padded to 5>.png
    <root>/<video_id>/<expression_id>/candidates.json   (detector outputs)

Mask image files are 8-bit single-channel PNG: foreground written as 255,
background as 0; on read any value > 127 counts as foreground. Candidate
scores are serialized as JSON decimal numbers via Python's shortest
round-trip float repr, so threshold decisions reproduce across platforms.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import MaskFuseError, MissingInputError, ValidationError
from .masks import Mask, as_mask
from .rle import RleMask, decode_rle, encode_rle

MANIFEST_NAME = "manifest.json"
CANDIDATES_NAME = "candidates.json"


def frame_filename(frame_index: int) -> str:
    return f"{frame_index:05d}.png"


def track_dir(root, video_id: str, expression_id: str) -> Path:
    return Path(root) / video_id / expression_id


# ---------------------------------------------------------------------------
# Mask image files


def write_mask(m: Mask, path) -> None:
    m = as_mask(m)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    img = Image.fromarray(m.astype(np.uint8) * 255, mode="L")
    img.save(path, format="PNG")


def read_mask(path) -> Mask:
    path = Path(path)
    if not path.exists():
        raise MissingInputError(f"mask file not found: {path}")
    try:
        with Image.open(path) as img:
            arr = np.asarray(img.convert("L"))
    except (UnidentifiedImageError, OSError) as exc:
        raise MaskFuseError(f"cannot decode mask file {path}: {exc}") from exc
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValidationError(f"mask file {path} has degenerate shape {arr.shape}")
    return arr > 127


# ---------------------------------------------------------------------------
# Tracks


@dataclass
class MaskTrack:
    video_id: str
    expression_id: str
    frames: list  # list of Mask, one per frame, uniform dimensions

    def __len__(self) -> int:
        return len(self.frames)


def write_track(track: MaskTrack, root) -> None:
    out = track_dir(root, track.video_id, track.expression_id)
    for t, m in enumerate(track.frames):
        write_mask(m, out / frame_filename(t))


def read_track(root, video_id: str, expression_id: str, frame_count: int) -> MaskTrack:
    src = track_dir(root, video_id, expression_id)
    frames = []
    missing = []
    for t in range(frame_count):
        p = src / frame_filename(t)
        if not p.exists():
            missing.append(t)
            continue
        frames.append(read_mask(p))
    if missing:
        raise MissingInputError(
            f"track {video_id}/{expression_id} under {root} is missing "
            f"frames {missing}")
    shapes = {f.shape for f in frames}
    if len(shapes) > 1:
        raise ValidationError(
            f"track {video_id}/{expression_id} under {root} mixes mask "
            f"dimensions {sorted(shapes)}")
    return MaskTrack(video_id=video_id, expression_id=expression_id, frames=frames)


# ---------------------------------------------------------------------------
# Scored candidate sets (detector outputs)


@dataclass
class ScoredCandidateSet:
    frame_index: int
    candidates: list  # list of (Mask, float score)


def write_candidates(video_id: str, expression_id: str, width: int, height: int,
                     frames: list, root) -> None:
    """Persist per-frame scored candidate sets as one JSON file with RLE
    payloads. `frames` is a list of ScoredCandidateSet in frame order."""
    payload = {
        "video_id": video_id,
        "expression_id": expression_id,
        "width": width,
        "height": height,
        "frames": [
            {
                "frame_index": cs.frame_index,
                "candidates": [
                    {"score": float(score), "rle": encode_rle(mask).to_dict()}
                    for mask, score in cs.candidates
                ],
            }
            for cs in frames
        ],
    }
    path = track_dir(root, video_id, expression_id) / CANDIDATES_NAME
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True))


def read_candidates(root, video_id: str, expression_id: str) -> list:
    """Load the candidate file for one (video, expression); returns a list of
    ScoredCandidateSet in frame order."""
    path = track_dir(root, video_id, expression_id) / CANDIDATES_NAME
    if not path.exists():
        raise MissingInputError(
            f"candidate file not found for {video_id}/{expression_id}: {path}")
    try:
        payload = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"unparseable candidate file {path}: {exc}") from exc
    width, height = int(payload["width"]), int(payload["height"])
    out = []
    for entry in sorted(payload["frames"], key=lambda e: e["frame_index"]):
        cands = []
        for c in entry["candidates"]:
            score = float(c["score"])
            if not 0.0 <= score <= 1.0:
                raise ValidationError(
                    f"{path}: frame {entry['frame_index']} has score {score} "
                    f"outside [0, 1]")
            rle = RleMask.from_dict(c["rle"])
            if (rle.width, rle.height) != (width, height):
                raise ValidationError(
                    f"{path}: frame {entry['frame_index']} candidate has "
                    f"dimensions {rle.width}x{rle.height}, expected "
                    f"{width}x{height}")
            cands.append((decode_rle(rle), score))
        out.append(ScoredCandidateSet(frame_index=int(entry["frame_index"]),
                                      candidates=cands))
    return out


# ---------------------------------------------------------------------------
# Manifest


@dataclass
class ExpressionEntry:
    expression_id: str
    text: str
    ground_truth: list | None = None  # relative mask paths, one per frame


@dataclass
class VideoEntry:
    video_id: str
    frame_count: int
    width: int
    height: int
    expressions: list = field(default_factory=list)


@dataclass
class Manifest:
    videos: list = field(default_factory=list)

    def pairs(self):
        """All (video, expression) pairs, sorted for deterministic iteration."""
        out = []
        for v in sorted(self.videos, key=lambda v: v.video_id):
            for e in sorted(v.expressions, key=lambda e: e.expression_id):
                out.append((v, e))
        return out


def save_manifest(manifest: Manifest, root) -> None:
    payload = {
        "videos": [
            {
                "video_id": v.video_id,
                "frame_count": v.frame_count,
                "width": v.width,
                "height": v.height,
                "expressions": [
                    {
                        "expression_id": e.expression_id,
                        "text": e.text,
                        "ground_truth": e.ground_truth,
                    }
                    for e in v.expressions
                ],
            }
            for v in manifest.videos
        ]
    }
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    (root / MANIFEST_NAME).write_text(json.dumps(payload, indent=2, sort_keys=True))


def load_manifest(path) -> Manifest:
    """Parse and fully validate a manifest.

    `path` may be the manifest file or the corpus root containing one.
    Every structural defect raises ValidationError naming the offender;
    referenced ground-truth masks are checked for existence and dimensions.
    """
    path = Path(path)
    if path.is_dir():
        path = path / MANIFEST_NAME
    if not path.exists():
        raise MissingInputError(f"manifest not found: {path}")
    root = path.parent
    try:
        payload = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"unparseable manifest {path}: {exc}") from exc
    if not isinstance(payload, dict) or "videos" not in payload:
        raise ValidationError(f"manifest {path} lacks a 'videos' list")

    manifest = Manifest()
    seen = set()
    for v in payload["videos"]:
        try:
            video = VideoEntry(video_id=str(v["video_id"]),
                               frame_count=int(v["frame_count"]),
                               width=int(v["width"]), height=int(v["height"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"malformed video entry in {path}: {exc}") from exc
        if video.frame_count < 1:
            raise ValidationError(
                f"video {video.video_id}: frame_count must be >= 1, "
                f"got {video.frame_count}")
        if video.width < 1 or video.height < 1:
            raise ValidationError(
                f"video {video.video_id}: degenerate dimensions "
                f"{video.width}x{video.height}")
        for e in v.get("expressions", []):
            try:
                expr = ExpressionEntry(expression_id=str(e["expression_id"]),
                                       text=str(e.get("text", "")),
                                       ground_truth=e.get("ground_truth"))
            except (KeyError, TypeError) as exc:
                raise ValidationError(
                    f"malformed expression entry in video {video.video_id}: "
                    f"{exc}") from exc
            key = (video.video_id, expr.expression_id)
            if key in seen:
                raise ValidationError(
                    f"duplicate (video_id, expression_id) pair {key}")
            seen.add(key)
            if expr.ground_truth is not None:
                _validate_ground_truth(root, video, expr)
            video.expressions.append(expr)
        manifest.videos.append(video)
    return manifest


def _validate_ground_truth(root: Path, video: VideoEntry, expr: ExpressionEntry):
    gt = expr.ground_truth
    if len(gt) != video.frame_count:
        raise ValidationError(
            f"video {video.video_id}, expression {expr.expression_id}: "
            f"{len(gt)} ground-truth references for {video.frame_count} frames")
    for t, rel in enumerate(gt):
        p = root / rel
        if not p.exists():
            raise ValidationError(
                f"video {video.video_id}, expression {expr.expression_id}, "
                f"frame {t}: missing mask file {rel}")
        m = read_mask(p)
        if m.shape != (video.height, video.width):
            raise ValidationError(
                f"video {video.video_id}, expression {expr.expression_id}, "
                f"frame {t}: mask is {m.shape[1]}x{m.shape[0]}, video is "
                f"{video.width}x{video.height}")


def read_ground_truth(root, video: VideoEntry, expr: ExpressionEntry) -> MaskTrack:
    if expr.ground_truth is None:
        raise ValidationError(
            f"video {video.video_id}, expression {expr.expression_id} has no "
            f"ground truth")
    frames = [read_mask(Path(root) / rel) for rel in expr.ground_truth]
    return MaskTrack(video_id=video.video_id, expression_id=expr.expression_id,
                     frames=frames)
