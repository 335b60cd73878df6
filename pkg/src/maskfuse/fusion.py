"""Candidate combination, prompt selection and conditional mask fusion.

The fusion rule: per frame, the refined mask M_s is kept as-is unless its
area falls strictly below area_ratio times the detector mask M_r's area
(the multi-object signal), in which case the two masks are unioned. The
per-video variant makes that branch decision once, on areas summed over
all frames.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ShapeMismatchError, ValidationError
from .interchange import MaskTrack
from .masks import Mask, area, require_same_shape, union

MODES = ("per_frame", "per_video", "refined_only", "detector_only", "always_union")

DEFAULT_SIGMA = 0.275
DEFAULT_AREA_RATIO = 2.0 / 3.0


@dataclass
class FusionConfig:
    sigma: float = DEFAULT_SIGMA
    area_ratio: float = DEFAULT_AREA_RATIO
    mode: str = "per_frame"
    tie_break: str = "earliest_frame"  # fixed; serialized for provenance

    def validate(self) -> "FusionConfig":
        if not 0.0 <= self.sigma <= 1.0:
            raise ValidationError(f"sigma must be in [0, 1], got {self.sigma}")
        if self.area_ratio <= 0:
            raise ValidationError(f"area_ratio must be > 0, got {self.area_ratio}")
        if self.mode not in MODES:
            raise ValidationError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.tie_break != "earliest_frame":
            raise ValidationError(f"unsupported tie_break {self.tie_break!r}")
        return self

    def to_dict(self) -> dict:
        return {"sigma": self.sigma, "area_ratio": self.area_ratio,
                "mode": self.mode, "tie_break": self.tie_break}


@dataclass
class PromptSelection:
    frame_index: int
    mask: Mask = field(repr=False)
    score: float


def combine_candidates(candidates, sigma: float, shape) -> tuple[Mask, float]:
    """Union the top-scoring candidate with every candidate scoring > sigma.

    `candidates` is a sequence of (mask, score) pairs for one frame; `shape`
    is the frame's (height, width), used when the list is empty. Returns the
    combined mask and the maximum candidate score (0 when empty).
    """
    combined = np.zeros(shape, dtype=bool)
    if not candidates:
        return combined, 0.0
    best = 0
    for i, (mask, score) in enumerate(candidates):
        if mask.shape != tuple(shape):
            raise ShapeMismatchError(
                f"candidate {i} has shape {mask.shape}, frame is {tuple(shape)}")
        if score > candidates[best][1]:
            best = i
    combined |= candidates[best][0]
    for mask, score in candidates:
        if score > sigma:
            combined |= mask
    return combined, float(candidates[best][1])


def select_prompt(detector_track: MaskTrack, per_frame_scores) -> PromptSelection:
    """Pick the frame with maximum combined score; ties go to the earliest
    frame. The prompt mask is the combined mask at that frame."""
    if len(detector_track) == 0:
        raise ValidationError(
            f"track {detector_track.video_id}/{detector_track.expression_id} "
            f"is empty")
    if len(per_frame_scores) != len(detector_track):
        raise ValidationError(
            f"{len(per_frame_scores)} scores for {len(detector_track)} frames")
    idx = max(range(len(per_frame_scores)),
              key=lambda t: (per_frame_scores[t], -t))
    return PromptSelection(frame_index=idx, mask=detector_track.frames[idx],
                           score=float(per_frame_scores[idx]))


def cmf_frame(m_s: Mask, m_r: Mask, area_ratio: float = DEFAULT_AREA_RATIO) -> Mask:
    """Single-frame conditional fusion: union(m_s, m_r) when
    area(m_s) < area_ratio * area(m_r) (strict), else m_s unchanged."""
    require_same_shape(m_s, m_r, "cmf_frame")
    if area(m_s) < area_ratio * area(m_r):
        return union(m_s, m_r)
    return m_s


def cmf_track(track_s: MaskTrack, track_r: MaskTrack,
              config: FusionConfig) -> MaskTrack:
    """Fuse a refined track (track_s) with a detector track (track_r).

    Modes:
      per_frame     - cmf_frame applied independently at every frame
      per_video     - one branch decision on areas summed over all frames
      refined_only  - track_s verbatim
      detector_only - track_r verbatim
      always_union  - per-frame union
    """
    if len(track_s) != len(track_r):
        raise ShapeMismatchError(
            f"frame count mismatch: {len(track_s)} vs {len(track_r)}")
    for t, (a, b) in enumerate(zip(track_s.frames, track_r.frames)):
        if a.shape != b.shape:
            raise ShapeMismatchError(
                f"frame {t}: shape mismatch {a.shape} vs {b.shape}")
    mode = config.mode
    if mode == "refined_only":
        frames = [m.copy() for m in track_s.frames]
    elif mode == "detector_only":
        frames = [m.copy() for m in track_r.frames]
    elif mode == "always_union":
        frames = [union(a, b) for a, b in zip(track_s.frames, track_r.frames)]
    elif mode == "per_frame":
        frames = [cmf_frame(a, b, config.area_ratio)
                  for a, b in zip(track_s.frames, track_r.frames)]
    elif mode == "per_video":
        total_s = sum(area(m) for m in track_s.frames)
        total_r = sum(area(m) for m in track_r.frames)
        if total_s < config.area_ratio * total_r:
            frames = [union(a, b) for a, b in zip(track_s.frames, track_r.frames)]
        else:
            frames = [m.copy() for m in track_s.frames]
    else:
        raise ValidationError(f"unknown fusion mode {mode!r}")
    return MaskTrack(video_id=track_s.video_id,
                     expression_id=track_s.expression_id, frames=frames)
