"""Deterministic stand-in for a prompt-based mask refiner, plus the seeded
synthetic-scene generator.

IMPORTANT: `propagate` is NOT a segmentation model and makes no claim of
fidelity to any real refiner. It deliberately reproduces the worst-case
single-object collapse: the prompt is reduced to its largest connected
component and exactly one component is tracked through the video. Its sole
purpose is falsifiable end-to-end testing of the fusion stage, which exists
to counteract precisely this failure mode.

Scenes are generated with numpy's PCG64 generator under an explicit seed,
which is specified to produce identical streams across platforms, so
fixed-argument scenes are bit-identical everywhere.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .fusion import PromptSelection
from .interchange import MaskTrack, ScoredCandidateSet
from .masks import Mask, connected_components, dilate, erode, iou

DEFAULT_TAU_TRACK = 0.1


def propagate(prompt: PromptSelection, detector_track: MaskTrack,
              tau_track: float = DEFAULT_TAU_TRACK) -> MaskTrack:
    """Emulate prompt-based propagation with forced single-object collapse.

    The prompt frame keeps only the largest connected component of the
    prompt mask. Sweeping forward then backward from the prompt frame, each
    frame takes the connected component of the detector mask with maximum
    IoU against the previous refined frame; when that IoU falls below
    tau_track (or the detector frame is empty) the previous mask is carried
    over. Fully deterministic.
    """
    n = len(detector_track)
    if n == 0:
        raise ValidationError("detector track is empty")
    p = prompt.frame_index
    if not 0 <= p < n:
        raise ValidationError(
            f"prompt frame {p} out of range for a {n}-frame track")

    refined: list = [None] * n
    comps = connected_components(prompt.mask)
    refined[p] = comps[0] if comps else np.zeros_like(prompt.mask)

    def step(t: int, prev: Mask) -> Mask:
        comps = connected_components(detector_track.frames[t])
        if not comps:
            return prev.copy()
        ious = [iou(c, prev) for c in comps]
        best = max(range(len(comps)), key=lambda i: (ious[i], -i))
        if ious[best] < tau_track:
            return prev.copy()
        return comps[best]

    for t in range(p + 1, n):
        refined[t] = step(t, refined[t - 1])
    for t in range(p - 1, -1, -1):
        refined[t] = step(t, refined[t + 1])
    return MaskTrack(video_id=detector_track.video_id,
                     expression_id=detector_track.expression_id,
                     frames=refined)


# ---------------------------------------------------------------------------
# Synthetic scenes


@dataclass(frozen=True)
class NoiseParams:
    jitter_radius: int = 0      # per-candidate dilation/erosion, +/- pixels
    spurious_rate: float = 0.0  # probability of an extra junk candidate per frame
    score_noise: float = 0.0    # stddev of Gaussian noise added to scores

    def to_dict(self) -> dict:
        return {"jitter_radius": self.jitter_radius,
                "spurious_rate": self.spurious_rate,
                "score_noise": self.score_noise}


@dataclass
class SceneObject:
    shape: str                  # "rectangle" | "ellipse"
    half_extents: tuple         # (hy, hx)
    centers: list               # per-frame (row, col)
    referred: bool


@dataclass
class SyntheticScene:
    seed: int
    frames: int
    width: int
    height: int
    objects: list
    gt_track: MaskTrack = field(repr=False)
    candidate_sets: list = field(repr=False)  # per-frame ScoredCandidateSet
    noise: NoiseParams = NoiseParams()

    def params(self) -> dict:
        return {"seed": self.seed, "frames": self.frames, "width": self.width,
                "height": self.height,
                "n_referred": sum(1 for o in self.objects if o.referred),
                "n_distractors": sum(1 for o in self.objects if not o.referred),
                "noise": self.noise.to_dict()}


def _rasterize(obj: SceneObject, t: int, height: int, width: int) -> Mask:
    cy, cx = obj.centers[t]
    hy, hx = obj.half_extents
    m = np.zeros((height, width), dtype=bool)
    if obj.shape == "rectangle":
        m[max(0, cy - hy): cy + hy + 1, max(0, cx - hx): cx + hx + 1] = True
    else:
        ys, xs = np.mgrid[0:height, 0:width]
        m = ((ys - cy) / hy) ** 2 + ((xs - cx) / hx) ** 2 <= 1.0
    return m


def generate_scene(seed: int, frames: int, width: int, height: int,
                   n_referred: int, n_distractors: int = 0,
                   noise: NoiseParams = NoiseParams(),
                   video_id: str = "video", expression_id: str = "expr",
                   ) -> SyntheticScene:
    """Build a deterministic scene of moving rectangles/ellipses.

    Each object lives in its own horizontal band, so objects never touch and
    a scene with k visible objects has exactly k connected components per
    frame. Referred objects share one shape and one size per scene (keeping
    their areas comparable); their noisy candidates score above 0.5 before
    score noise, distractor and spurious candidates below 0.5. Ground truth
    is the exact union of the referred objects.
    """
    if width < 16 or height < 16:
        raise ValidationError(f"dimensions must be >= 16, got {width}x{height}")
    if frames < 1:
        raise ValidationError(f"frames must be >= 1, got {frames}")
    if n_referred < 1 or n_distractors < 0:
        raise ValidationError("need n_referred >= 1 and n_distractors >= 0")
    n_objects = n_referred + n_distractors
    band_h = height // n_objects
    if band_h < 12:
        raise ValidationError(
            f"{n_objects} objects need height >= {12 * n_objects}, got {height}")

    rng = np.random.Generator(np.random.PCG64(seed))
    jitter = noise.jitter_radius
    margin = jitter + 1

    referred_shape = "rectangle" if rng.random() < 0.5 else "ellipse"
    ref_hy = int(round(band_h * rng.uniform(0.28, 0.34)))
    ref_hx = int(round(width * rng.uniform(0.09, 0.12)))

    objects = []
    for k in range(n_objects):
        referred = k < n_referred
        if referred:
            shape, hy, hx = referred_shape, ref_hy, ref_hx
        else:
            shape = "rectangle" if rng.random() < 0.5 else "ellipse"
            hy = int(rng.integers(2, max(3, band_h // 6) + 1))
            hx = int(rng.integers(2, max(3, width // 14) + 1))
        lo_y = k * band_h + hy + margin
        hi_y = (k + 1) * band_h - hy - margin - 1
        lo_x = hx + margin
        hi_x = width - hx - margin - 1
        if lo_y > hi_y or lo_x > hi_x:
            raise ValidationError(
                f"object {k} (half extents {hy}x{hx}) does not fit its band")
        cy = int(rng.integers(lo_y, hi_y + 1))
        cx = int(rng.integers(lo_x, hi_x + 1))
        vy = int(rng.integers(-3, 4))
        vx = int(rng.integers(-3, 4))
        centers = []
        for t in range(frames):
            centers.append((int(np.clip(cy + vy * t, lo_y, hi_y)),
                            int(np.clip(cx + vx * t, lo_x, hi_x))))
        objects.append(SceneObject(shape=shape, half_extents=(hy, hx),
                                   centers=centers, referred=referred))

    gt_frames = []
    candidate_sets = []
    for t in range(frames):
        gt = np.zeros((height, width), dtype=bool)
        cands = []
        for obj in objects:
            m = _rasterize(obj, t, height, width)
            if obj.referred:
                gt |= m
            noisy = m
            if jitter > 0:
                j = int(rng.integers(-jitter, jitter + 1))
                if j > 0:
                    noisy = dilate(m, j)
                elif j < 0:
                    eroded = erode(m, -j)
                    noisy = eroded if eroded.any() else m
            base = rng.uniform(0.55, 0.95) if obj.referred else rng.uniform(0.05, 0.45)
            score = base
            if noise.score_noise > 0:
                score += rng.normal(0.0, noise.score_noise)
            cands.append((noisy, float(np.clip(score, 0.0, 1.0))))
        if noise.spurious_rate > 0 and rng.random() < noise.spurious_rate:
            hy = int(rng.integers(1, 4))
            hx = int(rng.integers(1, 4))
            cy = int(rng.integers(hy, height - hy))
            cx = int(rng.integers(hx, width - hx))
            blob = np.zeros((height, width), dtype=bool)
            blob[cy - hy: cy + hy + 1, cx - hx: cx + hx + 1] = True
            score = rng.uniform(0.05, 0.45)
            if noise.score_noise > 0:
                score += rng.normal(0.0, noise.score_noise)
            cands.append((blob, float(np.clip(score, 0.0, 1.0))))
        gt_frames.append(gt)
        candidate_sets.append(ScoredCandidateSet(frame_index=t, candidates=cands))

    gt_track = MaskTrack(video_id=video_id, expression_id=expression_id,
                         frames=gt_frames)
    return SyntheticScene(seed=seed, frames=frames, width=width, height=height,
                          objects=objects, gt_track=gt_track,
                          candidate_sets=candidate_sets, noise=noise)
