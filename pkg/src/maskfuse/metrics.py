"""Region similarity J, boundary accuracy F and their J&F aggregation.

J is plain IoU (both-empty frames score 1). F is a boundary F-measure: the
two masks' 4-neighborhood contours are matched under a pixel-distance
tolerance of ceil(tolerance_frac * image diagonal), and precision/recall of
matched contour pixels are combined into 2PR/(P+R). Corpus-level numbers
are unweighted means over expressions, so every expression counts equally
regardless of video length.
"""

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ShapeMismatchError, ValidationError
from .interchange import (Manifest, MaskTrack, read_ground_truth, read_track)
from .masks import Mask, boundary_pixels, dilate, iou, require_same_shape

DEFAULT_TOLERANCE_FRAC = 0.008


def region_similarity_j(pred: Mask, gt: Mask) -> float:
    """IoU with the both-empty -> 1 convention."""
    return iou(pred, gt)


def boundary_radius(shape, tolerance_frac: float) -> int:
    h, w = shape
    return math.ceil(tolerance_frac * math.hypot(h, w))


def boundary_f(pred: Mask, gt: Mask,
               tolerance_frac: float = DEFAULT_TOLERANCE_FRAC,
               *, radius: int | None = None) -> float:
    """Boundary F-measure under a distance tolerance.

    Conventions: both boundaries empty -> 1; exactly one empty -> 0;
    P + R = 0 -> 0. Pass `radius` to override the diagonal-derived default.
    """
    require_same_shape(pred, gt, "boundary_f")
    if tolerance_frac < 0:
        raise ValidationError(f"tolerance_frac must be >= 0, got {tolerance_frac}")
    if radius is None:
        radius = boundary_radius(pred.shape, tolerance_frac)
    bp = boundary_pixels(pred)
    bg = boundary_pixels(gt)
    n_pred = int(np.count_nonzero(bp))
    n_gt = int(np.count_nonzero(bg))
    if n_pred == 0 and n_gt == 0:
        return 1.0
    if n_pred == 0 or n_gt == 0:
        return 0.0
    precision = np.count_nonzero(bp & dilate(bg, radius)) / n_pred
    recall = np.count_nonzero(bg & dilate(bp, radius)) / n_gt
    if precision + recall == 0:
        return 0.0
    return float(2 * precision * recall / (precision + recall))


@dataclass
class EvalRecord:
    video_id: str
    expression_id: str
    per_frame_j: list
    per_frame_f: list
    mean_j: float
    mean_f: float
    jf: float

    def to_dict(self) -> dict:
        return {"video_id": self.video_id, "expression_id": self.expression_id,
                "per_frame_j": self.per_frame_j, "per_frame_f": self.per_frame_f,
                "mean_j": self.mean_j, "mean_f": self.mean_f, "jf": self.jf}


@dataclass
class EvalReport:
    records: list
    corpus_j: float
    corpus_f: float
    corpus_jf: float
    config_echo: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"records": [r.to_dict() for r in self.records],
                "corpus_j": self.corpus_j, "corpus_f": self.corpus_f,
                "corpus_jf": self.corpus_jf, "config_echo": self.config_echo}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "EvalReport":
        records = [EvalRecord(**r) for r in d.get("records", [])]
        return cls(records=records, corpus_j=d["corpus_j"], corpus_f=d["corpus_f"],
                   corpus_jf=d["corpus_jf"], config_echo=d.get("config_echo", {}))


def eval_track(pred: MaskTrack, gt: MaskTrack,
               tolerance_frac: float = DEFAULT_TOLERANCE_FRAC) -> EvalRecord:
    if len(pred) != len(gt):
        raise ShapeMismatchError(
            f"{pred.video_id}/{pred.expression_id}: prediction has "
            f"{len(pred)} frames, ground truth {len(gt)}")
    js, fs = [], []
    for t, (p, g) in enumerate(zip(pred.frames, gt.frames)):
        if p.shape != g.shape:
            raise ShapeMismatchError(
                f"{pred.video_id}/{pred.expression_id} frame {t}: shape "
                f"mismatch {p.shape} vs {g.shape}")
        js.append(region_similarity_j(p, g))
        fs.append(boundary_f(p, g, tolerance_frac))
    mean_j = float(np.mean(js))
    mean_f = float(np.mean(fs))
    return EvalRecord(video_id=gt.video_id, expression_id=gt.expression_id,
                      per_frame_j=js, per_frame_f=fs,
                      mean_j=mean_j, mean_f=mean_f, jf=(mean_j + mean_f) / 2)


def eval_corpus(manifest: Manifest, corpus_root, predictions_root,
                tolerance_frac: float = DEFAULT_TOLERANCE_FRAC,
                jobs: int = 1, config_echo: dict | None = None) -> EvalReport:
    """Evaluate a prediction root against manifest ground truth.

    One EvalRecord per (video, expression), in (video_id, expression_id)
    order; the result is identical regardless of `jobs`.
    """
    pairs = manifest.pairs()
    for video, expr in pairs:
        if expr.ground_truth is None:
            raise ValidationError(
                f"video {video.video_id}, expression {expr.expression_id} "
                f"has no ground truth; cannot evaluate")

    def one(pair) -> EvalRecord:
        video, expr = pair
        gt = read_ground_truth(corpus_root, video, expr)
        pred = read_track(predictions_root, video.video_id, expr.expression_id,
                          video.frame_count)
        return eval_track(pred, gt, tolerance_frac)

    if jobs > 1 and len(pairs) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(one, pairs))
    else:
        records = [one(p) for p in pairs]
    records.sort(key=lambda r: (r.video_id, r.expression_id))
    return summarize(records, config_echo)


def summarize(records, config_echo: dict | None = None) -> EvalReport:
    if not records:
        raise ValidationError("cannot summarize an empty record list")
    corpus_j = float(np.mean([r.mean_j for r in records]))
    corpus_f = float(np.mean([r.mean_f for r in records]))
    corpus_jf = float(np.mean([r.jf for r in records]))
    return EvalReport(records=records, corpus_j=corpus_j, corpus_f=corpus_f,
                      corpus_jf=corpus_jf, config_echo=config_echo or {})


def render_comparison_table(rows) -> str:
    """Aligned plain-text table of (label, jf, j, f) rows; metric values are
    fractions in [0, 1], printed as percents with 2 decimals."""
    header = ("Method", "J&F", "J", "F")
    body = [(label, f"{jf * 100:.2f}", f"{j * 100:.2f}", f"{f * 100:.2f}")
            for label, jf, j, f in rows]
    widths = [max(len(r[i]) for r in [header] + body) for i in range(4)]
    lines = []
    fmt = ("{:<%d}  {:>%d}  {:>%d}  {:>%d}" % tuple(widths))
    lines.append(fmt.format(*header))
    lines.append("-" * (sum(widths) + 6))
    for row in body:
        lines.append(fmt.format(*row))
    return "\n".join(lines)


def render_report_table(report: EvalReport, label: str = "corpus") -> str:
    rows = [(f"{r.video_id}/{r.expression_id}", r.jf, r.mean_j, r.mean_f)
            for r in report.records]
    rows.append((label + " (mean)", report.corpus_jf, report.corpus_j,
                 report.corpus_f))
    return render_comparison_table(rows)


def load_report(path) -> EvalReport:
    return EvalReport.from_dict(json.loads(Path(path).read_text()))
