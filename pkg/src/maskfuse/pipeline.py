"""Corpus-level orchestration: synthetic corpus generation and the
combine -> refine -> fuse -> eval pipeline over interchange directories.

Every stage reads and writes the interchange layout, so any stage can be
replaced by externally produced files (e.g. a real refiner's exported
tracks). Identical inputs and config produce byte-identical outputs,
regardless of the parallelism degree.
"""

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .errors import MaskFuseError, ValidationError
from .fusion import (FusionConfig, cmf_track, combine_candidates, select_prompt)
from .interchange import (ExpressionEntry, Manifest, MaskTrack, VideoEntry,
                          frame_filename, load_manifest, read_candidates,
                          read_track, track_dir, write_candidates, write_mask,
                          write_track, save_manifest)
from .metrics import (DEFAULT_TOLERANCE_FRAC, EvalReport, eval_corpus,
                      render_report_table)
from .refiner import (DEFAULT_TAU_TRACK, NoiseParams, generate_scene, propagate)

COMBINED_SCORES_NAME = "combined_scores.json"
DETECTOR_TRACKS_DIR = "detector"
REFINED_TRACKS_DIR = "refined"
FUSED_TRACKS_DIR = "fused"
REPORT_JSON = "report.json"
REPORT_TXT = "report.txt"


@dataclass
class PipelineRun:
    corpus_root: Path
    detector_root: Path
    output_root: Path
    refiner_root: Path | None = None   # external refined tracks; stub if None
    config: FusionConfig = field(default_factory=FusionConfig)
    tolerance_frac: float = DEFAULT_TOLERANCE_FRAC
    tau_track: float = DEFAULT_TAU_TRACK
    jobs: int = 1

    def validate(self) -> "PipelineRun":
        self.config.validate()
        inputs = {Path(self.corpus_root).resolve(),
                  Path(self.detector_root).resolve()}
        if self.refiner_root is not None:
            inputs.add(Path(self.refiner_root).resolve())
        if Path(self.output_root).resolve() in inputs:
            raise ValidationError("output root must be distinct from input roots")
        if self.jobs < 1:
            raise ValidationError(f"jobs must be >= 1, got {self.jobs}")
        return self

    def echo(self) -> dict:
        return {**self.config.to_dict(),
                "tolerance_frac": self.tolerance_frac,
                "tau_track": self.tau_track,
                "external_refiner": self.refiner_root is not None}


def _foreach_pair(manifest: Manifest, jobs: int, stage: str, fn) -> list:
    pairs = manifest.pairs()

    def wrapped(pair):
        video, expr = pair
        try:
            return fn(video, expr)
        except MaskFuseError as exc:
            # re-raise the same type so exit-code mapping survives, with the
            # stage and pair prepended
            raise type(exc)(
                f"stage {stage}, video {video.video_id}, expression "
                f"{expr.expression_id}: {exc}") from exc

    if jobs > 1 and len(pairs) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(wrapped, pairs))
    return [wrapped(p) for p in pairs]


# ---------------------------------------------------------------------------
# Stages


def combine_pair(video: VideoEntry, expr: ExpressionEntry, detector_root,
                 out_root, sigma: float) -> tuple[MaskTrack, list]:
    """Threshold-combine the candidate sets of one (video, expression) into a
    detector track plus per-frame combined scores, persisted under out_root."""
    frames = read_candidates(detector_root, video.video_id, expr.expression_id)
    if len(frames) != video.frame_count:
        raise ValidationError(
            f"{video.video_id}/{expr.expression_id}: candidate file has "
            f"{len(frames)} frames, manifest says {video.frame_count}")
    shape = (video.height, video.width)
    masks, scores = [], []
    for cs in frames:
        m, s = combine_candidates(cs.candidates, sigma, shape)
        masks.append(m)
        scores.append(s)
    track = MaskTrack(video_id=video.video_id, expression_id=expr.expression_id,
                      frames=masks)
    write_track(track, out_root)
    scores_path = track_dir(out_root, video.video_id, expr.expression_id) \
        / COMBINED_SCORES_NAME
    scores_path.write_text(json.dumps({"combined_scores": scores}, indent=2))
    return track, scores


def read_combined_scores(root, video_id: str, expression_id: str) -> list:
    path = track_dir(root, video_id, expression_id) / COMBINED_SCORES_NAME
    if not path.exists():
        raise ValidationError(
            f"combined scores not found for {video_id}/{expression_id}: {path}")
    return json.loads(path.read_text())["combined_scores"]


def refine_pair(video: VideoEntry, expr: ExpressionEntry, combined_root,
                out_root, tau_track: float) -> MaskTrack:
    track = read_track(combined_root, video.video_id, expr.expression_id,
                       video.frame_count)
    scores = read_combined_scores(combined_root, video.video_id,
                                  expr.expression_id)
    prompt = select_prompt(track, scores)
    refined = propagate(prompt, track, tau_track)
    write_track(refined, out_root)
    return refined


def fuse_pair(video: VideoEntry, expr: ExpressionEntry, refined_root,
              detector_root, out_root, config: FusionConfig) -> MaskTrack:
    track_s = read_track(refined_root, video.video_id, expr.expression_id,
                         video.frame_count)
    track_r = read_track(detector_root, video.video_id, expr.expression_id,
                         video.frame_count)
    fused = cmf_track(track_s, track_r, config)
    write_track(fused, out_root)
    return fused


def run_pipeline(run: PipelineRun) -> EvalReport | None:
    """Execute the full pipeline; returns the report when the manifest has
    ground truth, else None (tracks are still persisted)."""
    run.validate()
    manifest = load_manifest(run.corpus_root)
    out = Path(run.output_root)
    combined_root = out / DETECTOR_TRACKS_DIR
    refined_root = Path(run.refiner_root) if run.refiner_root is not None \
        else out / REFINED_TRACKS_DIR
    fused_root = out / FUSED_TRACKS_DIR

    _foreach_pair(manifest, run.jobs, "combine",
                  lambda v, e: combine_pair(v, e, run.detector_root,
                                            combined_root, run.config.sigma))
    if run.refiner_root is None:
        _foreach_pair(manifest, run.jobs, "refine",
                      lambda v, e: refine_pair(v, e, combined_root,
                                               refined_root, run.tau_track))
    _foreach_pair(manifest, run.jobs, "fuse",
                  lambda v, e: fuse_pair(v, e, refined_root, combined_root,
                                         fused_root, run.config))

    has_gt = all(e.ground_truth is not None
                 for _, e in manifest.pairs())
    if not has_gt:
        return None
    report = eval_corpus(manifest, run.corpus_root, fused_root,
                         tolerance_frac=run.tolerance_frac, jobs=run.jobs,
                         config_echo=run.echo())
    (out / REPORT_JSON).write_text(report.to_json())
    (out / REPORT_TXT).write_text(render_report_table(report) + "\n")
    return report


# ---------------------------------------------------------------------------
# Synthetic corpus generation


def synth_corpus(corpus_root, detector_root, n_scenes: int, frames: int,
                 width: int, height: int, n_referred: int,
                 n_distractors: int = 0, noise: NoiseParams = NoiseParams(),
                 seed: int = 0) -> Manifest:
    """Generate `n_scenes` scenes (one video + one expression each), writing
    ground truth + manifest under corpus_root and candidate files under
    detector_root. Scene i uses seed `seed + i`."""
    corpus_root = Path(corpus_root)
    detector_root = Path(detector_root)
    manifest = Manifest()
    for i in range(n_scenes):
        video_id = f"video{i:03d}"
        expression_id = "expr000"
        scene = generate_scene(seed + i, frames, width, height, n_referred,
                               n_distractors, noise, video_id=video_id,
                               expression_id=expression_id)
        gt_refs = []
        for t, m in enumerate(scene.gt_track.frames):
            rel = f"{video_id}/{expression_id}/{frame_filename(t)}"
            write_mask(m, corpus_root / rel)
            gt_refs.append(rel)
        write_candidates(video_id, expression_id, width, height,
                         scene.candidate_sets, detector_root)
        text = (f"the {n_referred} moving object(s) among "
                f"{n_referred + n_distractors}")
        manifest.videos.append(VideoEntry(
            video_id=video_id, frame_count=frames, width=width, height=height,
            expressions=[ExpressionEntry(expression_id=expression_id, text=text,
                                         ground_truth=gt_refs)]))
    save_manifest(manifest, corpus_root)
    meta = {"n_scenes": n_scenes, "frames": frames, "width": width,
            "height": height, "n_referred": n_referred,
            "n_distractors": n_distractors, "noise": noise.to_dict(),
            "seed": seed, "rng": "numpy PCG64, scene i seeded with seed+i"}
    (corpus_root / "generator_params.json").write_text(
        json.dumps(meta, indent=2, sort_keys=True))
    return manifest
