"""Command-line entry point.

Subcommands: synth, combine, refine, fuse, eval, report, run. Each stage is
independently invokable on persisted intermediates, so external model
outputs can replace any stage. Diagnostics go to stderr; machine-readable
results land in files, keeping stdout scriptable.

Exit codes: 0 success, 2 validation error, 3 missing inputs, 4 internal
error.
"""

import argparse
import json
import sys
from pathlib import Path

from .errors import MissingInputError, ShapeMismatchError, ValidationError
from .fusion import DEFAULT_AREA_RATIO, DEFAULT_SIGMA, MODES, FusionConfig
from .metrics import (DEFAULT_TOLERANCE_FRAC, eval_corpus, load_report,
                      render_comparison_table, render_report_table)
from .interchange import load_manifest
from .pipeline import (PipelineRun, _foreach_pair, combine_pair, fuse_pair,
                       refine_pair, run_pipeline, synth_corpus)
from .refiner import DEFAULT_TAU_TRACK, NoiseParams

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_MISSING = 3
EXIT_INTERNAL = 4

CONFIG_KEYS = ("sigma", "ratio", "mode", "tolerance_frac", "tau_track",
               "seed", "jobs")


def _log(msg: str) -> None:
    print(msg, file=sys.stderr)


def _add_fusion_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--sigma", type=float, default=None,
                   help=f"candidate score threshold (default {DEFAULT_SIGMA})")
    p.add_argument("--ratio", type=float, default=None,
                   help="area-ratio constant for fusion (default 2/3 = 0.6667)")
    p.add_argument("--mode", choices=MODES, default=None,
                   help="fusion mode (default per_frame)")
    p.add_argument("--tolerance-frac", type=float, default=None,
                   help=f"boundary tolerance as a fraction of the image "
                        f"diagonal (default {DEFAULT_TOLERANCE_FRAC})")
    p.add_argument("--tau-track", type=float, default=None,
                   help=f"stub tracker IoU carry-over threshold "
                        f"(default {DEFAULT_TAU_TRACK})")
    p.add_argument("--jobs", type=int, default=None,
                   help="parallelism degree across (video, expression) pairs "
                        "(default 1)")
    p.add_argument("--config", type=Path, default=None,
                   help="JSON config file overriding the built-in defaults; "
                        "explicit flags override the file")


def _resolve(args) -> dict:
    """Merge defaults < config file < explicit flags."""
    merged = {"sigma": DEFAULT_SIGMA, "ratio": DEFAULT_AREA_RATIO,
              "mode": "per_frame", "tolerance_frac": DEFAULT_TOLERANCE_FRAC,
              "tau_track": DEFAULT_TAU_TRACK, "seed": 0, "jobs": 1}
    cfg_path = getattr(args, "config", None)
    if cfg_path is not None:
        if not cfg_path.exists():
            raise MissingInputError(f"config file not found: {cfg_path}")
        try:
            file_cfg = json.loads(cfg_path.read_text())
        except json.JSONDecodeError as exc:
            raise ValidationError(f"unparseable config {cfg_path}: {exc}")
        unknown = set(file_cfg) - set(CONFIG_KEYS)
        if unknown:
            raise ValidationError(f"unknown config keys {sorted(unknown)}")
        merged.update(file_cfg)
    for key in CONFIG_KEYS:
        v = getattr(args, key, None)
        if v is not None:
            merged[key] = v
    return merged


def _fusion_config(merged: dict) -> FusionConfig:
    return FusionConfig(sigma=merged["sigma"], area_ratio=merged["ratio"],
                        mode=merged["mode"]).validate()


# ---------------------------------------------------------------------------
# Subcommands


def cmd_synth(args) -> int:
    merged = _resolve(args)
    noise = NoiseParams(jitter_radius=args.jitter, spurious_rate=args.spurious_rate,
                        score_noise=args.score_noise)
    synth_corpus(args.corpus_out, args.detector_out, n_scenes=args.scenes,
                 frames=args.frames, width=args.width, height=args.height,
                 n_referred=args.objects, n_distractors=args.distractors,
                 noise=noise, seed=int(merged["seed"]))
    _log(f"wrote {args.scenes} scene(s): corpus={args.corpus_out} "
         f"detector={args.detector_out}")
    return EXIT_OK


def cmd_combine(args) -> int:
    merged = _resolve(args)
    manifest = load_manifest(args.corpus)
    _foreach_pair(manifest, int(merged["jobs"]), "combine",
                  lambda v, e: combine_pair(v, e, args.detector, args.out,
                                            merged["sigma"]))
    _log(f"combined candidates -> {args.out}")
    return EXIT_OK


def cmd_refine(args) -> int:
    merged = _resolve(args)
    manifest = load_manifest(args.corpus)
    _foreach_pair(manifest, int(merged["jobs"]), "refine",
                  lambda v, e: refine_pair(v, e, args.combined, args.out,
                                           merged["tau_track"]))
    _log(f"refined tracks -> {args.out}")
    return EXIT_OK


def cmd_fuse(args) -> int:
    merged = _resolve(args)
    config = _fusion_config(merged)
    manifest = load_manifest(args.corpus)
    _foreach_pair(manifest, int(merged["jobs"]), "fuse",
                  lambda v, e: fuse_pair(v, e, args.refined, args.detector,
                                         args.out, config))
    _log(f"fused tracks ({config.mode}) -> {args.out}")
    return EXIT_OK


def cmd_eval(args) -> int:
    merged = _resolve(args)
    manifest = load_manifest(args.corpus)
    report = eval_corpus(manifest, Path(args.corpus), args.pred,
                         tolerance_frac=merged["tolerance_frac"],
                         jobs=int(merged["jobs"]),
                         config_echo={"tolerance_frac": merged["tolerance_frac"],
                                      "pred_root": str(args.pred)})
    args.out.parent.mkdir(parents=True, exist_ok=True)
    args.out.write_text(report.to_json())
    _log(render_report_table(report))
    _log(f"report -> {args.out}")
    return EXIT_OK


def cmd_report(args) -> int:
    rows = []
    for path in args.reports:
        rep = load_report(path)
        p = Path(path)
        label = "corpus" if len(args.reports) == 1 else \
            (f"{p.parent.name}/{p.stem}" if p.parent.name else p.stem)
        rows.append((label, rep.corpus_jf, rep.corpus_j, rep.corpus_f))
    print(render_comparison_table(rows))
    return EXIT_OK


def cmd_run(args) -> int:
    merged = _resolve(args)
    run = PipelineRun(corpus_root=Path(args.corpus),
                      detector_root=Path(args.detector),
                      refiner_root=Path(args.refiner) if args.refiner else None,
                      output_root=Path(args.out),
                      config=_fusion_config(merged),
                      tolerance_frac=merged["tolerance_frac"],
                      tau_track=merged["tau_track"],
                      jobs=int(merged["jobs"]))
    report = run_pipeline(run)
    if report is None:
        _log("no ground truth in manifest; fused tracks written, no report")
    else:
        _log(render_report_table(report))
        _log(f"outputs -> {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="maskfuse",
        description="Mask-stream fusion and J/F evaluation toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a seeded synthetic corpus")
    p.add_argument("--corpus-out", type=Path, required=True)
    p.add_argument("--detector-out", type=Path, required=True)
    p.add_argument("--scenes", type=int, default=1)
    p.add_argument("--frames", type=int, default=8)
    p.add_argument("--width", type=int, default=128)
    p.add_argument("--height", type=int, default=128)
    p.add_argument("--objects", type=int, default=1, help="referred objects")
    p.add_argument("--distractors", type=int, default=0)
    p.add_argument("--jitter", type=int, default=0)
    p.add_argument("--spurious-rate", type=float, default=0.0)
    p.add_argument("--score-noise", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=None)
    _add_fusion_flags(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("combine", help="threshold-combine candidate sets")
    p.add_argument("--corpus", type=Path, required=True)
    p.add_argument("--detector", type=Path, required=True,
                   help="root holding candidates.json files")
    p.add_argument("--out", type=Path, required=True)
    _add_fusion_flags(p)
    p.set_defaults(func=cmd_combine)

    p = sub.add_parser("refine", help="run the stub refiner on combined tracks")
    p.add_argument("--corpus", type=Path, required=True)
    p.add_argument("--combined", type=Path, required=True,
                   help="output root of the combine stage")
    p.add_argument("--out", type=Path, required=True)
    _add_fusion_flags(p)
    p.set_defaults(func=cmd_refine)

    p = sub.add_parser("fuse", help="conditional mask fusion of two track roots")
    p.add_argument("--corpus", type=Path, required=True)
    p.add_argument("--refined", type=Path, required=True)
    p.add_argument("--detector", type=Path, required=True,
                   help="combined detector track root")
    p.add_argument("--out", type=Path, required=True)
    _add_fusion_flags(p)
    p.set_defaults(func=cmd_fuse)

    p = sub.add_parser("eval", help="score a prediction root against ground truth")
    p.add_argument("--corpus", type=Path, required=True)
    p.add_argument("--pred", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True, help="report JSON path")
    _add_fusion_flags(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("report", help="render report JSON(s) as a comparison table")
    p.add_argument("reports", nargs="+", type=Path)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("run", help="composite combine/refine/fuse/eval pipeline")
    p.add_argument("--corpus", type=Path, required=True)
    p.add_argument("--detector", type=Path, required=True)
    p.add_argument("--refiner", type=Path, default=None,
                   help="external refined track root (skips the stub)")
    p.add_argument("--out", type=Path, required=True)
    _add_fusion_flags(p)
    p.set_defaults(func=cmd_run)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except MissingInputError as exc:
        _log(f"error (missing input): {exc}")
        return EXIT_MISSING
    except FileNotFoundError as exc:
        _log(f"error (missing input): {exc}")
        return EXIT_MISSING
    except (ValidationError, ShapeMismatchError) as exc:
        _log(f"error (validation): {exc}")
        return EXIT_VALIDATION
    except Exception as exc:  # pragma: no cover - internal invariant breach
        _log(f"error (internal): {type(exc).__name__}: {exc}")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
