"""Batch exporter script.

Input layout, one directory per (video, expression) under the input root:

    <in>/<video_id>/<expression_id>/masks.npy
    <in>/<video_id>/<expression_id>/scores.json   (detector kind only)

For detector outputs masks.npy has shape (T, K, H, W) (K candidates per
frame, binary or probability grids) and scores.json holds T lists of K
scores in [0, 1]. For refiner outputs masks.npy has shape (T, H, W).

Usage:
    mask-export --kind detector --input RAW_DIR --output CORPUS_ROOT
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .export import ExportError, ExportJob, export_outputs


def _jobs_from_dir(kind: str, input_root: Path, target_root: Path):
    found = False
    for mask_file in sorted(input_root.glob("*/*/masks.npy")):
        expr_dir = mask_file.parent
        video_id = expr_dir.parent.name
        expression_id = expr_dir.name
        arr = np.load(mask_file)
        if kind == "detector":
            if arr.ndim != 4:
                raise ExportError(
                    f"{video_id}/{expression_id}: detector masks.npy must be "
                    f"(T, K, H, W), got shape {arr.shape}")
            scores_file = expr_dir / "scores.json"
            if not scores_file.exists():
                raise ExportError(
                    f"{video_id}/{expression_id}: missing {scores_file}")
            scores = json.loads(scores_file.read_text())
            if len(scores) != arr.shape[0]:
                raise ExportError(
                    f"{video_id}/{expression_id}: {len(scores)} score rows "
                    f"for {arr.shape[0]} frames")
            frames = [list(zip(arr[t], scores[t])) for t in range(arr.shape[0])]
            h, w = arr.shape[2], arr.shape[3]
        else:
            if arr.ndim != 3:
                raise ExportError(
                    f"{video_id}/{expression_id}: refiner masks.npy must be "
                    f"(T, H, W), got shape {arr.shape}")
            frames = list(arr)
            h, w = arr.shape[1], arr.shape[2]
        found = True
        yield ExportJob(kind=kind, video_id=video_id,
                        expression_id=expression_id, width=w, height=h,
                        frames=frames, target_root=target_root)
    if not found:
        raise ExportError(f"no */*/masks.npy found under {input_root}")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="mask-export",
        description="Serialize model outputs into the interchange format")
    parser.add_argument("--kind", choices=("detector", "refiner"),
                        required=True)
    parser.add_argument("--input", type=Path, required=True,
                        help="root of raw model outputs")
    parser.add_argument("--output", type=Path, required=True,
                        help="interchange corpus root to write")
    args = parser.parse_args(argv)
    try:
        n = 0
        for job in _jobs_from_dir(args.kind, args.input, args.output):
            export_outputs(job)
            n += 1
    except ExportError as exc:
        print(f"export error: {exc}", file=sys.stderr)
        return 1
    print(f"exported {n} (video, expression) pair(s) -> {args.output}",
          file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
