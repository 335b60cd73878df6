import json

import numpy as np
import pytest

from maskfuse.cli import main
from maskfuse.fusion import FusionConfig, cmf_track
from maskfuse.interchange import load_manifest, read_track
from maskfuse.pipeline import FUSED_TRACKS_DIR, REPORT_JSON


def run_cli(*argv):
    return main([str(a) for a in argv])


def synth(tmp_path, **kw):
    corpus = tmp_path / "corpus"
    detector = tmp_path / "detector"
    args = ["synth", "--corpus-out", corpus, "--detector-out", detector]
    defaults = {"scenes": 2, "frames": 4, "width": 64, "height": 64,
                "objects": 1, "seed": 0}
    defaults.update(kw)
    for k, v in defaults.items():
        args += [f"--{k.replace('_', '-')}", v]
    assert run_cli(*args) == 0
    return corpus, detector


def test_noise_free_single_object_perfect(tmp_path):
    corpus, detector = synth(tmp_path)
    out = tmp_path / "out"
    assert run_cli("run", "--corpus", corpus, "--detector", detector,
                   "--out", out, "--mode", "per_frame") == 0
    report = json.loads((out / REPORT_JSON).read_text())
    assert report["corpus_jf"] == 1.0
    assert report["config_echo"]["mode"] == "per_frame"


def test_missing_detector_inputs_exit_3(tmp_path, capsys):
    corpus, detector = synth(tmp_path)
    out = tmp_path / "out"
    assert run_cli("run", "--corpus", corpus,
                   "--detector", tmp_path / "nowhere", "--out", out) == 3
    err = capsys.readouterr().err
    assert "video000" in err


def test_bad_manifest_exit_2(tmp_path):
    corpus, detector = synth(tmp_path)
    path = corpus / "manifest.json"
    payload = json.loads(path.read_text())
    payload["videos"][0]["frame_count"] = 0
    payload["videos"][0]["expressions"][0]["ground_truth"] = []
    path.write_text(json.dumps(payload))
    assert run_cli("run", "--corpus", corpus, "--detector", detector,
                   "--out", tmp_path / "out") == 2


def test_output_root_must_differ(tmp_path):
    corpus, detector = synth(tmp_path)
    assert run_cli("run", "--corpus", corpus, "--detector", detector,
                   "--out", corpus) == 2


def test_mode_flags_match_library(tmp_path):
    corpus, detector = synth(tmp_path, scenes=1, objects=2, height=96,
                             jitter=1, seed=7)
    combined = tmp_path / "combined"
    refined = tmp_path / "refined"
    assert run_cli("combine", "--corpus", corpus, "--detector", detector,
                   "--out", combined) == 0
    assert run_cli("refine", "--corpus", corpus, "--combined", combined,
                   "--out", refined) == 0
    manifest = load_manifest(corpus)
    video, expr = manifest.pairs()[0]
    track_s = read_track(refined, video.video_id, expr.expression_id,
                         video.frame_count)
    track_r = read_track(combined, video.video_id, expr.expression_id,
                         video.frame_count)
    for mode in ("per_frame", "per_video", "refined_only", "detector_only",
                 "always_union"):
        out = tmp_path / f"fused_{mode}"
        assert run_cli("fuse", "--corpus", corpus, "--refined", refined,
                       "--detector", combined, "--out", out,
                       "--mode", mode) == 0
        got = read_track(out, video.video_id, expr.expression_id,
                         video.frame_count)
        want = cmf_track(track_s, track_r, FusionConfig(mode=mode))
        assert all(np.array_equal(a, b)
                   for a, b in zip(got.frames, want.frames))


def test_eval_and_report_subcommands(tmp_path, capsys):
    corpus, detector = synth(tmp_path)
    out = tmp_path / "out"
    assert run_cli("run", "--corpus", corpus, "--detector", detector,
                   "--out", out) == 0
    report_path = tmp_path / "rep.json"
    assert run_cli("eval", "--corpus", corpus, "--pred",
                   out / FUSED_TRACKS_DIR, "--out", report_path) == 0
    assert report_path.exists()
    capsys.readouterr()
    assert run_cli("report", report_path) == 0
    stdout = capsys.readouterr().out
    assert "J&F" in stdout and "100.00" in stdout


def test_config_file_and_flag_precedence(tmp_path):
    corpus, detector = synth(tmp_path)
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"mode": "detector_only", "sigma": 0.4}))
    out = tmp_path / "out"
    assert run_cli("run", "--corpus", corpus, "--detector", detector,
                   "--out", out, "--config", cfg, "--mode", "refined_only") == 0
    echo = json.loads((out / REPORT_JSON).read_text())["config_echo"]
    assert echo["mode"] == "refined_only"  # flag beats file
    assert echo["sigma"] == 0.4            # file beats default


def test_unknown_config_key_rejected(tmp_path):
    corpus, detector = synth(tmp_path)
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"sigmaa": 0.4}))
    assert run_cli("run", "--corpus", corpus, "--detector", detector,
                   "--out", tmp_path / "out", "--config", cfg) == 2


def test_external_refiner_root(tmp_path):
    corpus, detector = synth(tmp_path, scenes=1)
    out1 = tmp_path / "out1"
    assert run_cli("run", "--corpus", corpus, "--detector", detector,
                   "--out", out1) == 0
    # feed the stub's refined tracks back in as "external" outputs
    out2 = tmp_path / "out2"
    assert run_cli("run", "--corpus", corpus, "--detector", detector,
                   "--refiner", out1 / "refined", "--out", out2) == 0
    r1 = json.loads((out1 / REPORT_JSON).read_text())
    r2 = json.loads((out2 / REPORT_JSON).read_text())
    assert r1["corpus_jf"] == r2["corpus_jf"]
