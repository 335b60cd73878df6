import numpy as np
import pytest

from maskfuse import FusionConfig, cmf_frame, cmf_track, combine_candidates, \
    select_prompt
from maskfuse.errors import ShapeMismatchError, ValidationError
from maskfuse.interchange import MaskTrack
from maskfuse.masks import area, union


def blob(shape, n):
    """Mask with the first n pixels set in row-major order."""
    m = np.zeros(shape, bool).ravel()
    m[:n] = True
    return m.reshape(shape)


class TestCombineCandidates:
    def test_threshold_union(self):
        shape = (4, 4)
        a, b, c = blob(shape, 2), blob(shape, 5), blob(shape, 9)
        mask, score = combine_candidates([(a, 0.9), (b, 0.3), (c, 0.1)],
                                         0.275, shape)
        assert np.array_equal(mask, union(a, b))
        assert score == 0.9

    def test_top1_fallback_below_sigma(self):
        shape = (4, 4)
        a, b = blob(shape, 3), blob(shape, 8)
        mask, score = combine_candidates([(a, 0.2), (b, 0.1)], 0.5, shape)
        assert np.array_equal(mask, a)
        assert score == 0.2

    def test_empty_candidates(self):
        mask, score = combine_candidates([], 0.275, (4, 4))
        assert not mask.any() and score == 0.0

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatchError):
            combine_candidates([(np.zeros((2, 2), bool), 0.5)], 0.1, (3, 3))

    def test_monotone_in_sigma(self):
        rng = np.random.default_rng(40)
        shape = (8, 8)
        for _ in range(50):
            cands = [(rng.random(shape) < 0.4, float(rng.uniform(0, 1)))
                     for _ in range(int(rng.integers(1, 6)))]
            s1, s2 = sorted(rng.uniform(0, 1, size=2))
            lo, _ = combine_candidates(cands, s1, shape)
            hi, _ = combine_candidates(cands, s2, shape)
            assert not (hi & ~lo).any()


class TestSelectPrompt:
    def track(self, scores, shape=(3, 3)):
        return MaskTrack("v", "e", [blob(shape, i + 1) for i in range(len(scores))])

    def test_unique_argmax(self):
        sel = select_prompt(self.track([0.2, 0.9, 0.5]), [0.2, 0.9, 0.5])
        assert sel.frame_index == 1 and sel.score == 0.9

    def test_earliest_tie_break(self):
        sel = select_prompt(self.track([0.9, 0.9, 0.1]), [0.9, 0.9, 0.1])
        assert sel.frame_index == 0

    def test_all_zero(self):
        track = MaskTrack("v", "e", [np.zeros((3, 3), bool)] * 2)
        sel = select_prompt(track, [0.0, 0.0])
        assert sel.frame_index == 0 and not sel.mask.any()

    def test_empty_track(self):
        with pytest.raises(ValidationError):
            select_prompt(MaskTrack("v", "e", []), [])

    def test_argmax_property(self):
        rng = np.random.default_rng(41)
        for _ in range(30):
            scores = list(np.round(rng.uniform(0, 1, size=6), 2))
            sel = select_prompt(self.track(scores), scores)
            assert all(sel.score >= s for s in scores)
            assert all(scores[i] < sel.score for i in range(sel.frame_index))


class TestCmfFrame:
    def test_multi_object_branch(self):
        shape = (8, 8)
        m_s, m_r = blob(shape, 10), blob(shape, 30)
        out = cmf_frame(m_s, m_r, 2 / 3)
        assert np.array_equal(out, union(m_s, m_r))

    def test_equal_masks_keep_refined(self):
        m = blob((4, 4), 6)
        assert np.array_equal(cmf_frame(m, m, 2 / 3), m)

    def test_empty_refined_takes_union(self):
        shape = (4, 4)
        m_r = blob(shape, 5)
        out = cmf_frame(np.zeros(shape, bool), m_r, 2 / 3)
        assert np.array_equal(out, m_r)

    def test_output_superset_and_two_valued(self):
        rng = np.random.default_rng(42)
        for _ in range(100):
            shape = (6, 6)
            m_s = rng.random(shape) < 0.4
            m_r = rng.random(shape) < 0.4
            out = cmf_frame(m_s, m_r)
            assert not (m_s & ~out).any()
            assert area(out) >= area(m_s)
            assert np.array_equal(out, m_s) or \
                np.array_equal(out, union(m_s, m_r))

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatchError):
            cmf_frame(np.zeros((2, 2), bool), np.zeros((3, 3), bool))


def tracks_from(frames_s, frames_r):
    return (MaskTrack("v", "e", frames_s), MaskTrack("v", "e", frames_r))


class TestCmfTrack:
    def test_per_frame_independence(self):
        shape = (8, 8)
        # frame 0 triggers the ratio condition, frame 1 does not
        s = [blob(shape, 5), blob(shape, 30)]
        r = [blob(shape, 30), blob(shape, 30)]
        ts, tr = tracks_from(s, r)
        out = cmf_track(ts, tr, FusionConfig(mode="per_frame"))
        assert np.array_equal(out.frames[0], union(s[0], r[0]))
        assert np.array_equal(out.frames[1], s[1])

    def test_per_video_single_branch(self):
        shape = (8, 8)
        s = [blob(shape, 5), blob(shape, 60)]  # sum 65
        r = [blob(shape, 30), blob(shape, 60)]  # sum 90; 65 >= 60
        ts, tr = tracks_from(s, r)
        out = cmf_track(ts, tr, FusionConfig(mode="per_video"))
        assert np.array_equal(out.frames[0], s[0])
        assert np.array_equal(out.frames[1], s[1])

    def test_identical_tracks_all_modes(self):
        rng = np.random.default_rng(43)
        frames = [rng.random((5, 5)) < 0.5 for _ in range(3)]
        for mode in ("per_frame", "per_video", "refined_only", "detector_only",
                     "always_union"):
            ts, tr = tracks_from(frames, frames)
            out = cmf_track(ts, tr, FusionConfig(mode=mode))
            assert all(np.array_equal(a, b) for a, b in zip(out.frames, frames))

    def test_mode_dispatch(self):
        rng = np.random.default_rng(44)
        s = [rng.random((5, 5)) < 0.4 for _ in range(3)]
        r = [rng.random((5, 5)) < 0.4 for _ in range(3)]
        ts, tr = tracks_from(s, r)
        out = cmf_track(ts, tr, FusionConfig(mode="refined_only"))
        assert all(np.array_equal(a, b) for a, b in zip(out.frames, s))
        out = cmf_track(ts, tr, FusionConfig(mode="detector_only"))
        assert all(np.array_equal(a, b) for a, b in zip(out.frames, r))
        out = cmf_track(ts, tr, FusionConfig(mode="always_union"))
        assert all(np.array_equal(a, union(x, y))
                   for a, x, y in zip(out.frames, s, r))

    def test_frame_count_mismatch_names_offender(self):
        ts, tr = tracks_from([blob((3, 3), 1)], [blob((3, 3), 1)] * 2)
        with pytest.raises(ShapeMismatchError):
            cmf_track(ts, tr, FusionConfig())

    def test_dimension_mismatch_names_frame(self):
        ts = MaskTrack("v", "e", [blob((3, 3), 1), blob((3, 3), 1)])
        tr = MaskTrack("v", "e", [blob((3, 3), 1), blob((4, 4), 1)])
        with pytest.raises(ShapeMismatchError) as exc:
            cmf_track(ts, tr, FusionConfig())
        assert "frame 1" in str(exc.value)

    def test_per_frame_commutes_with_permutation(self):
        rng = np.random.default_rng(45)
        s = [rng.random((6, 6)) < 0.4 for _ in range(4)]
        r = [rng.random((6, 6)) < 0.4 for _ in range(4)]
        perm = [2, 0, 3, 1]
        ts, tr = tracks_from(s, r)
        out = cmf_track(ts, tr, FusionConfig(mode="per_frame"))
        tsp, trp = tracks_from([s[i] for i in perm], [r[i] for i in perm])
        outp = cmf_track(tsp, trp, FusionConfig(mode="per_frame"))
        for k, i in enumerate(perm):
            assert np.array_equal(outp.frames[k], out.frames[i])

    def test_ratio_degenerations(self):
        rng = np.random.default_rng(46)
        s = [rng.random((6, 6)) < 0.4 for _ in range(3)]
        r = [rng.random((6, 6)) < 0.4 for _ in range(3)]
        ts, tr = tracks_from(s, r)
        zero = cmf_track(ts, tr, FusionConfig(area_ratio=0.0, mode="per_frame"))
        assert all(np.array_equal(a, b) for a, b in zip(zero.frames, s))
        huge = cmf_track(ts, tr, FusionConfig(area_ratio=1e6, mode="per_frame"))
        want = cmf_track(ts, tr, FusionConfig(mode="always_union"))
        # ratio -> infinity only keeps m_s alone when m_r is empty, where
        # union(m_s, m_r) == m_s anyway
        assert all(np.array_equal(a, b)
                   for a, b in zip(huge.frames, want.frames))


def test_config_validation():
    FusionConfig().validate()
    with pytest.raises(ValidationError):
        FusionConfig(sigma=1.5).validate()
    with pytest.raises(ValidationError):
        FusionConfig(area_ratio=0.0).validate()
    with pytest.raises(ValidationError):
        FusionConfig(mode="nope").validate()
