import numpy as np
import pytest

from stenokit.geometry import Box
from stenokit.tracking import CorrelationTracker, TrackerParams, propagate

from motion_fixtures import noise_frame, textured_scene


def make_box(cx, cy, w=20, h=24):
    return Box(cx, cy, w, h)


class TestInit:
    def test_self_response_peaks_at_center(self):
        render, (cx, cy) = textured_scene(seed=1)
        frame = render()
        tracker = CorrelationTracker(frame, make_box(cx, cy))
        resp = tracker.response(frame)
        peak = np.unravel_index(np.argmax(resp), resp.shape)
        assert peak == (tracker.win_h // 2, tracker.win_w // 2)

    def test_flat_frame_filter_finite(self):
        frame = np.full((64, 64), 42.0)
        tracker = CorrelationTracker(frame, make_box(32, 32))
        assert all(np.all(np.isfinite(n)) for n in tracker._num)
        assert all(np.all(np.isfinite(d)) for d in tracker._den)
        result = tracker.update(np.full((64, 64), 42.0))
        assert np.isfinite(result.psr)

    def test_blob_psr_exceeds_noise_psr(self):
        render, (cx, cy) = textured_scene(seed=2)
        frame = render()
        t1 = CorrelationTracker(frame, make_box(cx, cy))
        psr_self = t1.update(render()).psr
        t2 = CorrelationTracker(frame, make_box(cx, cy))
        psr_noise = t2.update(noise_frame(seed=2)).psr
        assert psr_self > psr_noise

    def test_box_outside_frame_rejected(self):
        frame = np.zeros((32, 32))
        with pytest.raises(ValueError):
            CorrelationTracker(frame, make_box(30, 30, 10, 10))

    def test_channel_weights_normalized(self):
        render, (cx, cy) = textured_scene(seed=3)
        tracker = CorrelationTracker(render(), make_box(cx, cy))
        assert tracker.channel_weights.sum() == pytest.approx(1.0)
        assert np.all(tracker.channel_weights >= 0)


class TestUpdate:
    def test_stationary_target(self):
        render, (cx, cy) = textured_scene(seed=4)
        frame = render()
        tracker = CorrelationTracker(frame, make_box(cx, cy))
        result = tracker.update(frame.copy())
        assert abs(result.box.cx - cx) <= 0.5
        assert abs(result.box.cy - cy) <= 0.5
        assert not result.flagged

    @pytest.mark.parametrize("shift", [(3, -2), (8, 0), (-5, 7), (0, -8)])
    def test_integer_translation_recovered(self, shift):
        render, (cx, cy) = textured_scene(seed=5)
        tracker = CorrelationTracker(render(), make_box(cx, cy))
        result = tracker.update(render(shift=shift))
        assert abs(result.box.cx - (cx + shift[0])) <= 1.0
        assert abs(result.box.cy - (cy + shift[1])) <= 1.0

    def test_noise_replacement_flagged(self):
        render, (cx, cy) = textured_scene(seed=6)
        tracker = CorrelationTracker(render(), make_box(cx, cy))
        tracker.update(render(shift=(1, 1)))
        result = tracker.update(noise_frame(seed=6))
        assert result.flagged
        assert result.psr < TrackerParams().psr_threshold

    def test_psr_finite_and_high_on_match(self):
        render, (cx, cy) = textured_scene(seed=7)
        tracker = CorrelationTracker(render(), make_box(cx, cy))
        result = tracker.update(render(shift=(2, 2)))
        assert result.psr > TrackerParams().psr_threshold


class TestPropagate:
    def test_single_frame_sequence(self):
        render, (cx, cy) = textured_scene(seed=8)
        boxes = [make_box(cx, cy)]
        out = propagate([render()], 0, boxes)
        assert len(out) == 1
        assert out[0][0].box == boxes[0]
        assert not out[0][0].flagged

    def test_static_sequence_keeps_boxes(self):
        render, (cx, cy) = textured_scene(seed=9)
        frames = [render() for _ in range(10)]
        ref = make_box(cx, cy)
        out = propagate(frames, 4, [ref])
        for row in out:
            assert abs(row[0].box.cx - ref.cx) <= 0.5
            assert abs(row[0].box.cy - ref.cy) <= 0.5

    def test_linear_drift_tracked(self):
        render, (cx, cy) = textured_scene(seed=10, size=128)
        shifts = [(2.0 * t, 0.0) for t in range(15)]
        frames = [render(shift=s) for s in shifts]
        ref_idx = 0
        out = propagate(frames, ref_idx, [make_box(cx, cy)])
        for t, row in enumerate(out):
            true_cx = cx + shifts[t][0]
            true_cy = cy + shifts[t][1]
            err = np.hypot(row[0].box.cx - true_cx, row[0].box.cy - true_cy)
            assert err <= 2.0, f"frame {t}: error {err:.2f}"

    def test_bidirectional_from_middle(self):
        render, (cx, cy) = textured_scene(seed=11, size=128)
        shifts = [(1.5 * (t - 5), 0.5 * (t - 5)) for t in range(11)]
        frames = [render(shift=s) for s in shifts]
        out = propagate(frames, 5, [make_box(cx + shifts[5][0], cy + shifts[5][1])])
        for t, row in enumerate(out):
            err = np.hypot(
                row[0].box.cx - (cx + shifts[t][0]),
                row[0].box.cy - (cy + shifts[t][1]),
            )
            assert err <= 2.0, f"frame {t}: error {err:.2f}"

    def test_deterministic(self):
        render, (cx, cy) = textured_scene(seed=12)
        frames = [render(shift=(t, 0), noise=0.05, noise_seed=t) for t in range(6)]
        a = propagate(frames, 0, [make_box(cx, cy)])
        b = propagate(frames, 0, [make_box(cx, cy)])
        for row_a, row_b in zip(a, b):
            assert row_a[0].box == row_b[0].box
            assert row_a[0].psr == row_b[0].psr

    def test_time_reversal_symmetry(self):
        render, (cx, cy) = textured_scene(seed=13)
        frames = [render(shift=(2 * t, -t)) for t in range(8)]
        fwd = propagate(frames, 0, [make_box(cx, cy)])
        rev = propagate(frames[::-1], len(frames) - 1, [make_box(cx, cy)])
        for t in range(len(frames)):
            assert fwd[t][0].box == rev[len(frames) - 1 - t][0].box

    def test_empty_sequence_rejected(self):
        with pytest.raises(ValueError):
            propagate([], 0, [make_box(10, 10)])

    def test_bad_reference_index(self):
        render, _ = textured_scene(seed=14)
        with pytest.raises(ValueError):
            propagate([render()], 3, [make_box(48, 48)])
