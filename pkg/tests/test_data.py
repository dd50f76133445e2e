import dataclasses
import json

import numpy as np
import pytest

from stenokit.data import (
    FrameRecord,
    SequenceManifest,
    SplitPlan,
    StratifiedGroupKFold,
    SynthParams,
    augment,
    downscale,
    load_manifest,
    manifest_stats,
    save_manifest,
    stratified_kfold,
    synth_dataset,
    synth_sequence,
)
from stenokit.geometry import Box


class TestSynthSequence:
    def test_no_lesion_sequence_has_empty_boxes(self):
        frames, manifest = synth_sequence(SynthParams(stenosis_count=0, seed=1))
        assert all(len(f.boxes) == 0 for f in manifest.frames)

    def test_deterministic_per_seed(self):
        p = SynthParams(seed=7)
        f1, m1 = synth_sequence(p)
        f2, m2 = synth_sequence(p)
        np.testing.assert_array_equal(f1, f2)
        assert m1.to_dict() == m2.to_dict()

    def test_different_seed_differs(self):
        f1, _ = synth_sequence(SynthParams(seed=1))
        f2, _ = synth_sequence(SynthParams(seed=2))
        assert not np.array_equal(f1, f2)

    def test_interval_layout_and_reference(self):
        p = SynthParams(phase_lengths=(5, 1, 10, 8), seed=3)
        frames, manifest = synth_sequence(p)
        intervals = [f.interval for f in manifest.frames]
        assert intervals == ["no_contrast"] * 5 + ["introducing"] * 1 + ["optimal"] * 10 + ["vanishing"] * 8
        assert manifest.reference_index == 5 + 1 + 10 // 2
        assert frames.shape == (24, 64, 64)
        assert frames.dtype == np.uint8

    def test_no_contrast_frames_show_background_only(self):
        p = SynthParams(phase_lengths=(2, 0, 4, 0), noise_level=0.0, seed=4)
        frames, _ = synth_sequence(p)
        assert np.all(frames[0] == frames[0][0, 0])
        assert frames[2].min() < frames[0][0, 0] - 50  # vessel present under contrast

    def test_box_sits_on_the_narrowing(self):
        # image-level check: the vessel is thinnest at the annotated row
        p = SynthParams(
            image_size=96, vessel_width=5.0, narrowing=0.4,
            phase_lengths=(0, 0, 3, 0), noise_level=0.0, seed=5,
        )
        frames, manifest = synth_sequence(p)
        ref = frames[manifest.reference_index].astype(float)
        box = manifest.frames[manifest.reference_index].boxes[0]
        thr = p.background - 0.5 * p.contrast_depth

        def row_width(row):
            return int(np.sum(ref[int(round(row))] < thr))

        w_sten = row_width(box.cy)
        w_away = min(row_width(box.cy - 16), row_width(box.cy + 16))
        assert 0 < w_sten < w_away
        col = int(np.argmin(ref[int(round(box.cy))]))
        assert abs(col - box.cx) <= 2.0

    def test_drift_moves_boxes(self):
        p = SynthParams(drift=(2.0, 0.5), phase_lengths=(0, 0, 5, 0), seed=6)
        _, manifest = synth_sequence(p)
        b0 = manifest.frames[0].boxes[0]
        b3 = manifest.frames[3].boxes[0]
        assert b3.cx == pytest.approx(b0.cx + 3 * 2.0)
        assert b3.cy == pytest.approx(b0.cy + 3 * 0.5)

    def test_invalid_params_rejected(self):
        with pytest.raises(ValueError):
            SynthParams(narrowing=1.5)
        with pytest.raises(ValueError):
            SynthParams(phase_lengths=(1, 1, 0, 1))

    def test_dataset_generator_mixes_views_and_lesions(self):
        pairs = list(synth_dataset(6, SynthParams(phase_lengths=(1, 1, 3, 1)), seed=9, lesion_rate=0.5))
        views = {m.view for _, m in pairs}
        assert views == {"RCA", "LCA"}
        lesion_counts = [m.num_boxes for _, m in pairs]
        assert any(c == 0 for c in lesion_counts)
        assert any(c > 0 for c in lesion_counts)
        patients = {m.patient_id for _, m in pairs}
        assert len(patients) == 3  # two sequences per patient


class TestAugment:
    def test_identity(self):
        rng = np.random.default_rng(0)
        img = rng.uniform(0, 255, (16, 16))
        np.testing.assert_array_equal(augment(img, 0.0, 1.0, clip_range=None), img)

    def test_brightness_shift_on_mid_gray(self):
        img = np.full((8, 8), 128.0)
        np.testing.assert_allclose(augment(img, 10.0, 1.0), 138.0)

    def test_contrast_on_constant_is_identity(self):
        img = np.full((8, 8), 77.0)
        np.testing.assert_allclose(augment(img, 0.0, 2.0), 77.0)

    def test_inverse_recovers_original(self):
        rng = np.random.default_rng(1)
        img = rng.uniform(60, 190, (32, 32))
        fwd = augment(img, 12.0, 1.3, clip_range=None)
        back = augment(fwd, -12.0, 1 / 1.3, clip_range=None)
        np.testing.assert_allclose(back, img, atol=1e-9)

    def test_inverse_within_one_level_for_uint8(self):
        rng = np.random.default_rng(2)
        img = rng.integers(60, 190, (32, 32)).astype(np.uint8)
        fwd = augment(img, 5.0, 1.2, clip_range=None)
        back = augment(fwd, -5.0, 1 / 1.2, clip_range=None)
        assert np.max(np.abs(back - img)) <= 1.0

    def test_clipping_applied(self):
        img = np.full((4, 4), 250.0)
        out = augment(img, 20.0, 1.0)
        np.testing.assert_allclose(out, 255.0)

    def test_bad_gain_rejected(self):
        with pytest.raises(ValueError):
            augment(np.zeros((4, 4)), 0.0, 0.0)


class TestDownscale:
    def test_identity_when_same_size(self):
        rng = np.random.default_rng(3)
        img = rng.integers(0, 255, (16, 16)).astype(np.uint8)
        np.testing.assert_array_equal(downscale(img, 16), img)

    def test_two_by_two_average(self):
        img = np.array([[0, 0], [100, 100]], dtype=np.uint8)
        assert downscale(img, 1)[0, 0] == 50

    def test_constant_stays_constant(self):
        img = np.full((32, 32), 91, dtype=np.uint8)
        np.testing.assert_array_equal(downscale(img, 7), np.full((7, 7), 91))

    def test_upscale_rejected(self):
        with pytest.raises(ValueError):
            downscale(np.zeros((8, 8)), 16)

    def test_deterministic(self):
        rng = np.random.default_rng(4)
        img = rng.integers(0, 255, (64, 64)).astype(np.uint8)
        np.testing.assert_array_equal(downscale(img, 28), downscale(img, 28))

    def test_area_average_against_block_mean(self):
        rng = np.random.default_rng(5)
        img = rng.uniform(0, 255, (32, 32))
        out = downscale(img, 8)
        blocks = img.reshape(8, 4, 8, 4).mean(axis=(1, 3))
        np.testing.assert_allclose(out, blocks, atol=1e-3)


class TestManifest:
    def _manifest(self):
        frames = [
            FrameRecord(0, "no_contrast"),
            FrameRecord(1, "introducing", boxes=[Box(10, 10, 4, 4)]),
            FrameRecord(2, "optimal", boxes=[Box(10, 10, 4, 4)], is_reference=True),
            FrameRecord(3, "vanishing"),
        ]
        return SequenceManifest("s1", "p1", "LCA", (64, 64), frames, {"kind": "imported"})

    def test_round_trip(self, tmp_path):
        m = self._manifest()
        path = tmp_path / "manifest.json"
        save_manifest(m, path)
        loaded = load_manifest(path)
        assert loaded.to_dict() == m.to_dict()

    def test_two_references_rejected(self):
        frames = [
            FrameRecord(0, "optimal", is_reference=True),
            FrameRecord(1, "optimal", is_reference=True),
        ]
        with pytest.raises(ValueError):
            SequenceManifest("s", "p", "RCA", (8, 8), frames)

    def test_noncontiguous_indices_rejected(self):
        frames = [FrameRecord(0, "optimal", is_reference=True), FrameRecord(2, "optimal")]
        with pytest.raises(ValueError):
            SequenceManifest("s", "p", "RCA", (8, 8), frames)

    def test_boxes_on_no_contrast_rejected(self):
        with pytest.raises(ValueError):
            FrameRecord(0, "no_contrast", boxes=[Box(5, 5, 2, 2)])

    def test_unknown_interval_rejected(self):
        with pytest.raises(ValueError):
            FrameRecord(0, "sparkling")

    def test_schema_version_checked(self, tmp_path):
        m = self._manifest()
        d = m.to_dict()
        d["schema"] = 99
        path = tmp_path / "manifest.json"
        path.write_text(json.dumps(d))
        with pytest.raises(ValueError):
            load_manifest(path)


class TestManifestStats:
    def test_empty(self):
        s = manifest_stats([])
        assert s["total"]["patients"] == 0
        assert s["total"]["sequences"] == 0
        assert s["total"]["boxes"] == 0
        assert all(v == 0 for v in s["total"]["frames"].values())

    def test_phase_counts_from_generator(self):
        _, m = synth_sequence(SynthParams(phase_lengths=(5, 1, 10, 8), seed=1))
        s = manifest_stats([m])
        assert s["total"]["frames"] == {
            "no_contrast": 5, "introducing": 1, "optimal": 10, "vanishing": 8,
        }
        assert s["total"]["boxes"] == m.num_boxes

    def test_shared_patient_counted_once(self):
        _, m1 = synth_sequence(SynthParams(seed=1), "s1", "p1", "RCA")
        _, m2 = synth_sequence(SynthParams(seed=2), "s2", "p1", "LCA")
        s = manifest_stats([m1, m2])
        assert s["total"]["patients"] == 1
        assert s["total"]["sequences"] == 2
        assert set(s["per_view"]) == {"RCA", "LCA"}


class TestStratifiedKfold:
    def test_one_group_per_fold(self):
        items = [(f"i{j}", f"g{j}", "a") for j in range(4)]
        plan = stratified_kfold(items, 4)
        sizes = sorted(len(f) for f in plan.folds)
        assert sizes == [1, 1, 1, 1]

    def test_balanced_two_class_split(self):
        items = [(f"i{j}", f"g{j}", "a" if j < 5 else "b") for j in range(10)]
        plan = stratified_kfold(items, 5, seed=3)
        for fold in plan.folds:
            labels = sorted("a" if int(i[1:]) < 5 else "b" for i in fold)
            assert labels == ["a", "b"]

    def test_group_atomicity(self):
        items = [("i1", "gA", "a"), ("i2", "gA", "a"), ("i3", "gA", "b")] + [
            (f"i{j}", f"g{j}", "a") for j in range(4, 10)
        ]
        plan = stratified_kfold(items, 3, seed=0)
        for fold in plan.folds:
            got = {"i1", "i2", "i3"} & set(fold)
            assert got in (set(), {"i1", "i2", "i3"})

    def test_partition_exact(self):
        rng = np.random.default_rng(5)
        items = [(f"i{j}", f"g{j % 7}", rng.choice(["a", "b", "c"])) for j in range(21)]
        plan = stratified_kfold(items, 4, seed=1)
        all_ids = [i for fold in plan.folds for i in fold]
        assert sorted(all_ids) == sorted(x[0] for x in items)
        assert len(set(all_ids)) == len(all_ids)

    def test_deterministic_per_seed(self):
        items = [(f"i{j}", f"g{j}", "a" if j % 2 else "b") for j in range(12)]
        assert stratified_kfold(items, 3, seed=9) == stratified_kfold(items, 3, seed=9)

    def test_singleton_groups_within_one_of_balance(self):
        rng = np.random.default_rng(6)
        labels = rng.choice(["a", "b", "c"], size=40, p=[0.5, 0.3, 0.2])
        items = [(f"i{j}", f"g{j}", labels[j]) for j in range(40)]
        k = 5
        plan = stratified_kfold(items, k, seed=2)
        for cls in "abc":
            total = int(np.sum(labels == cls))
            counts = [
                sum(1 for i in fold if labels[int(i[1:])] == cls) for fold in plan.folds
            ]
            assert max(counts) - min(counts) <= 1
            assert sum(counts) == total

    def test_too_few_groups_rejected(self):
        items = [("i1", "g1", "a"), ("i2", "g1", "a")]
        with pytest.raises(ValueError):
            stratified_kfold(items, 2)

    def test_sklearn_style_splitter(self):
        labels = ["a", "b"] * 10
        groups = [f"g{j}" for j in range(20)]
        splitter = StratifiedGroupKFold(n_splits=5, seed=4)
        assert splitter.get_n_splits() == 5
        seen_val = []
        for train_idx, val_idx in splitter.split(range(20), labels, groups):
            assert set(train_idx) | set(val_idx) == set(range(20))
            assert not set(train_idx) & set(val_idx)
            fold_labels = sorted(labels[i] for i in val_idx)
            assert fold_labels == ["a", "a", "b", "b"]
            seen_val.extend(val_idx)
        assert sorted(seen_val) == list(range(20))
