import numpy as np
import pytest

from dapnet.synth import (SynthConfig, background_only, dataset_configs,
                          synth_sequence)


class TestConfigValidation:
    def test_minimum_dims(self):
        with pytest.raises(ValueError):
            SynthConfig(width=16)

    def test_window_bounds(self):
        with pytest.raises(ValueError):
            SynthConfig(n_frames=30, rgb_failure_windows=((10, 30),))
        with pytest.raises(ValueError):
            SynthConfig(rgb_failure_windows=((-1, 5),))

    def test_target_must_fit(self):
        with pytest.raises(ValueError):
            SynthConfig(width=40, height=40, target_w=40)


class TestGenerator:
    def test_static_target(self):
        cfg = SynthConfig(n_frames=5, velocity=(0, 0), motion_noise_std=0.0,
                          seed=1)
        seq = synth_sequence(cfg)
        assert all(b == seq.gt[0] for b in seq.gt)

    def test_deterministic_under_seed(self):
        cfg = SynthConfig(n_frames=4, seed=9)
        a = synth_sequence(cfg)
        b = synth_sequence(cfg)
        for i in range(4):
            assert np.array_equal(a.rgb_frame(i), b.rgb_frame(i))
            assert np.array_equal(a.thermal_frame(i), b.thermal_frame(i))
        assert a.gt == b.gt

    def test_gt_always_inside_image(self):
        cfg = SynthConfig(n_frames=200, velocity=(9.0, 7.0),
                          motion_noise_std=1.0, seed=3)
        seq = synth_sequence(cfg)
        for b in seq.gt:
            assert 0 <= b.x and b.x + b.w <= cfg.width
            assert 0 <= b.y and b.y + b.h <= cfg.height

    def test_rgb_failure_window_has_zero_contrast(self):
        cfg = SynthConfig(n_frames=30, rgb_failure_windows=((10, 20),), seed=4)
        seq = synth_sequence(cfg)
        bg = synth_sequence(background_only(cfg))
        for i in range(30):
            rgb_delta = np.abs(seq.rgb_frame(i).astype(int)
                               - bg.rgb_frame(i).astype(int)).mean()
            t_delta = np.abs(seq.thermal_frame(i).astype(int)
                             - bg.thermal_frame(i).astype(int)).mean()
            if 10 <= i <= 20:
                assert rgb_delta == 0.0, f"frame {i} leaks target into RGB"
            else:
                assert rgb_delta > 0.5
            assert t_delta > 0.5  # thermal stays informative throughout

    def test_occlusion_window_masks_target_center(self):
        cfg = SynthConfig(n_frames=10, occlusion_windows=((5, 7),), seed=6,
                          velocity=(0, 0), motion_noise_std=0.0,
                          pixel_noise_std=0.0)
        seq = synth_sequence(cfg)
        box = seq.gt[0]
        x0 = int(box.x) + int(box.w) // 4
        strip = (slice(int(box.y), int(box.y + box.h)),
                 slice(x0, x0 + int(box.w) // 2))
        bg = synth_sequence(background_only(cfg))
        occluded = np.abs(seq.thermal_frame(6)[strip].astype(int)
                          - bg.thermal_frame(6)[strip].astype(int)).mean()
        visible = np.abs(seq.thermal_frame(2)[strip].astype(int)
                         - bg.thermal_frame(2)[strip].astype(int)).mean()
        assert occluded == 0.0
        assert visible > 1.0


class TestDatasetConfigs:
    def test_counts_and_determinism(self):
        base = SynthConfig(n_frames=20)
        t1, e1 = dataset_configs(base, 5, 2, seed=7, test_rgb_fail=((5, 10),))
        t2, e2 = dataset_configs(base, 5, 2, seed=7, test_rgb_fail=((5, 10),))
        assert len(t1) == 5 and len(e1) == 2
        assert t1 == t2 and e1 == e2

    def test_failure_patterns_cycle(self):
        base = SynthConfig(n_frames=30)
        train, test = dataset_configs(base, 6, 2, seed=1,
                                      test_rgb_fail=((5, 10),))
        assert train[1].rgb_failure_windows and not train[1].t_failure_windows
        assert train[2].t_failure_windows and not train[2].rgb_failure_windows
        assert not train[0].rgb_failure_windows
        assert test[0].rgb_failure_windows == ((5, 10),)
        assert test[1].rgb_failure_windows == ()
