import numpy as np
import pytest

import cv2

from dapnet.core import Box
from dapnet.data import (DataError, RGBTSequence, detect_layout, load_results,
                         load_sequence, parse_box_line, save_results,
                         write_sequence)
from dapnet.synth import SynthConfig, synth_sequence


def make_fixture(root, n_frames=3, layout="gtot", gt_lines=None,
                 names=None):
    sub = {"gtot": ("v", "i", "groundTruth_v.txt"),
           "rgbt234": ("visible", "infrared", "visible.txt")}[layout]
    rgb_dir = root / sub[0]
    t_dir = root / sub[1]
    rgb_dir.mkdir(parents=True)
    t_dir.mkdir(parents=True)
    rng = np.random.default_rng(0)
    names = names or [f"{i + 1}.png" for i in range(n_frames)]
    for name in names:
        cv2.imwrite(str(rgb_dir / name),
                    rng.integers(0, 255, (40, 50, 3)).astype(np.uint8))
        cv2.imwrite(str(t_dir / name),
                    rng.integers(0, 255, (40, 50)).astype(np.uint8))
    if gt_lines is None:
        gt_lines = [f"{2 * i},{3 * i},10,12" for i in range(n_frames)]
    (root / sub[2]).write_text("\n".join(gt_lines) + "\n")
    return root


class TestLoadSequence:
    def test_fixture_round_trip(self, tmp_path):
        make_fixture(tmp_path, 3)
        seq = load_sequence(tmp_path, "gtot")
        assert len(seq) == 3
        assert seq.gt[1] == Box(2, 3, 10, 12)
        assert seq.rgb_frame(0).shape == (40, 50, 3)
        assert seq.thermal_frame(0).shape == (40, 50)
        assert seq.image_size == (50, 40)

    def test_layout_autodetect(self, tmp_path):
        make_fixture(tmp_path, 2, layout="rgbt234")
        assert detect_layout(tmp_path) == "rgbt234"
        seq = load_sequence(tmp_path)
        assert len(seq) == 2

    def test_count_mismatch(self, tmp_path):
        make_fixture(tmp_path, 3, gt_lines=["0,0,5,5", "1,1,5,5"])
        with pytest.raises(DataError, match="2 ground-truth lines for 3 frames"):
            load_sequence(tmp_path, "gtot")

    def test_separator_tolerance(self, tmp_path):
        make_fixture(tmp_path, 2, gt_lines=["10, 20, 30, 40", "10 20 30 40"])
        seq = load_sequence(tmp_path, "gtot")
        assert seq.gt[0] == seq.gt[1] == Box(10, 20, 30, 40)

    def test_polygon_lines_become_bounding_rectangles(self, tmp_path):
        make_fixture(tmp_path, 1, gt_lines=["2 3 12 3 12 9 2 9"])
        seq = load_sequence(tmp_path, "gtot")
        assert seq.gt[0] == Box(2, 3, 10, 6)

    def test_malformed_line_reports_line_number(self, tmp_path):
        make_fixture(tmp_path, 2, gt_lines=["0,0,5,5", "1,1,5"])
        with pytest.raises(DataError, match=":2"):
            load_sequence(tmp_path, "gtot")

    def test_invalid_box_rejected(self, tmp_path):
        make_fixture(tmp_path, 1, gt_lines=["0,0,0,5"])
        with pytest.raises(DataError, match=":1"):
            load_sequence(tmp_path, "gtot")

    def test_missing_gt_file(self, tmp_path):
        make_fixture(tmp_path, 1)
        (tmp_path / "groundTruth_v.txt").unlink()
        with pytest.raises(DataError, match="missing ground-truth"):
            load_sequence(tmp_path, "gtot")

    def test_natural_frame_order(self, tmp_path):
        make_fixture(tmp_path, 3, names=["10.png", "2.png", "1.png"])
        seq = load_sequence(tmp_path, "gtot")
        assert [p.name for p in seq.rgb] == ["1.png", "2.png", "10.png"]

    def test_attributes_read(self, tmp_path):
        make_fixture(tmp_path, 1)
        (tmp_path / "attributes.txt").write_text("NO, TC\n")
        seq = load_sequence(tmp_path, "gtot")
        assert seq.attributes == {"NO", "TC"}

    def test_thermal_gt_kept_as_metadata(self, tmp_path):
        make_fixture(tmp_path, 1)
        (tmp_path / "groundTruth_i.txt").write_text("1,2,3,4\n")
        seq = load_sequence(tmp_path, "gtot")
        assert seq.gt_thermal == [Box(1, 2, 3, 4)]

    def test_frame_count_mismatch_between_modalities(self, tmp_path):
        make_fixture(tmp_path, 2)
        (tmp_path / "i" / "extra.png").unlink(missing_ok=True)
        cv2.imwrite(str(tmp_path / "i" / "99.png"), np.zeros((40, 50), np.uint8))
        with pytest.raises(DataError, match="RGB frames vs"):
            load_sequence(tmp_path, "gtot")


class TestResultFiles:
    def test_round_trip_exact(self, tmp_path):
        rng = np.random.default_rng(1)
        boxes = [Box(*rng.uniform(0, 100, 2), *rng.uniform(0.5, 50, 2))
                 for _ in range(100)]
        path = tmp_path / "r.txt"
        save_results(path, boxes)
        assert load_results(path) == boxes

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.txt"
        save_results(path, [])
        assert load_results(path) == []

    def test_three_fields_is_error(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("1,2,3,4\n5,6,7\n")
        with pytest.raises(DataError, match=":2"):
            load_results(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError, match="missing result file"):
            load_results(tmp_path / "nope.txt")


class TestWriteSequence:
    @pytest.mark.parametrize("layout", ["gtot", "rgbt234"])
    def test_synthetic_export_round_trip(self, tmp_path, layout):
        seq = synth_sequence(SynthConfig(n_frames=4, seed=5,
                                         attributes=("TC",)))
        out = tmp_path / "seq"
        write_sequence(seq, out, layout=layout)
        loaded = load_sequence(out, layout)
        assert len(loaded) == 4
        assert loaded.gt == seq.gt
        assert loaded.attributes == {"TC"}
        assert np.array_equal(loaded.rgb_frame(2), seq.rgb_frame(2))
        assert np.array_equal(loaded.thermal_frame(3), seq.thermal_frame(3))


class TestParseBoxLine:
    def test_non_numeric(self):
        with pytest.raises(DataError, match="non-numeric"):
            parse_box_line("a,b,c,d", "f.txt", 3)
