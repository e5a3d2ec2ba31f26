from __future__ import annotations

import struct

import numpy as np
import pytest
from numpy.testing import assert_array_equal

from core.errors import ConfigError, DuplicateIdentityError, FeatureFormatError
from features import load_formats
from features.base import FeatureSet
from features.io import default_filename, format_for_path, get_format, load_feature_set, write_feature_set


def test_formats_are_discovered():
    formats = load_formats()
    assert set(formats) == {"csv", "bin"}
    assert formats["bin"].suffix == ".tfv1"


def test_unknown_format():
    with pytest.raises(ConfigError):
        get_format("parquet")


def test_format_guess_from_suffix(tmp_path):
    assert format_for_path(tmp_path / "x.tfv1") == "bin"
    assert format_for_path(tmp_path / "x.BIN") == "bin"
    assert format_for_path(tmp_path / "x.csv") == "csv"


class TestCsv:
    def test_hand_example(self, tmp_path):
        path = tmp_path / "a.csv"
        path.write_text("person_id,view,f0,f1\n7,A,1.0,2.0\n9,A,0.5,-1.0\n")
        fs = load_feature_set(path, descriptor_name="cnn")
        assert fs.n_persons == 2 and fs.dim == 2
        assert fs.person_ids == (7, 9)
        assert fs.view == "A"
        assert_array_equal(fs.features, [[1.0, 2.0], [0.5, -1.0]])

    def test_duplicate_identity(self, tmp_path):
        path = tmp_path / "a.csv"
        path.write_text("person_id,view,f0,f1\n7,A,1.0,2.0\n7,A,0.5,-1.0\n")
        with pytest.raises(DuplicateIdentityError):
            load_feature_set(path)

    def test_crlf_line_endings(self, tmp_path):
        path = tmp_path / "a.csv"
        path.write_bytes(b"person_id,view,f0\r\n1,B,3.5\r\n")
        fs = load_feature_set(path)
        assert fs.view == "B"
        assert_array_equal(fs.features, [[3.5]])

    @pytest.mark.parametrize(
        ("body", "location"),
        [
            ("person_id,view,f0\n1,A,1.0,2.0\n", "line 2"),
            ("person_id,view,f0\n1,A,abc\n", "line 2"),
            ("person_id,view,f0\n1,A,1.0\n2,B,2.0\n", "line 3"),
            ("person_id,view,f0\n1,A,nan\n", "line 2"),
            ("id,view,f0\n1,A,1.0\n", "line 1"),
        ],
    )
    def test_errors_carry_line(self, tmp_path, body, location):
        path = tmp_path / "bad.csv"
        path.write_text(body)
        with pytest.raises(FeatureFormatError) as info:
            load_feature_set(path)
        assert info.value.location == location

    def test_missing_file_names_path(self, tmp_path):
        with pytest.raises(FileNotFoundError, match="nope.csv"):
            load_feature_set(tmp_path / "nope.csv")

    def test_write_then_read_is_exact(self, tmp_path, rng):
        fs = FeatureSet("lomo", "B", (4, 2, 9), rng.standard_normal((3, 5)))
        path = write_feature_set(fs, tmp_path / default_filename(fs, "csv"), "csv")
        assert path.name == "lomo_B.csv"
        back = load_feature_set(path, descriptor_name="lomo")
        assert back.person_ids == fs.person_ids
        assert np.array_equal(back.features, fs.features)


class TestTfv1:
    def _payload(self, n, d, features, ids) -> bytes:
        return (
            struct.pack("<4sII", b"TFV1", n, d)
            + np.asarray(features, dtype="<f8").tobytes()
            + np.asarray(ids, dtype="<u8").tobytes()
        )

    def test_dims(self, tmp_path):
        path = tmp_path / "a.tfv1"
        path.write_bytes(self._payload(3, 4, np.arange(12.0).reshape(3, 4), [5, 6, 7]))
        fs = load_feature_set(path)
        assert (fs.n_persons, fs.dim) == (3, 4)
        assert fs.person_ids == (5, 6, 7)
        assert_array_equal(fs.features[1], [4.0, 5.0, 6.0, 7.0])

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "a.tfv1"
        raw = bytearray(self._payload(1, 1, [[1.0]], [0]))
        raw[:4] = b"XXXX"
        path.write_bytes(bytes(raw))
        with pytest.raises(FeatureFormatError) as info:
            load_feature_set(path)
        assert info.value.location == "offset 0"

    def test_truncated(self, tmp_path):
        path = tmp_path / "a.tfv1"
        path.write_bytes(self._payload(2, 2, np.ones((2, 2)), [0, 1])[:-3])
        with pytest.raises(FeatureFormatError, match="expected"):
            load_feature_set(path)

    def test_view_is_supplied(self, tmp_path, rng):
        fs = FeatureSet("gog", "B", (1, 2), rng.standard_normal((2, 3)))
        path = write_feature_set(fs, tmp_path / default_filename(fs, "bin"), "bin")
        assert path.read_bytes()[:4] == b"TFV1"
        back = load_feature_set(path, descriptor_name="gog", view="B")
        assert back.view == "B"
        assert np.array_equal(back.features, fs.features)
