"""Container format and label-file tests.

Byte counts asserted here are computed from the format definition itself
(magic + fixed header + id table + payload), independent of the writer.
"""

import struct

import numpy as np
import pytest

from udfpipe import (
    DataError,
    FeatureMapBatch,
    FeatureVectorBatch,
    FormatError,
    LabelSet,
    read_labels,
    read_tensor_file,
    read_vector_file,
    write_labels,
    write_tensor_file,
    write_vector_file,
)

from conftest import make_map_batch, make_vector_batch


def expected_file_size(header_u32s: int, ids: list[str], payload_values: int) -> int:
    """Oracle for the container layout: magic + u32 header + id table + f32 payload."""
    id_table = sum(2 + len(sid.encode("utf-8")) for sid in ids)
    return 4 + 4 * header_u32s + id_table + 4 * payload_values


class TestTensorFile:
    def test_smallest_legal_batch_round_trip(self, tmp_path):
        batch = make_map_batch(np.zeros((1, 1, 1, 1)), ids=["a"])
        path = tmp_path / "one.udft"
        write_tensor_file(batch, path)
        # fixed header region: 4 magic bytes + five u32 fields = 24 bytes
        assert path.stat().st_size == expected_file_size(5, ["a"], 1) == 24 + 3 + 4
        loaded = read_tensor_file(path)
        assert loaded.data.tobytes() == batch.data.tobytes()
        assert loaded.sample_ids == ["a"]

    def test_data_section_byte_count(self, tmp_path, rng):
        batch = make_map_batch(rng.normal(size=(2, 7, 7, 512)).astype(np.float32))
        path = tmp_path / "two.udft"
        write_tensor_file(batch, path)
        size = path.stat().st_size
        id_table = sum(2 + len(s.encode()) for s in batch.sample_ids)
        assert size - 24 - id_table == 2 * 7 * 7 * 512 * 4 == 200_704

    def test_round_trip_bitwise(self, tmp_path, rng):
        data = rng.normal(size=(3, 2, 4, 5)).astype(np.float32)
        ids = ["img_001.jpg", "img_002.jpg", "weird id, with comma"]
        path = tmp_path / "rt.udft"
        write_tensor_file(FeatureMapBatch(data, ids), path)
        loaded = read_tensor_file(path)
        assert loaded.data.tobytes() == data.tobytes()
        assert loaded.sample_ids == ids
        assert (loaded.count, loaded.height, loaded.width, loaded.depth) == (3, 2, 4, 5)

    def test_nan_rejected_with_sample_index(self, tmp_path):
        batch = make_map_batch(np.zeros((3, 1, 1, 2)))
        batch.data[1, 0, 0, 1] = np.nan
        with pytest.raises(DataError, match="sample 1"):
            write_tensor_file(batch, tmp_path / "bad.udft")

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.udft"
        path.write_bytes(b"XXXX" + b"\x00" * 32)
        with pytest.raises(FormatError, match="bad magic"):
            read_tensor_file(path)

    def test_unsupported_version(self, tmp_path):
        path = tmp_path / "v9.udft"
        path.write_bytes(b"UDFT" + struct.pack("<5I", 9, 1, 1, 1, 1) + b"\x00\x00" + b"\x00" * 4)
        with pytest.raises(FormatError, match="version 9"):
            read_tensor_file(path)

    def test_truncated_payload_reports_byte_counts(self, tmp_path):
        batch = make_map_batch(np.zeros((2, 2, 2, 2)))
        path = tmp_path / "trunc.udft"
        write_tensor_file(batch, path)
        blob = path.read_bytes()
        path.write_bytes(blob[:-5])
        with pytest.raises(FormatError, match=r"expected 64 data bytes, found 59"):
            read_tensor_file(path)

    def test_trailing_bytes_rejected(self, tmp_path):
        batch = make_map_batch(np.zeros((1, 1, 1, 1)))
        path = tmp_path / "extra.udft"
        write_tensor_file(batch, path)
        path.write_bytes(path.read_bytes() + b"\x00")
        with pytest.raises(FormatError, match="oversized"):
            read_tensor_file(path)

    def test_nonfinite_payload_rejected_on_read(self, tmp_path):
        batch = make_map_batch(np.zeros((2, 1, 1, 1)))
        path = tmp_path / "inf.udft"
        write_tensor_file(batch, path)
        blob = bytearray(path.read_bytes())
        blob[-4:] = struct.pack("<f", np.inf)
        path.write_bytes(bytes(blob))
        with pytest.raises(FormatError, match="sample 1"):
            read_tensor_file(path)

    def test_order_preserved(self, tmp_path, rng):
        ids = [f"z{9 - i}" for i in range(10)]
        batch = make_map_batch(rng.normal(size=(10, 1, 1, 3)).astype(np.float32), ids=ids)
        path = tmp_path / "order.udft"
        write_tensor_file(batch, path)
        assert read_tensor_file(path).sample_ids == ids


class TestVectorFile:
    def test_zeros_round_trip(self, tmp_path):
        batch = make_vector_batch(np.zeros((1, 250)))
        path = tmp_path / "z.udfv"
        write_vector_file(batch, path)
        loaded = read_vector_file(path)
        assert loaded.dim == 250
        assert loaded.data.tobytes() == batch.data.tobytes()

    def test_data_section_byte_count(self, tmp_path, rng):
        batch = make_vector_batch(rng.normal(size=(3, 500)).astype(np.float32))
        path = tmp_path / "b.udfv"
        write_vector_file(batch, path)
        id_table = sum(2 + len(s.encode()) for s in batch.sample_ids)
        assert path.stat().st_size - 16 - id_table == 3 * 500 * 4 == 6000

    def test_zero_dim_rejected_at_construction(self):
        with pytest.raises(DataError, match="positive"):
            FeatureVectorBatch(np.zeros((2, 0), dtype=np.float32), ["a", "b"])

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.udfv"
        path.write_bytes(b"UDFT" + b"\x00" * 20)
        with pytest.raises(FormatError, match="bad magic"):
            read_vector_file(path)

    def test_duplicate_ids_rejected(self):
        with pytest.raises(DataError, match="duplicate sample id"):
            make_vector_batch(np.zeros((2, 3)), ids=["a", "a"])

    def test_id_count_mismatch_rejected(self):
        with pytest.raises(DataError, match="expected 2 sample ids"):
            make_vector_batch(np.zeros((2, 3)), ids=["a"])


class TestLabels:
    def test_two_line_parse(self, tmp_path):
        path = tmp_path / "labels.csv"
        path.write_text("a.jpg,private\nb.jpg,public\n")
        labels = read_labels(path)
        assert labels.entries == {"a.jpg": 1, "b.jpg": -1}

    def test_header_skipped(self, tmp_path):
        path = tmp_path / "labels.csv"
        path.write_text("sample_id,label\na.jpg,private\n")
        assert read_labels(path).entries == {"a.jpg": 1}

    def test_unknown_label(self, tmp_path):
        path = tmp_path / "labels.csv"
        path.write_text("a.jpg,secret\n")
        with pytest.raises(DataError, match="unknown label 'secret'"):
            read_labels(path)

    def test_duplicate_id(self, tmp_path):
        path = tmp_path / "labels.csv"
        path.write_text("a.jpg,private\na.jpg,public\n")
        with pytest.raises(DataError, match="duplicate sample id 'a.jpg'"):
            read_labels(path)

    def test_empty_file(self, tmp_path):
        path = tmp_path / "labels.csv"
        path.write_text("")
        with pytest.raises(DataError, match="empty label file"):
            read_labels(path)

    def test_header_only_is_empty(self, tmp_path):
        path = tmp_path / "labels.csv"
        path.write_text("sample_id,label\n")
        with pytest.raises(DataError, match="empty label file"):
            read_labels(path)

    def test_malformed_record(self, tmp_path):
        path = tmp_path / "labels.csv"
        path.write_text("a.jpg\n")
        with pytest.raises(DataError, match="malformed record on line 1"):
            read_labels(path)

    def test_round_trip_through_writer(self, tmp_path):
        path = tmp_path / "labels.csv"
        write_labels([("x", 1), ("y", -1)], path)
        assert read_labels(path).entries == {"x": 1, "y": -1}

    def test_vector_for_alignment_and_missing(self):
        labels = LabelSet({"a": 1, "b": -1})
        assert labels.vector_for(["b", "a"]).tolist() == [-1, 1]
        with pytest.raises(DataError, match="no label for sample 'c'"):
            labels.vector_for(["c"])
