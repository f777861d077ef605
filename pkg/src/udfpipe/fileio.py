"""Binary containers for feature batches, plus label-file parsing.

Two array containers share one layout: a 4-byte ASCII magic, little-endian
u32 header fields, a sample-id table (u16 byte length + UTF-8 bytes per
sample), then the payload as little-endian 32-bit floats in sample-major
C order:

    UDFT  feature-map batches     header u32s: version, N, H, W, D
    UDFV  feature-vector batches  header u32s: version, N, dim

Readers validate magic, version, exact byte counts, and finiteness before
returning, so everything loaded through this module can be assumed finite
and well-shaped. Writers round-trip bit-exactly.

Label files are UTF-8 CSV, one ``sample_id,label`` record per line with
label ``private`` (+1) or ``public`` (-1); a literal ``sample_id,label``
header row is optional.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .errors import DataError, FormatError

TENSOR_MAGIC = b"UDFT"
VECTOR_MAGIC = b"UDFV"
FORMAT_VERSION = 1

PRIVATE = 1
PUBLIC = -1
LABEL_TOKENS = {"private": PRIVATE, "public": PUBLIC}
TOKEN_FOR_CLASS = {PRIVATE: "private", PUBLIC: "public"}
_LABEL_HEADER = "sample_id,label"


def _checked_ids(ids, count: int) -> list[str]:
    ids = [str(s) for s in ids]
    if len(ids) != count:
        raise DataError(f"expected {count} sample ids, got {len(ids)}")
    seen = set()
    for sid in ids:
        if sid in seen:
            raise DataError(f"duplicate sample id {sid!r}")
        seen.add(sid)
    return ids


@dataclass(eq=False)
class FeatureMapBatch:
    """N activation maps of shape (H, W, D) with one string id per sample."""

    data: np.ndarray
    sample_ids: list[str]

    def __post_init__(self):
        arr = np.ascontiguousarray(np.asarray(self.data), dtype=np.float32)
        if arr.ndim != 4:
            raise DataError(f"feature-map data must be 4-D (N, H, W, D), got {arr.ndim}-D")
        if min(arr.shape) < 1:
            raise DataError(f"all feature-map dimensions must be positive, got shape {arr.shape}")
        self.data = arr
        self.sample_ids = _checked_ids(self.sample_ids, arr.shape[0])

    @property
    def count(self) -> int:
        return self.data.shape[0]

    @property
    def height(self) -> int:
        return self.data.shape[1]

    @property
    def width(self) -> int:
        return self.data.shape[2]

    @property
    def depth(self) -> int:
        return self.data.shape[3]


@dataclass(eq=False)
class FeatureVectorBatch:
    """N feature vectors of a common dimension with one string id per sample."""

    data: np.ndarray
    sample_ids: list[str]

    def __post_init__(self):
        arr = np.ascontiguousarray(np.asarray(self.data), dtype=np.float32)
        if arr.ndim != 2:
            raise DataError(f"feature-vector data must be 2-D (N, dim), got {arr.ndim}-D")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise DataError(f"count and dim must be positive, got shape {arr.shape}")
        self.data = arr
        self.sample_ids = _checked_ids(self.sample_ids, arr.shape[0])

    @property
    def count(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]


@dataclass
class LabelSet:
    """Mapping from sample id to class value: private = +1, public = -1."""

    entries: dict[str, int]

    def __post_init__(self):
        for sid, value in self.entries.items():
            if value not in (PRIVATE, PUBLIC):
                raise DataError(f"label for {sid!r} must be +1 or -1, got {value!r}")

    def __len__(self) -> int:
        return len(self.entries)

    def vector_for(self, sample_ids: Iterable[str]) -> np.ndarray:
        """Class values aligned with the given sample-id order."""
        values = []
        for sid in sample_ids:
            if sid not in self.entries:
                raise DataError(f"no label for sample {sid!r}")
            values.append(self.entries[sid])
        return np.asarray(values, dtype=np.int64)


def _first_nonfinite_sample(arr: np.ndarray) -> int | None:
    flat = arr.reshape(arr.shape[0], -1)
    bad = np.flatnonzero(~np.isfinite(flat).all(axis=1))
    return int(bad[0]) if bad.size else None


def _encode_id_table(ids: list[str]) -> bytes:
    chunks = []
    for i, sid in enumerate(ids):
        raw = sid.encode("utf-8")
        if len(raw) > 0xFFFF:
            raise DataError(f"sample id at index {i} exceeds 65535 UTF-8 bytes")
        chunks.append(struct.pack("<H", len(raw)))
        chunks.append(raw)
    return b"".join(chunks)


def check_magic(buf: bytes, magic: bytes, path) -> int:
    """Validate the leading magic bytes; returns the offset past them."""
    got = bytes(buf[:4])
    if got != magic:
        raise FormatError(f"{path}: bad magic {got!r}, expected {magic!r}")
    return 4


def read_struct(buf: bytes, offset: int, fmt: str, what: str, path) -> tuple[tuple, int]:
    """Unpack a little-endian struct or fail with a truncation message."""
    size = struct.calcsize(fmt)
    if offset + size > len(buf):
        raise FormatError(f"{path}: truncated {what}: file ends after {len(buf)} bytes")
    return struct.unpack_from(fmt, buf, offset), offset + size


def _read_id_table(buf: bytes, offset: int, count: int, path) -> tuple[list[str], int]:
    ids = []
    for i in range(count):
        (length,), offset = read_struct(buf, offset, "<H", f"id table entry {i}", path)
        if offset + length > len(buf):
            raise FormatError(f"{path}: truncated id table entry {i}")
        ids.append(bytes(buf[offset:offset + length]).decode("utf-8"))
        offset += length
    return ids, offset


def _check_payload_size(buf: bytes, offset: int, expected: int, path) -> None:
    actual = len(buf) - offset
    if actual != expected:
        kind = "truncated" if actual < expected else "oversized"
        raise FormatError(f"{path}: {kind} payload: expected {expected} data bytes, found {actual}")


def write_tensor_file(batch: FeatureMapBatch, path) -> None:
    """Write a feature-map batch as a UDFT container."""
    bad = _first_nonfinite_sample(batch.data)
    if bad is not None:
        raise DataError(f"non-finite value in sample {bad} ({batch.sample_ids[bad]!r})")
    blob = bytearray(TENSOR_MAGIC)
    blob += struct.pack("<5I", FORMAT_VERSION, batch.count, batch.height, batch.width, batch.depth)
    blob += _encode_id_table(batch.sample_ids)
    blob += batch.data.astype("<f4", copy=False).tobytes()
    Path(path).write_bytes(bytes(blob))


def read_tensor_file(path) -> FeatureMapBatch:
    """Read and validate a UDFT container."""
    buf = Path(path).read_bytes()
    offset = check_magic(buf, TENSOR_MAGIC, path)
    (version, n, h, w, d), offset = read_struct(buf, offset, "<5I", "header", path)
    if version != FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported UDFT version {version}")
    for name, value in (("N", n), ("H", h), ("W", w), ("D", d)):
        if value < 1:
            raise FormatError(f"{path}: header field {name} must be positive, got {value}")
    ids, offset = _read_id_table(buf, offset, n, path)
    _check_payload_size(buf, offset, n * h * w * d * 4, path)
    arr = np.frombuffer(buf, dtype="<f4", count=n * h * w * d, offset=offset)
    arr = arr.reshape(n, h, w, d).copy()
    bad = _first_nonfinite_sample(arr)
    if bad is not None:
        raise FormatError(f"{path}: non-finite value in sample {bad} ({ids[bad]!r})")
    return FeatureMapBatch(arr, ids)


def write_vector_file(batch: FeatureVectorBatch, path) -> None:
    """Write a feature-vector batch as a UDFV container."""
    bad = _first_nonfinite_sample(batch.data)
    if bad is not None:
        raise DataError(f"non-finite value in sample {bad} ({batch.sample_ids[bad]!r})")
    blob = bytearray(VECTOR_MAGIC)
    blob += struct.pack("<3I", FORMAT_VERSION, batch.count, batch.dim)
    blob += _encode_id_table(batch.sample_ids)
    blob += batch.data.astype("<f4", copy=False).tobytes()
    Path(path).write_bytes(bytes(blob))


def read_vector_file(path) -> FeatureVectorBatch:
    """Read and validate a UDFV container."""
    buf = Path(path).read_bytes()
    offset = check_magic(buf, VECTOR_MAGIC, path)
    (version, n, dim), offset = read_struct(buf, offset, "<3I", "header", path)
    if version != FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported UDFV version {version}")
    for name, value in (("N", n), ("dim", dim)):
        if value < 1:
            raise FormatError(f"{path}: header field {name} must be positive, got {value}")
    ids, offset = _read_id_table(buf, offset, n, path)
    _check_payload_size(buf, offset, n * dim * 4, path)
    arr = np.frombuffer(buf, dtype="<f4", count=n * dim, offset=offset)
    arr = arr.reshape(n, dim).copy()
    bad = _first_nonfinite_sample(arr)
    if bad is not None:
        raise FormatError(f"{path}: non-finite value in sample {bad} ({ids[bad]!r})")
    return FeatureVectorBatch(arr, ids)


def read_labels(path) -> LabelSet:
    """Parse a label CSV into a LabelSet.

    Records are ``sample_id,label`` with label ``private`` or ``public``;
    blank lines are ignored and a literal ``sample_id,label`` header row is
    skipped when present.
    """
    text = Path(path).read_text(encoding="utf-8")
    lines = [(i + 1, line.strip()) for i, line in enumerate(text.splitlines())]
    records = [(num, line) for num, line in lines if line]
    if records and records[0][1] == _LABEL_HEADER:
        records = records[1:]
    if not records:
        raise DataError(f"{path}: empty label file")
    entries: dict[str, int] = {}
    for num, line in records:
        parts = line.split(",")
        if len(parts) != 2:
            raise DataError(f"{path}: malformed record on line {num}: {line!r}")
        sid, token = parts[0].strip(), parts[1].strip()
        if not sid:
            raise DataError(f"{path}: empty sample id on line {num}")
        if token not in LABEL_TOKENS:
            raise DataError(f"{path}: unknown label {token!r} on line {num} (expected private or public)")
        if sid in entries:
            raise DataError(f"{path}: duplicate sample id {sid!r} on line {num}")
        entries[sid] = LABEL_TOKENS[token]
    return LabelSet(entries)


def write_labels(pairs: Iterable[tuple[str, int]], path, header: bool = True) -> None:
    """Write ``(sample_id, class value)`` pairs as a label CSV."""
    lines = []
    if header:
        lines.append(_LABEL_HEADER)
    for sid, value in pairs:
        if value not in TOKEN_FOR_CLASS:
            raise DataError(f"label for {sid!r} must be +1 or -1, got {value!r}")
        lines.append(f"{sid},{TOKEN_FOR_CLASS[value]}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
