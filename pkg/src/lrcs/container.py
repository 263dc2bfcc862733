"""Single-array container file format.

Layout: 5-byte magic "LRCS1"; six little-endian unsigned 32-bit header
fields (kind, n1, n2, q, mc, dtype); for k-space containers a table of q
little-endian u32 per-frame measurement-vector lengths; then the payload.
Complex payloads are little-endian interleaved real/imag float64, written
column-major within each frame, frames in order. Masks are one byte per
cell (0 or 1), column-major within each frame.

Kinds: 0 image sequence, 1 k-space measurements, 2 masks, 3 coil maps.
The only dtype code is 0 (complex float64 interleaved). Writes go to a
temp file in the target directory and are renamed into place.
"""

import os
import struct
import tempfile

import numpy as np

from .errors import DataError
from .operators import MeasurementSet
from .sampling import FrameMask

__all__ = [
    "ContainerError",
    "KIND_IMAGE_SEQ", "KIND_KSPACE", "KIND_MASKS", "KIND_COIL_MAPS",
    "write_image_sequence", "read_image_sequence",
    "write_kspace", "read_kspace",
    "write_masks", "read_masks",
    "write_coil_maps", "read_coil_maps",
    "iter_kspace_frames", "read_kind",
]

MAGIC = b"LRCS1"
KIND_IMAGE_SEQ = 0
KIND_KSPACE = 1
KIND_MASKS = 2
KIND_COIL_MAPS = 3
DTYPE_C16 = 0

_HEADER = struct.Struct("<6I")


class ContainerError(DataError):
    """Malformed container; the message names the failing byte offset."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


def _atomic_write(path, blob: bytes):
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(blob)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise


def _pack(kind, n1, n2, q, mc, frame_lengths=None, payload=b""):
    parts = [MAGIC, _HEADER.pack(kind, n1, n2, q, mc, DTYPE_C16)]
    if kind == KIND_KSPACE:
        parts.append(np.asarray(frame_lengths, dtype="<u4").tobytes())
    parts.append(payload)
    return b"".join(parts)


def _complex_bytes(arr2d: np.ndarray) -> bytes:
    return np.asarray(arr2d, dtype="<c16").ravel(order="F").tobytes()


def _read_header(blob: bytes, path):
    if blob[:5] != MAGIC:
        raise ContainerError(f"{path}: bad magic {blob[:5]!r}", 0)
    if len(blob) < 5 + _HEADER.size:
        raise ContainerError(f"{path}: truncated header", len(blob))
    kind, n1, n2, q, mc, dtype = _HEADER.unpack_from(blob, 5)
    if dtype != DTYPE_C16:
        raise ContainerError(f"{path}: unknown dtype code {dtype}", 5 + 20)
    return kind, n1, n2, q, mc, 5 + _HEADER.size


def _check_payload(blob, offset, expected, path):
    if len(blob) - offset != expected:
        raise ContainerError(
            f"{path}: payload is {len(blob) - offset} bytes, expected {expected}",
            offset)


def write_image_sequence(path, cube: np.ndarray):
    """Write an (n1, n2, q) complex image cube."""
    cube = np.asarray(cube, dtype=np.complex128)
    if cube.ndim != 3:
        raise DataError("image sequence must be (n1, n2, q)")
    n1, n2, q = cube.shape
    payload = b"".join(_complex_bytes(cube[:, :, k]) for k in range(q))
    _atomic_write(path, _pack(KIND_IMAGE_SEQ, n1, n2, q, 1, payload=payload))


def read_image_sequence(path) -> np.ndarray:
    blob = _read_file(path)
    kind, n1, n2, q, _, off = _read_header(blob, path)
    if kind != KIND_IMAGE_SEQ:
        raise ContainerError(f"{path}: kind {kind} is not an image sequence", 5)
    _check_payload(blob, off, n1 * n2 * q * 16, path)
    cube = np.empty((n1, n2, q), dtype=np.complex128)
    frame_bytes = n1 * n2 * 16
    for k in range(q):
        flat = np.frombuffer(blob, dtype="<c16", count=n1 * n2,
                             offset=off + k * frame_bytes)
        cube[:, :, k] = flat.reshape((n1, n2), order="F")
    return cube


def write_kspace(path, mset: MeasurementSet, n1: int, n2: int, mc: int):
    """Write per-frame measurement vectors (variable lengths allowed)."""
    lengths = mset.lengths
    payload = b"".join(np.asarray(f, dtype="<c16").tobytes() for f in mset)
    _atomic_write(path, _pack(KIND_KSPACE, n1, n2, len(mset), mc,
                              frame_lengths=lengths, payload=payload))


def read_kspace(path):
    """Read a k-space container; returns (MeasurementSet, n1, n2, mc)."""
    blob = _read_file(path)
    kind, n1, n2, q, mc, off = _read_header(blob, path)
    if kind != KIND_KSPACE:
        raise ContainerError(f"{path}: kind {kind} is not k-space", 5)
    table_bytes = 4 * q
    if len(blob) < off + table_bytes:
        raise ContainerError(f"{path}: truncated frame-length table", len(blob))
    lengths = np.frombuffer(blob, dtype="<u4", count=q, offset=off)
    off += table_bytes
    _check_payload(blob, off, int(lengths.sum()) * 16, path)
    frames = []
    for L in lengths:
        frames.append(np.frombuffer(blob, dtype="<c16", count=int(L), offset=off).copy())
        off += int(L) * 16
    return MeasurementSet(frames), n1, n2, mc


def write_masks(path, masks):
    """Write per-frame boolean masks, one byte per cell."""
    if not masks:
        raise DataError("no masks to write")
    n1, n2 = masks[0].grid.shape
    payload = b"".join(m.grid.astype(np.uint8).ravel(order="F").tobytes()
                       for m in masks)
    _atomic_write(path, _pack(KIND_MASKS, n1, n2, len(masks), 1, payload=payload))


def read_masks(path):
    blob = _read_file(path)
    kind, n1, n2, q, _, off = _read_header(blob, path)
    if kind != KIND_MASKS:
        raise ContainerError(f"{path}: kind {kind} is not masks", 5)
    _check_payload(blob, off, n1 * n2 * q, path)
    masks = []
    for k in range(q):
        flat = np.frombuffer(blob, dtype=np.uint8, count=n1 * n2,
                             offset=off + k * n1 * n2)
        if np.any(flat > 1):
            raise ContainerError(f"{path}: mask bytes must be 0/1",
                                 off + k * n1 * n2)
        masks.append(FrameMask(flat.reshape((n1, n2), order="F").astype(bool)))
    return masks


def write_coil_maps(path, maps: np.ndarray):
    """Write (mc, n1, n2) complex coil sensitivity maps."""
    maps = np.asarray(maps, dtype=np.complex128)
    if maps.ndim != 3:
        raise DataError("coil maps must be (mc, n1, n2)")
    mc, n1, n2 = maps.shape
    payload = b"".join(_complex_bytes(maps[j]) for j in range(mc))
    _atomic_write(path, _pack(KIND_COIL_MAPS, n1, n2, 1, mc, payload=payload))


def read_coil_maps(path) -> np.ndarray:
    blob = _read_file(path)
    kind, n1, n2, _, mc, off = _read_header(blob, path)
    if kind != KIND_COIL_MAPS:
        raise ContainerError(f"{path}: kind {kind} is not coil maps", 5)
    _check_payload(blob, off, mc * n1 * n2 * 16, path)
    maps = np.empty((mc, n1, n2), dtype=np.complex128)
    frame_bytes = n1 * n2 * 16
    for j in range(mc):
        flat = np.frombuffer(blob, dtype="<c16", count=n1 * n2,
                             offset=off + j * frame_bytes)
        maps[j] = flat.reshape((n1, n2), order="F")
    return maps


def iter_kspace_frames(path):
    """Yield (frame_index, vector) from a k-space container incrementally.

    Frames are read in arrival order with one seek per frame, so a tracking
    consumer never holds the whole file in memory.
    """
    with open(path, "rb") as fh:
        head = fh.read(5 + _HEADER.size)
        kind, n1, n2, q, mc, off = _read_header(head, path)
        if kind != KIND_KSPACE:
            raise ContainerError(f"{path}: kind {kind} is not k-space", 5)
        table = fh.read(4 * q)
        if len(table) != 4 * q:
            raise ContainerError(f"{path}: truncated frame-length table",
                                 off + len(table))
        lengths = np.frombuffer(table, dtype="<u4")
        for k in range(q):
            raw = fh.read(int(lengths[k]) * 16)
            if len(raw) != int(lengths[k]) * 16:
                raise ContainerError(f"{path}: frame {k} payload truncated",
                                     fh.tell())
            yield k, np.frombuffer(raw, dtype="<c16").copy()


def read_kind(path) -> int:
    """Peek at a container's kind field."""
    blob = _read_file(path)
    kind, *_ = _read_header(blob, path)
    return kind


def _read_file(path) -> bytes:
    try:
        with open(path, "rb") as fh:
            return fh.read()
    except OSError as exc:
        raise DataError(f"cannot read container {path}: {exc}") from exc
