"""Versioned binary checkpoint codec.

Layout (all integers little-endian)::

    magic      4 bytes  b"SCST"
    version    u16
    kind       u16 length + utf-8 bytes      (model-kind tag, e.g. "att2in")
    config     u32 length + utf-8 JSON       (model configuration)
    count      u32                           (number of parameters)
    params     count records
    moment 1   count records (same order)
    moment 2   count records (same order)
    step       u64

    record     u16 name length, name bytes, u8 rank, rank × u32 extents,
               raw <f8 data
"""

import io
import logging
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO, Final

import numpy as np

from ..exceptions import CheckpointError
from .params import ParamStore
from .tensor import Tensor

logger = logging.getLogger(__name__)

MAGIC: Final = b"SCST"
VERSION: Final = 1


@dataclass(frozen=True)
class CheckpointPayload:
    """Decoded checkpoint contents."""

    kind: str
    config_json: str
    store: ParamStore


def _write_record(buf: BinaryIO, name: str, value: Tensor) -> None:
    encoded = name.encode("utf-8")
    buf.write(struct.pack("<H", len(encoded)))
    buf.write(encoded)
    buf.write(struct.pack("<B", value.ndim))
    buf.write(struct.pack(f"<{value.ndim}I", *value.shape))
    buf.write(np.ascontiguousarray(value, dtype="<f8").tobytes())


def _read_exact(buf: BinaryIO, size: int) -> bytes:
    data = buf.read(size)
    if len(data) != size:
        raise CheckpointError(f"Truncated checkpoint: wanted {size} bytes")
    return data


def _read_record(buf: BinaryIO) -> tuple[str, Tensor]:
    (name_len,) = struct.unpack("<H", _read_exact(buf, 2))
    name = _read_exact(buf, name_len).decode("utf-8")
    (rank,) = struct.unpack("<B", _read_exact(buf, 1))
    shape = struct.unpack(f"<{rank}I", _read_exact(buf, 4 * rank))
    count = int(np.prod(shape, dtype=np.int64))
    raw = _read_exact(buf, 8 * count)
    value = np.frombuffer(raw, dtype="<f8").astype(np.float64).reshape(shape)
    return name, value


def encode_checkpoint(store: ParamStore, kind: str, config_json: str) -> bytes:
    """Serialize parameters, ADAM state and header to bytes."""
    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(struct.pack("<H", VERSION))
    tag = kind.encode("utf-8")
    buf.write(struct.pack("<H", len(tag)))
    buf.write(tag)
    cfg = config_json.encode("utf-8")
    buf.write(struct.pack("<I", len(cfg)))
    buf.write(cfg)
    buf.write(struct.pack("<I", len(store)))
    for section in (store.params, store.first_moment, store.second_moment):
        for name, value in section.items():
            _write_record(buf, name, value)
    buf.write(struct.pack("<Q", store.step))
    return buf.getvalue()


def decode_checkpoint(data: bytes) -> CheckpointPayload:
    """Inverse of :func:`encode_checkpoint`.

    Raises:
        CheckpointError: On bad magic, unknown version or inconsistent records.
    """
    buf = io.BytesIO(data)
    if _read_exact(buf, 4) != MAGIC:
        raise CheckpointError("Not a checkpoint file (bad magic)")
    (version,) = struct.unpack("<H", _read_exact(buf, 2))
    if version != VERSION:
        raise CheckpointError(f"Unsupported checkpoint version {version}")
    (tag_len,) = struct.unpack("<H", _read_exact(buf, 2))
    kind = _read_exact(buf, tag_len).decode("utf-8")
    (cfg_len,) = struct.unpack("<I", _read_exact(buf, 4))
    config_json = _read_exact(buf, cfg_len).decode("utf-8")
    (count,) = struct.unpack("<I", _read_exact(buf, 4))

    store = ParamStore()
    for _ in range(count):
        name, value = _read_record(buf)
        store.add(name, value)
    for section in (store.first_moment, store.second_moment):
        for expected in store.params:
            name, value = _read_record(buf)
            if name != expected or value.shape != store.params[name].shape:
                raise CheckpointError(
                    f"Optimizer record {name} does not match parameter {expected}"
                )
            section[name] = value
    (store.step,) = struct.unpack("<Q", _read_exact(buf, 8))
    if buf.read(1):
        raise CheckpointError("Trailing bytes after checkpoint step counter")
    return CheckpointPayload(kind=kind, config_json=config_json, store=store)


def save_checkpoint(path: Path, store: ParamStore, kind: str, config_json: str) -> None:
    """Write a checkpoint file.

    Raises:
        CheckpointError: If the file cannot be written.
    """
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(encode_checkpoint(store, kind, config_json))
        logger.debug(f"Saved checkpoint {path} ({len(store)} parameters)")
    except OSError as e:
        raise CheckpointError(f"Failed to write checkpoint {path}: {e!s}") from e


def load_checkpoint(path: Path) -> CheckpointPayload:
    """Read a checkpoint file.

    Raises:
        CheckpointError: If the file is missing or malformed.
    """
    try:
        data = path.read_bytes()
    except FileNotFoundError:
        raise CheckpointError(f"Checkpoint not found: {path}") from None
    except OSError as e:
        raise CheckpointError(f"Failed to read checkpoint {path}: {e!s}") from e
    return decode_checkpoint(data)
