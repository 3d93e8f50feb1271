"""CTSF feature files.

Layout (little-endian): a 20 byte header

    magic "CTSF" | version u16 | flags u16 | n_users u32 | n_symbols u32 | n_subcarriers u32

followed by N·L·K complex entries stored as (real f32, imag f32) pairs,
user-major, then symbol, then subcarrier. Features are float64 in memory, so
the file is the one lossy boundary of the pipeline.
"""

from pathlib import Path

import numpy as np
from filelock import FileLock, Timeout
from loguru import logger
from pydantic import ValidationError

from ctsemcom.config.settings import settings
from ctsemcom.core.exceptions import (
    BadMagic,
    IoFailure,
    ShapeMismatch,
    ShapeOverflow,
    TruncatedPayload,
    VersionMismatch,
)
from ctsemcom.domains.signals import FeatureBlock

MAGIC = b"CTSF"
VERSION = 1
MAX_PAYLOAD_ENTRIES = 1 << 30

HEADER_DTYPE = np.dtype(
    [
        ("magic", "S4"),
        ("version", "<u2"),
        ("flags", "<u2"),
        ("n_users", "<u4"),
        ("n_symbols", "<u4"),
        ("n_subcarriers", "<u4"),
    ]
)
_COMPONENT_DTYPE = np.dtype("<f4")


def _lock(path: Path) -> FileLock:
    return FileLock(f"{path}.lock", timeout=settings.FILE_LOCK_TIMEOUT_SECONDS)


def write_features(blocks: list[FeatureBlock], path: str | Path) -> None:
    path = Path(path)
    if not blocks:
        raise ShapeMismatch(details="no feature blocks to write")
    shape = blocks[0].shape
    for block in blocks:
        if block.shape != shape:
            raise ShapeMismatch(details=f"user {block.user}: {block.shape} vs {shape}")

    header = np.zeros(1, dtype=HEADER_DTYPE)
    header["magic"] = MAGIC
    header["version"] = VERSION
    header["n_users"] = len(blocks)
    header["n_symbols"], header["n_subcarriers"] = shape

    data = np.stack([block.data for block in blocks])
    payload = np.empty(data.shape + (2,), dtype=_COMPONENT_DTYPE)
    payload[..., 0] = data.real
    payload[..., 1] = data.imag

    try:
        with _lock(path):
            path.write_bytes(header.tobytes() + payload.tobytes())
    except (OSError, Timeout) as ex:
        raise IoFailure(message=f"cannot write feature file {path}", details=str(ex)) from ex
    logger.debug(f"wrote {len(blocks)} feature block(s) of shape {shape} to {path}")


def read_features(path: str | Path) -> list[FeatureBlock]:
    path = Path(path)
    try:
        with _lock(path):
            raw = path.read_bytes()
    except (OSError, Timeout) as ex:
        raise IoFailure(message=f"cannot read feature file {path}", details=str(ex)) from ex

    if raw[: len(MAGIC)] != MAGIC:
        raise BadMagic(details=f"{path}: magic {raw[:4]!r}")
    if len(raw) < HEADER_DTYPE.itemsize:
        raise TruncatedPayload(details=f"{path}: header holds {len(raw)} bytes")

    header = np.frombuffer(raw, dtype=HEADER_DTYPE, count=1)[0]
    if int(header["version"]) != VERSION:
        raise VersionMismatch(details=f"{path}: version {int(header['version'])}")

    dims = (int(header["n_users"]), int(header["n_symbols"]), int(header["n_subcarriers"]))
    if min(dims) == 0:
        raise ShapeMismatch(details=f"{path}: zero dimension in {dims}")
    entries = dims[0] * dims[1] * dims[2]
    if entries > MAX_PAYLOAD_ENTRIES:
        raise ShapeOverflow(details=f"{path}: {dims} exceeds {MAX_PAYLOAD_ENTRIES} entries")

    payload = raw[HEADER_DTYPE.itemsize :]
    expected = entries * 2 * _COMPONENT_DTYPE.itemsize
    if len(payload) < expected:
        raise TruncatedPayload(details=f"{path}: {len(payload)} of {expected} payload bytes")
    if len(payload) > expected:
        raise ShapeOverflow(details=f"{path}: {len(payload) - expected} trailing bytes")

    values = np.frombuffer(payload, dtype=_COMPONENT_DTYPE).reshape(dims + (2,))
    data = values[..., 0].astype(np.float64) + 1j * values[..., 1].astype(np.float64)
    try:
        return [FeatureBlock(user=n, data=data[n]) for n in range(dims[0])]
    except ValidationError as ex:
        raise IoFailure(message=f"malformed feature file {path}", details=str(ex)) from ex
