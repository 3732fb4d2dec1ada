"""Versioned binary checkpoints.

Layout (little-endian)::

    magic    8 bytes   b"LATCKPT\\0"
    version  u32
    clen     u32       length of the config block
    digest   32 bytes  sha256 over config block + array block
    config   clen bytes, "key=value" lines (UTF-8)
    arrays   per parameter, in ``param_shapes`` order:
             u16 name length, name, u8 ndim, u32 dims..., float64 data
"""
import hashlib
import struct

import numpy as np

from .model import Model, ModelConfig, param_shapes

MAGIC = b"LATCKPT\0"
VERSION = 1
_HEAD = struct.Struct("<8sII32s")


class CheckpointError(ValueError):
    pass


def _config_text(cfg: ModelConfig) -> bytes:
    return "".join(f"{k}={v}\n" for k, v in cfg.to_dict().items()).encode()


def _parse_config(text: bytes) -> ModelConfig:
    fields = {}
    for line in text.decode().splitlines():
        key, _, value = line.partition("=")
        fields[key] = int(value)
    return ModelConfig(**fields)


def dumps(model: Model) -> bytes:
    cfg_text = _config_text(model.config)
    chunks = []
    for name, shape in param_shapes(model.config):
        arr = np.ascontiguousarray(model.params[name], dtype="<f8")
        if arr.shape != shape:
            raise CheckpointError(f"parameter {name} has shape {arr.shape}, expected {shape}")
        raw = name.encode()
        chunks.append(struct.pack("<H", len(raw)) + raw + struct.pack("<B", len(shape)))
        chunks.append(struct.pack(f"<{len(shape)}I", *shape))
        chunks.append(arr.tobytes())
    payload = b"".join(chunks)
    digest = hashlib.sha256(cfg_text + payload).digest()
    return _HEAD.pack(MAGIC, VERSION, len(cfg_text), digest) + cfg_text + payload


def loads(data: bytes) -> Model:
    if len(data) < _HEAD.size:
        raise CheckpointError("checksum mismatch: file truncated")
    magic, version, clen, digest = _HEAD.unpack_from(data)
    if magic != MAGIC:
        raise CheckpointError("not a checkpoint file (bad magic)")
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    body = data[_HEAD.size:]
    if hashlib.sha256(body).digest() != digest:
        raise CheckpointError("checksum mismatch")
    try:
        cfg = _parse_config(body[:clen])
    except (ValueError, TypeError) as exc:
        raise CheckpointError(f"malformed checkpoint: bad config ({exc})") from None
    params = {}
    off = clen
    try:
        for name, shape in param_shapes(cfg):
            (nlen,) = struct.unpack_from("<H", body, off)
            got = body[off + 2:off + 2 + nlen].decode()
            off += 2 + nlen
            (ndim,) = struct.unpack_from("<B", body, off)
            dims = struct.unpack_from(f"<{ndim}I", body, off + 1)
            off += 1 + 4 * ndim
            if got != name or tuple(dims) != shape:
                raise CheckpointError(f"malformed checkpoint: expected {name}{shape}, "
                                      f"found {got}{tuple(dims)}")
            count = int(np.prod(shape))
            if off + 8 * count > len(body):
                raise CheckpointError("malformed checkpoint: array data truncated")
            params[name] = np.frombuffer(body, "<f8", count, off).reshape(shape).astype(np.float64)
            off += 8 * count
    except struct.error:
        raise CheckpointError("malformed checkpoint: array header truncated") from None
    if off != len(body):
        raise CheckpointError("malformed checkpoint: trailing data")
    return Model(cfg, params)


def save_checkpoint(model: Model, path) -> None:
    with open(path, "wb") as f:
        f.write(dumps(model))


def load_checkpoint(path) -> Model:
    with open(path, "rb") as f:
        return loads(f.read())
