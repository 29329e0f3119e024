"""Portable binary model files (.kwsm).

Layout: magic "KWSM" | version u32 LE | metadata length u32 LE | metadata
JSON (space-padded to a 4-byte boundary so the float payload stays
aligned) | tensor payload.  The payload is 32-bit little-endian floats,
row-major, in the order the metadata declares, which makes loading a
single sequential read in any language.
"""

from __future__ import annotations

import json
import os
import struct
import tempfile

import numpy as np

from .errors import DataError
from .features import MfccConfig
from .graph import BatchNorm, Model, ModelSpec, ResBlock

MAGIC = b"KWSM"
VERSION = 1


def tensor_items(m):
    """Canonical (name, array) pairs; this fixed order is the payload order."""
    items = [("conv0", m.conv0)]
    for b, blk in enumerate(m.blocks):
        items.append((f"block{b}.conv1", blk.conv1))
        items.append((f"block{b}.bn1.mean", blk.bn1.mean))
        items.append((f"block{b}.bn1.var", blk.bn1.var))
        if blk.bn1.gamma is not None:
            items.append((f"block{b}.bn1.gamma", blk.bn1.gamma))
        items.append((f"block{b}.conv2", blk.conv2))
        items.append((f"block{b}.bn2.mean", blk.bn2.mean))
        items.append((f"block{b}.bn2.var", blk.bn2.var))
    items.append(("fc.weight", m.fc_w))
    items.append(("fc.bias", m.fc_b))
    return items


def model_to_bytes(m):
    items = tensor_items(m)
    meta = {
        "arch": m.spec.arch,
        "base_channels": m.spec.base_channels,
        "inner_widths": list(m.spec.inner_widths),
        "n_labels": m.spec.n_labels,
        "slim_ready": m.spec.slim_ready,
        "labels": list(m.labels),
        "mfcc": m.mfcc.to_dict(),
        "tensors": [{"name": name, "shape": list(arr.shape)} for name, arr in items],
    }
    meta_bytes = json.dumps(meta, sort_keys=True, separators=(",", ":")).encode("utf-8")
    if len(meta_bytes) % 4:
        meta_bytes += b" " * (4 - len(meta_bytes) % 4)
    out = bytearray()
    out += MAGIC
    out += struct.pack("<II", VERSION, len(meta_bytes))
    out += meta_bytes
    for _, arr in items:
        out += np.ascontiguousarray(arr, dtype="<f4").tobytes()
    return bytes(out)


def save_model(m, path):
    """Write atomically: temp file in the target directory, then rename."""
    blob = model_to_bytes(m)
    directory = os.path.dirname(os.path.abspath(str(path))) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".kwsm.tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(blob)
        umask = os.umask(0)
        os.umask(umask)
        os.chmod(tmp, 0o666 & ~umask)  # mkstemp defaults to 0600
        os.replace(tmp, str(path))
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def model_from_bytes(blob, source="<bytes>"):
    if blob[:4] != MAGIC:
        raise DataError(f"{source}: not a model file (bad magic {blob[:4]!r})")
    if len(blob) < 12:
        raise DataError(f"{source}: header truncated")
    version, meta_len = struct.unpack("<II", blob[4:12])
    if version != VERSION:
        raise DataError(f"{source}: unsupported model file version {version} (expected {VERSION})")
    if len(blob) < 12 + meta_len:
        raise DataError(f"{source}: metadata truncated")
    try:
        meta = json.loads(blob[12 : 12 + meta_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise DataError(f"{source}: malformed metadata ({exc})") from exc

    declared = meta["tensors"]
    expected = sum(4 * int(np.prod(t["shape"], dtype=np.int64)) for t in declared)
    payload = blob[12 + meta_len :]
    if len(payload) != expected:
        raise DataError(
            f"{source}: payload length mismatch, expected {expected} bytes, found {len(payload)}"
        )

    tensors = {}
    offset = 0
    for t in declared:
        shape = tuple(int(s) for s in t["shape"])
        count = int(np.prod(shape, dtype=np.int64))
        arr = np.frombuffer(payload, dtype="<f4", count=count, offset=offset)
        tensors[t["name"]] = arr.reshape(shape).astype(np.float32)
        offset += 4 * count

    spec = ModelSpec(
        arch=meta["arch"],
        base_channels=int(meta["base_channels"]),
        inner_widths=tuple(meta["inner_widths"]),
        n_labels=int(meta["n_labels"]),
        slim_ready=bool(meta["slim_ready"]),
    )
    try:
        blocks = []
        for b in range(len(spec.inner_widths)):
            gamma = tensors.get(f"block{b}.bn1.gamma")
            blocks.append(ResBlock(
                conv1=tensors[f"block{b}.conv1"],
                bn1=BatchNorm(tensors[f"block{b}.bn1.mean"], tensors[f"block{b}.bn1.var"], gamma),
                conv2=tensors[f"block{b}.conv2"],
                bn2=BatchNorm(tensors[f"block{b}.bn2.mean"], tensors[f"block{b}.bn2.var"], None),
            ))
        return Model(
            spec=spec,
            conv0=tensors["conv0"],
            blocks=blocks,
            fc_w=tensors["fc.weight"],
            fc_b=tensors["fc.bias"],
            labels=tuple(meta["labels"]),
            mfcc=MfccConfig.from_dict(meta["mfcc"]),
        )
    except KeyError as exc:
        raise DataError(f"{source}: metadata declares no tensor named {exc}") from exc


def load_model(path):
    with open(str(path), "rb") as fh:
        blob = fh.read()
    return model_from_bytes(blob, source=str(path))
