"""Single-file weight checkpoints.

Layout: an 8-byte magic string, a little-endian uint64 manifest length, a
UTF-8 JSON manifest, then the raw tensor data.  The manifest records the
config, the training seed and step count, and one entry per tensor with its
name, shape, and byte offset into the data section.  Tensors are row-major
32-bit little-endian floats in manifest order.
"""

from __future__ import annotations

import json
import struct
from typing import BinaryIO

import numpy as np
import torch

from .config import ModelConfig
from .network import ScanpathPredictor, build_model

MAGIC = b"G2SCKPT1"


def save_checkpoint(
    path,
    model: ScanpathPredictor,
    config: ModelConfig,
    seed: int,
    step: int,
    extra: dict | None = None,
) -> None:
    tensors = []
    blobs = []
    offset = 0
    for name, tensor in model.state_dict().items():
        array = tensor.detach().to(torch.float32).contiguous().numpy()
        data = array.astype("<f4", copy=False).tobytes()
        tensors.append(
            {"name": name, "shape": list(array.shape), "offset": offset, "nbytes": len(data)}
        )
        blobs.append(data)
        offset += len(data)
    manifest = {
        "format_version": 1,
        "config": config.to_dict(),
        "seed": seed,
        "step": step,
        "tensors": tensors,
    }
    if extra:
        manifest.update(extra)
    payload = json.dumps(manifest).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<Q", len(payload)))
        fh.write(payload)
        for blob in blobs:
            fh.write(blob)


def _read_manifest(fh: BinaryIO) -> dict:
    magic = fh.read(len(MAGIC))
    if magic != MAGIC:
        raise ValueError(f"not a checkpoint file (magic {magic!r})")
    (length,) = struct.unpack("<Q", fh.read(8))
    return json.loads(fh.read(length).decode("utf-8"))


def read_manifest(path) -> dict:
    with open(path, "rb") as fh:
        return _read_manifest(fh)


def load_checkpoint(path) -> tuple[ScanpathPredictor, ModelConfig, dict]:
    """Rebuild the model from the stored config and load its weights.

    Tensor shapes are validated against the freshly built model; a mismatch
    means the file and config disagree and is an error.
    """
    with open(path, "rb") as fh:
        manifest = _read_manifest(fh)
        data_start = fh.tell()
        config = ModelConfig.from_dict(manifest["config"])
        model = build_model(config)
        state = model.state_dict()
        expected = {name: tuple(t.shape) for name, t in state.items()}
        seen = set()
        for entry in manifest["tensors"]:
            name, shape = entry["name"], tuple(entry["shape"])
            if name not in expected:
                raise ValueError(f"checkpoint tensor {name!r} unknown to this config")
            if expected[name] != shape:
                raise ValueError(
                    f"shape mismatch for {name!r}: checkpoint {shape}, config {expected[name]}"
                )
            fh.seek(data_start + entry["offset"])
            raw = fh.read(entry["nbytes"])
            array = np.frombuffer(raw, dtype="<f4").reshape(shape)
            state[name] = torch.from_numpy(array.copy()).to(state[name].dtype)
            seen.add(name)
        missing = set(expected) - seen
        if missing:
            raise ValueError(f"checkpoint is missing tensors: {sorted(missing)}")
    model.load_state_dict(state)
    return model, config, manifest
