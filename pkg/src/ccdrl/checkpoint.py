"""Binary network checkpoints with a fixed little-endian layout.

Layout: 4-byte magic `CCRL`, u32 format version, u32 head kind (0 critic,
1 actor), u32 layer count, then (rows, cols) u32 pairs per layer, then per
layer the weight matrix (row-major f64) followed by the bias vector (f64).
An u32 flag marks optional optimizer state (u64 step counter, f64 epsilon,
then first- and second-moment arrays mirroring the parameter layout).  The
file ends with a u32 length-prefixed UTF-8 metadata block of `key = value`
lines.  Loading a saved file reproduces every array bit for bit.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .net import AdamState, MlpSpec, NetParams

MAGIC = b"CCRL"
VERSION = 1
_HEADS = {"critic": 0, "actor": 1}
_HEADS_BACK = {v: k for k, v in _HEADS.items()}


class CheckpointError(Exception):
    """Raised for malformed, truncated or unsupported checkpoint files."""


@dataclass
class Checkpoint:
    head: str
    params: NetParams
    adam: AdamState | None = None
    metadata: dict = field(default_factory=dict)

    @property
    def spec(self) -> MlpSpec:
        return MlpSpec(self.head)


def _write_array(fh, a: np.ndarray) -> None:
    fh.write(np.ascontiguousarray(a, dtype="<f8").tobytes())


def _read_exact(fh, count: int) -> bytes:
    data = fh.read(count)
    if len(data) != count:
        raise CheckpointError("truncated checkpoint file")
    return data


def _read_array(fh, shape) -> np.ndarray:
    n = int(np.prod(shape))
    data = _read_exact(fh, n * 8)
    return np.frombuffer(data, dtype="<f8").reshape(shape).astype(float)


def save_checkpoint(path, ckpt: Checkpoint) -> None:
    if ckpt.head not in _HEADS:
        raise ValueError(f"unknown head {ckpt.head!r}")
    params = ckpt.params
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<III", VERSION, _HEADS[ckpt.head],
                             len(params.weights)))
        for w in params.weights:
            fh.write(struct.pack("<II", w.shape[0], w.shape[1]))
        for w, b in zip(params.weights, params.biases):
            _write_array(fh, w)
            _write_array(fh, b)
        if ckpt.adam is None:
            fh.write(struct.pack("<I", 0))
        else:
            fh.write(struct.pack("<I", 1))
            fh.write(struct.pack("<Qd", ckpt.adam.step, ckpt.adam.epsilon))
            for moment in (ckpt.adam.m, ckpt.adam.v):
                for w, b in zip(moment.weights, moment.biases):
                    _write_array(fh, w)
                    _write_array(fh, b)
        meta = "".join(f"{k} = {v}\n" for k, v in ckpt.metadata.items())
        blob = meta.encode("utf-8")
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)


def _read_params(fh, dims) -> NetParams:
    weights, biases = [], []
    for rows, cols in dims:
        weights.append(_read_array(fh, (rows, cols)))
        biases.append(_read_array(fh, (rows,)))
    return NetParams(weights, biases)


def load_checkpoint(path) -> Checkpoint:
    with open(path, "rb") as fh:
        if _read_exact(fh, 4) != MAGIC:
            raise CheckpointError("bad magic: not a checkpoint file")
        version, head_code, n_layers = struct.unpack("<III", _read_exact(fh, 12))
        if version != VERSION:
            raise CheckpointError(f"unsupported checkpoint version {version} "
                                  f"(expected {VERSION})")
        if head_code not in _HEADS_BACK:
            raise CheckpointError(f"unknown head code {head_code}")
        if not 1 <= n_layers <= 64:
            raise CheckpointError(f"implausible layer count {n_layers}")
        dims = [struct.unpack("<II", _read_exact(fh, 8)) for _ in range(n_layers)]
        params = _read_params(fh, dims)
        (has_adam,) = struct.unpack("<I", _read_exact(fh, 4))
        adam = None
        if has_adam == 1:
            step, epsilon = struct.unpack("<Qd", _read_exact(fh, 16))
            m = _read_params(fh, dims)
            v = _read_params(fh, dims)
            adam = AdamState(m=m, v=v, step=step, epsilon=epsilon)
        elif has_adam != 0:
            raise CheckpointError(f"bad optimizer-state flag {has_adam}")
        (meta_len,) = struct.unpack("<I", _read_exact(fh, 4))
        metadata = {}
        if meta_len:
            text = _read_exact(fh, meta_len).decode("utf-8")
            for line in text.splitlines():
                if " = " in line:
                    k, v = line.split(" = ", 1)
                    metadata[k] = v
        head = _HEADS_BACK[head_code]
        ckpt = Checkpoint(head=head, params=params, adam=adam,
                          metadata=metadata)
        expect = MlpSpec(head).layer_dims
        if [tuple(d) for d in dims] != [tuple(d) for d in expect]:
            raise CheckpointError(f"layer dims {dims} do not match the "
                                  f"{head} network {expect}")
        return ckpt
