"""Binary checkpoints of NPD parameters.

Layout: ``NPDC`` magic, one version byte, a UTF-8 text header of
``key=value`` lines ended by a blank line, then every parameter as
little-endian float64 in the order E, E_co, F, G, H (per layer: weight
matrix row-major, then bias). ``dtype`` records the working precision;
float32 values survive the float64 body exactly.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from ..nn import Mlp
from ..npd.model import NpdParams

MAGIC = b"NPDC"
VERSION = 1


class CheckpointError(ValueError):
    pass


def _dims(net: Mlp) -> str:
    return ",".join(str(v) for v in net.layer_dims)


def encode_checkpoint(params: NpdParams) -> bytes:
    header = [
        f"d={params.d}", f"h={params.h}", f"m={params.m}", f"activation={params.E.activation}",
        f"dtype={params.E.dtype.name}",
        f"E={_dims(params.E)}", f"E_co={params.E_co.size}", f"F={_dims(params.F)}",
        f"G={_dims(params.G)}", f"H={_dims(params.H)}",
    ]
    body = b"".join(np.ascontiguousarray(p, dtype="<f8").tobytes() for p in params.parameters())
    return MAGIC + bytes([VERSION]) + ("\n".join(header) + "\n\n").encode() + body


def save_checkpoint(params: NpdParams, path) -> None:
    Path(path).write_bytes(encode_checkpoint(params))


def _net(dims, activation, name, dtype):
    try:
        shape = tuple(int(v) for v in dims.split(","))
        net = Mlp(shape, activation, rng=0, dtype=dtype)
    except ValueError as exc:
        raise CheckpointError(f"bad layer dims for {name}: {dims!r}") from exc
    return net


def decode_checkpoint(blob: bytes) -> NpdParams:
    if blob[:4] != MAGIC:
        raise CheckpointError("not an NPD checkpoint (bad magic)")
    if len(blob) < 5 or blob[4] != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {blob[4] if len(blob) > 4 else None}")
    end = blob.find(b"\n\n", 5)
    if end < 0:
        raise CheckpointError("truncated checkpoint header")
    try:
        fields = dict(line.split("=", 1) for line in blob[5:end].decode().splitlines())
        d, h, m = int(fields["d"]), int(fields["h"]), int(fields["m"])
        act = fields["activation"]
        dtype = fields.get("dtype", "float64")
        if dtype not in ("float32", "float64"):
            raise ValueError(f"unsupported dtype {dtype!r}")
        nets = {k: _net(fields[k], act, k, dtype) for k in ("E", "F", "G", "H")}
        n_co = int(fields["E_co"])
    except (KeyError, ValueError, UnicodeDecodeError) as exc:
        raise CheckpointError(f"malformed checkpoint header: {exc}") from exc
    expected = {"E": (3, d * m), "F": (2 * d, d), "G": (2 * d + 1, d), "H": (d, 1)}
    for k, (i, o) in expected.items():
        if nets[k].d_in != i or nets[k].d_out != o:
            raise CheckpointError(f"network {k} has dims {nets[k].layer_dims}, inconsistent with d={d}, m={m}")
    if n_co != d * m:
        raise CheckpointError(f"E_co length {n_co} != d*m = {d * m}")
    params = NpdParams(nets["E"], np.zeros(n_co, dtype), nets["F"], nets["G"], nets["H"], d, h, m)
    arrays = params.parameters()
    need = sum(a.size for a in arrays) * 8
    body = blob[end + 2:]
    if len(body) != need:
        raise CheckpointError(f"checkpoint body has {len(body)} bytes, expected {need}")
    data = np.frombuffer(body, dtype="<f8")
    off = 0
    for a in arrays:
        a[...] = data[off: off + a.size].reshape(a.shape)
        off += a.size
    return params


def load_checkpoint(path) -> NpdParams:
    return decode_checkpoint(Path(path).read_bytes())
