"""
Checkpoint file of a value network.

Layout, all integers ``<u4`` and all parameters ``<f8``:

    magic     7 bytes  b"CXFLOW1"
    J         directions of the mode the network was trained for
    n         number of layer dimensions
    dims      n integers, input width first, 2 outputs last
    blocks    per layer the weight matrix row-major (out x in), then the bias

The target network is not stored; it is rebuilt as a copy on load.
"""

import logging
import struct
from pathlib import Path
from typing import Optional, Union

import numpy as np
import torch

from cxflow.common.constants import CHECKPOINT_MAGIC
from cxflow.common.enums import DirectionMode
from cxflow.common.exceptions import CheckpointError
from cxflow.learn.network import N_ACTIONS, ValueNetwork
from cxflow.perception.models import Observation

log = logging.getLogger(__name__)

_U32 = struct.Struct("<I")


def checkpoint_bytes(net: ValueNetwork, mode: DirectionMode) -> bytes:
    if net.input_dim != Observation.length(mode):
        raise CheckpointError(f"network input {net.input_dim} does not match {mode.value}")
    parts = [CHECKPOINT_MAGIC, _U32.pack(mode.directions), _U32.pack(len(net.dims))]
    parts += [_U32.pack(d) for d in net.dims]
    for layer in net.layers:
        parts.append(layer.weight.detach().numpy().astype("<f8").tobytes(order="C"))
        parts.append(layer.bias.detach().numpy().astype("<f8").tobytes(order="C"))
    return b"".join(parts)


def save_checkpoint(path: Union[str, Path], net: ValueNetwork, mode: DirectionMode) -> None:
    data = checkpoint_bytes(net, mode)
    Path(path).write_bytes(data)
    log.info(f"wrote checkpoint {path} ({len(data)} bytes)")


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.offset = 0

    def take(self, size: int) -> bytes:
        if self.offset + size > len(self.data):
            raise CheckpointError("checkpoint is truncated")
        chunk = self.data[self.offset : self.offset + size]
        self.offset += size
        return chunk

    def u32(self) -> int:
        return _U32.unpack(self.take(_U32.size))[0]


def network_from_bytes(data: bytes, mode: Optional[DirectionMode] = None) -> ValueNetwork:
    """
    Rebuilds a network from checkpoint bytes.

    Args:
        data: the file content.
        mode: when given, the checkpoint must have been trained for it.

    Raises:
        CheckpointError: If the content is malformed or trained for another mode.
    """
    reader = _Reader(data)
    if reader.take(len(CHECKPOINT_MAGIC)) != CHECKPOINT_MAGIC:
        raise CheckpointError("not a cxflow checkpoint")
    directions = reader.u32()
    if directions not in (8, 12):
        raise CheckpointError(f"checkpoint names {directions} directions")
    if mode is not None and directions != mode.directions:
        raise CheckpointError(
            f"checkpoint was trained for {directions} directions, the intersection has {mode.directions}"
        )
    count = reader.u32()
    if count < 2:
        raise CheckpointError(f"checkpoint has {count} layer dimensions")
    dims = [reader.u32() for _ in range(count)]
    expected = Observation.length(DirectionMode.EIGHT if directions == 8 else DirectionMode.TWELVE)
    if dims[0] != expected or dims[-1] != N_ACTIONS:
        raise CheckpointError(f"checkpoint dimensions {dims} do not fit {directions} directions")

    net = ValueNetwork(dims[0], hidden=dims[1:-1])
    with torch.no_grad():
        for layer in net.layers:
            n_out, n_in = layer.out_features, layer.in_features
            weight = np.frombuffer(reader.take(8 * n_out * n_in), dtype="<f8").reshape(n_out, n_in)
            bias = np.frombuffer(reader.take(8 * n_out), dtype="<f8")
            layer.weight.copy_(torch.as_tensor(weight.astype(np.float64)))
            layer.bias.copy_(torch.as_tensor(bias.astype(np.float64)))
    if reader.offset != len(data):
        raise CheckpointError(f"checkpoint has {len(data) - reader.offset} trailing bytes")
    return net


def load_checkpoint(path: Union[str, Path], mode: Optional[DirectionMode] = None) -> ValueNetwork:
    """
    Raises:
        CheckpointError: If the file is missing, malformed or trained for another mode.
    """
    path = Path(path)
    if not path.is_file():
        raise CheckpointError(f"checkpoint {path} does not exist")
    net = network_from_bytes(path.read_bytes(), mode)
    log.info(f"loaded checkpoint {path} with layers {net.dims}")
    return net
