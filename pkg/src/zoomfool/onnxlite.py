"""Minimal ONNX model loader and numpy executor.

Covers the small feed-forward op set this toolkit's classifiers use
(Conv / Relu / MaxPool / GlobalAveragePool / Flatten / Gemm / Softmax /
Identity) so models run without onnxruntime installed. Files are standard
ONNX protobuf; anything outside the supported subset fails loudly at load
time. Execution is float32 numpy and fully deterministic.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ModelLoadError

# protobuf wire types
_VARINT, _FIX64, _LEN, _FIX32 = 0, 1, 2, 5

_DTYPES = {1: np.float32, 6: np.int32, 7: np.int64, 11: np.float64}

SUPPORTED_OPS = {
    "Conv",
    "Relu",
    "MaxPool",
    "GlobalAveragePool",
    "Flatten",
    "Gemm",
    "Softmax",
    "Identity",
}


def _read_varint(buf: bytes, pos: int) -> tuple[int, int]:
    result = 0
    shift = 0
    while True:
        if pos >= len(buf):
            raise ModelLoadError("truncated protobuf varint")
        byte = buf[pos]
        pos += 1
        result |= (byte & 0x7F) << shift
        if not byte & 0x80:
            return result, pos
        shift += 7
        if shift > 70:
            raise ModelLoadError("malformed protobuf varint")


def _signed(v: int) -> int:
    return v - (1 << 64) if v >= 1 << 63 else v


def _fields(buf: bytes):
    """Yield (field_number, wire_type, value) triples from a message buffer."""
    pos = 0
    while pos < len(buf):
        tag, pos = _read_varint(buf, pos)
        num, wire = tag >> 3, tag & 7
        if wire == _VARINT:
            val, pos = _read_varint(buf, pos)
        elif wire == _FIX64:
            val = buf[pos : pos + 8]
            pos += 8
        elif wire == _LEN:
            size, pos = _read_varint(buf, pos)
            val = buf[pos : pos + size]
            if len(val) != size:
                raise ModelLoadError("truncated protobuf field")
            pos += size
        elif wire == _FIX32:
            val = buf[pos : pos + 4]
            pos += 4
        else:
            raise ModelLoadError(f"unsupported protobuf wire type {wire}")
        yield num, wire, val


def _packed_varints(val, wire) -> list[int]:
    if wire == _VARINT:
        return [_signed(val)]
    out = []
    pos = 0
    while pos < len(val):
        v, pos = _read_varint(val, pos)
        out.append(_signed(v))
    return out


def _parse_tensor(buf: bytes) -> tuple[str, np.ndarray]:
    dims: list[int] = []
    data_type = 1
    name = ""
    raw = None
    floats: list[float] = []
    ints: list[int] = []
    for num, wire, val in _fields(buf):
        if num == 1:
            dims.extend(_packed_varints(val, wire))
        elif num == 2:
            data_type = val
        elif num == 4:
            if wire == _FIX32:
                floats.append(struct.unpack("<f", val)[0])
            else:
                floats.extend(struct.unpack(f"<{len(val) // 4}f", val))
        elif num == 7:
            ints.extend(_packed_varints(val, wire))
        elif num == 8:
            name = val.decode()
        elif num == 9:
            raw = val
    if data_type not in _DTYPES:
        raise ModelLoadError(f"unsupported tensor data type {data_type}")
    dtype = _DTYPES[data_type]
    if raw is not None:
        arr = np.frombuffer(raw, dtype=dtype).copy()
    elif floats:
        arr = np.asarray(floats, dtype=dtype)
    elif ints:
        arr = np.asarray(ints, dtype=dtype)
    else:
        arr = np.zeros(0, dtype=dtype)
    shape = tuple(int(d) for d in dims)
    if shape and arr.size != int(np.prod(shape)):
        raise ModelLoadError(f"tensor {name!r}: payload size {arr.size} != shape {shape}")
    return name, arr.reshape(shape)


def _parse_attribute(buf: bytes) -> tuple[str, object]:
    name = ""
    value: object = None
    ints: list[int] = []
    floats: list[float] = []
    for num, wire, val in _fields(buf):
        if num == 1:
            name = val.decode()
        elif num == 2:
            value = struct.unpack("<f", val)[0]
        elif num == 3:
            value = _signed(val)
        elif num == 4:
            value = val.decode()
        elif num == 5:
            value = _parse_tensor(val)[1]
        elif num == 7:
            if wire == _FIX32:
                floats.append(struct.unpack("<f", val)[0])
            else:
                floats.extend(struct.unpack(f"<{len(val) // 4}f", val))
        elif num == 8:
            ints.extend(_packed_varints(val, wire))
    if ints:
        value = ints
    elif floats:
        value = floats
    return name, value


@dataclass
class _Node:
    op_type: str
    inputs: list[str]
    outputs: list[str]
    attrs: dict = field(default_factory=dict)


def _parse_value_info_name(buf: bytes) -> str:
    for num, _, val in _fields(buf):
        if num == 1:
            return val.decode()
    return ""


class OnnxModel:
    """A loaded model: parsed graph plus an execution method."""

    def __init__(self, nodes, initializers, input_names, output_names, opset):
        self.nodes: list[_Node] = nodes
        self.initializers: dict[str, np.ndarray] = initializers
        self.input_names: list[str] = input_names
        self.output_names: list[str] = output_names
        self.opset = opset
        self._validate()

    @classmethod
    def load(cls, path: str | Path) -> "OnnxModel":
        try:
            blob = Path(path).read_bytes()
        except OSError as exc:
            raise ModelLoadError(f"cannot read model file: {exc}") from exc
        return cls.from_bytes(blob)

    @classmethod
    def from_bytes(cls, blob: bytes) -> "OnnxModel":
        graph = None
        opset = 0
        for num, _, val in _fields(blob):
            if num == 7:
                graph = val
            elif num == 8:
                for n2, _, v2 in _fields(val):
                    if n2 == 2:
                        opset = max(opset, v2)
        if graph is None:
            raise ModelLoadError("no graph found in model file")

        nodes: list[_Node] = []
        initializers: dict[str, np.ndarray] = {}
        input_names: list[str] = []
        output_names: list[str] = []
        for num, _, val in _fields(graph):
            if num == 1:
                node = _Node("", [], [])
                for n2, _, v2 in _fields(val):
                    if n2 == 1:
                        node.inputs.append(v2.decode())
                    elif n2 == 2:
                        node.outputs.append(v2.decode())
                    elif n2 == 4:
                        node.op_type = v2.decode()
                    elif n2 == 5:
                        k, v = _parse_attribute(v2)
                        node.attrs[k] = v
                nodes.append(node)
            elif num == 5:
                name, arr = _parse_tensor(val)
                initializers[name] = arr
            elif num == 11:
                input_names.append(_parse_value_info_name(val))
            elif num == 12:
                output_names.append(_parse_value_info_name(val))
        feeds = [n for n in input_names if n not in initializers]
        return cls(nodes, initializers, feeds, output_names, opset)

    def _validate(self):
        known = set(self.initializers) | set(self.input_names)
        for node in self.nodes:
            if node.op_type not in SUPPORTED_OPS:
                raise ModelLoadError(f"unsupported op {node.op_type!r}")
            for name in node.inputs:
                if name and name not in known:
                    raise ModelLoadError(
                        f"{node.op_type} input {name!r} is not produced before use"
                    )
            known.update(node.outputs)
        missing = [n for n in self.output_names if n not in known]
        if missing:
            raise ModelLoadError(f"graph outputs never produced: {missing}")

    def run(self, feeds: dict[str, np.ndarray], outputs: list[str] | None = None) -> list[np.ndarray]:
        values: dict[str, np.ndarray] = dict(self.initializers)
        for name in self.input_names:
            if name not in feeds:
                raise ModelLoadError(f"missing model input {name!r}")
            values[name] = np.asarray(feeds[name], dtype=np.float32)
        for node in self.nodes:
            args = [values[n] if n else None for n in node.inputs]
            results = _OPS[node.op_type](node, args)
            for name, arr in zip(node.outputs, results):
                values[name] = arr
        return [values[name] for name in (outputs or self.output_names)]


def _op_conv(node: _Node, args):
    x, w = args[0], args[1]
    b = args[2] if len(args) > 2 else None
    if node.attrs.get("group", 1) != 1:
        raise ModelLoadError("grouped Conv not supported")
    if any(d != 1 for d in node.attrs.get("dilations", [1, 1])):
        raise ModelLoadError("dilated Conv not supported")
    sh, sw = node.attrs.get("strides", [1, 1])
    pads = node.attrs.get("pads", [0, 0, 0, 0])
    pt, pl, pb, pr = pads
    x = np.pad(x, ((0, 0), (0, 0), (pt, pb), (pl, pr)))
    kh, kw = w.shape[2], w.shape[3]
    windows = np.lib.stride_tricks.sliding_window_view(x, (kh, kw), axis=(2, 3))
    windows = windows[:, :, ::sh, ::sw]  # (N, C, OH, OW, kh, kw)
    out = np.einsum("nchwij,mcij->nmhw", windows, w, optimize=True).astype(np.float32)
    if b is not None:
        out = out + b.reshape(1, -1, 1, 1)
    return [out]


def _op_maxpool(node: _Node, args):
    (x,) = args
    kh, kw = node.attrs["kernel_shape"]
    sh, sw = node.attrs.get("strides", [kh, kw])
    pads = node.attrs.get("pads", [0, 0, 0, 0])
    pt, pl, pb, pr = pads
    if any(pads):
        x = np.pad(x, ((0, 0), (0, 0), (pt, pb), (pl, pr)), constant_values=-np.inf)
    windows = np.lib.stride_tricks.sliding_window_view(x, (kh, kw), axis=(2, 3))
    return [windows[:, :, ::sh, ::sw].max(axis=(-2, -1)).astype(np.float32)]


def _op_gemm(node: _Node, args):
    a, b = args[0], args[1]
    c = args[2] if len(args) > 2 else None
    alpha = node.attrs.get("alpha", 1.0)
    beta = node.attrs.get("beta", 1.0)
    if node.attrs.get("transA", 0):
        a = a.T
    if node.attrs.get("transB", 0):
        b = b.T
    out = alpha * (a @ b)
    if c is not None:
        out = out + beta * c
    return [out.astype(np.float32)]


def _op_softmax(node: _Node, args):
    (x,) = args
    axis = node.attrs.get("axis", -1)
    shifted = x - x.max(axis=axis, keepdims=True)
    exp = np.exp(shifted)
    return [(exp / exp.sum(axis=axis, keepdims=True)).astype(np.float32)]


def _op_flatten(node: _Node, args):
    (x,) = args
    axis = node.attrs.get("axis", 1)
    lead = int(np.prod(x.shape[:axis])) if axis else 1
    return [x.reshape(lead, -1)]


_OPS = {
    "Conv": _op_conv,
    "Relu": lambda node, args: [np.maximum(args[0], 0)],
    "MaxPool": _op_maxpool,
    "GlobalAveragePool": lambda node, args: [
        args[0].mean(axis=(2, 3), keepdims=True).astype(np.float32)
    ],
    "Flatten": _op_flatten,
    "Gemm": _op_gemm,
    "Softmax": _op_softmax,
    "Identity": lambda node, args: [args[0]],
}
