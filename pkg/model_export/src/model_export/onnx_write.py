"""Hand-rolled ONNX protobuf encoder for the fixed feed-forward graph we export.

torch.onnx.export needs the `onnx` package, which this environment cannot
install, so the model file is serialized directly. The output is standard
ONNX (ir_version 8, opset 13) and loads under onnxruntime elsewhere.
`check_model` re-parses the written bytes with a generic protobuf walker,
independent of the encoder, as the structural validity gate.
"""

from __future__ import annotations

import struct

import numpy as np

# AttributeProto.type enum values
_ATTR_FLOAT, _ATTR_INT, _ATTR_INTS = 1, 2, 7
_FLOAT32 = 1  # TensorProto.DataType


def _varint(value: int) -> bytes:
    if value < 0:
        raise ValueError("negative varints are not needed here")
    out = bytearray()
    while True:
        byte = value & 0x7F
        value >>= 7
        if value:
            out.append(byte | 0x80)
        else:
            out.append(byte)
            return bytes(out)


def _tag(field: int, wire: int) -> bytes:
    return _varint((field << 3) | wire)


def _len_delim(field: int, payload: bytes) -> bytes:
    return _tag(field, 2) + _varint(len(payload)) + payload


def _string(field: int, value: str) -> bytes:
    return _len_delim(field, value.encode())


def _uint(field: int, value: int) -> bytes:
    return _tag(field, 0) + _varint(value)


def tensor(name: str, array: np.ndarray) -> bytes:
    arr = np.ascontiguousarray(array, dtype=np.float32)
    dims = b"".join(_varint(d) for d in arr.shape)
    return b"".join(
        [
            _len_delim(1, dims),  # dims, packed
            _uint(2, _FLOAT32),
            _string(8, name),
            _len_delim(9, arr.tobytes()),  # raw_data, little-endian float32
        ]
    )


def _attribute(name: str, value) -> bytes:
    parts = [_string(1, name)]
    if isinstance(value, float):
        parts.append(_tag(2, 5) + struct.pack("<f", value))
        parts.append(_uint(20, _ATTR_FLOAT))
    elif isinstance(value, int):
        parts.append(_uint(3, value))
        parts.append(_uint(20, _ATTR_INT))
    elif isinstance(value, (list, tuple)):
        parts.append(_len_delim(8, b"".join(_varint(v) for v in value)))
        parts.append(_uint(20, _ATTR_INTS))
    else:
        raise TypeError(f"unsupported attribute value {value!r}")
    return b"".join(parts)


def node(op_type: str, inputs, outputs, **attrs) -> bytes:
    parts = [_string(1, i) for i in inputs]
    parts += [_string(2, o) for o in outputs]
    parts.append(_string(4, op_type))
    parts += [_len_delim(5, _attribute(k, v)) for k, v in attrs.items()]
    return b"".join(parts)


def value_info(name: str, shape) -> bytes:
    dims = b"".join(_len_delim(1, _uint(1, d)) for d in shape)  # Dimension.dim_value
    tensor_type = _uint(1, _FLOAT32) + _len_delim(2, dims)  # elem_type + TensorShapeProto
    return _string(1, name) + _len_delim(2, _len_delim(1, tensor_type))


def graph(name: str, nodes, inputs, outputs, initializers) -> bytes:
    parts = [_len_delim(1, n) for n in nodes]
    parts.append(_string(2, name))
    parts += [_len_delim(5, t) for t in initializers]
    parts += [_len_delim(11, v) for v in inputs]
    parts += [_len_delim(12, v) for v in outputs]
    return b"".join(parts)


def model(graph_bytes: bytes, opset: int = 13, ir_version: int = 8) -> bytes:
    opset_id = _uint(2, opset)  # default domain
    return b"".join(
        [
            _uint(1, ir_version),
            _string(2, "shapes-model-export"),
            _len_delim(7, graph_bytes),
            _len_delim(8, opset_id),
        ]
    )


# --- structural validity check (decoder written independently of the encoder) ---


def _walk(buf: bytes):
    pos = 0
    while pos < len(buf):
        tag = 0
        shift = 0
        while True:
            byte = buf[pos]
            pos += 1
            tag |= (byte & 0x7F) << shift
            if not byte & 0x80:
                break
            shift += 7
        field, wire = tag >> 3, tag & 7
        if wire == 0:
            value = 0
            shift = 0
            while True:
                byte = buf[pos]
                pos += 1
                value |= (byte & 0x7F) << shift
                if not byte & 0x80:
                    break
                shift += 7
        elif wire == 2:
            size = 0
            shift = 0
            while True:
                byte = buf[pos]
                pos += 1
                size |= (byte & 0x7F) << shift
                if not byte & 0x80:
                    break
                shift += 7
            value = buf[pos : pos + size]
            if len(value) != size:
                raise ValueError("truncated length-delimited field")
            pos += size
        elif wire == 5:
            value = buf[pos : pos + 4]
            pos += 4
        elif wire == 1:
            value = buf[pos : pos + 8]
            pos += 8
        else:
            raise ValueError(f"unexpected wire type {wire}")
        yield field, wire, value


def check_model(blob: bytes, expected_ops=None) -> dict:
    """Re-parse the serialized model and verify its graph structure.

    Returns a summary dict; raises ValueError when the file is not a
    well-formed single-graph ONNX model with resolvable node inputs.
    """
    graph_buf = None
    ir_version = None
    opset = None
    for field, _, value in _walk(blob):
        if field == 1:
            ir_version = value
        elif field == 7:
            graph_buf = value
        elif field == 8:
            for f2, _, v2 in _walk(value):
                if f2 == 2:
                    opset = v2
    if graph_buf is None or not ir_version or not opset:
        raise ValueError("missing graph, ir_version, or opset")

    ops = []
    available = set()
    needed = []
    outputs = []
    for field, _, value in _walk(graph_buf):
        if field == 1:  # NodeProto
            op = None
            for f2, _, v2 in _walk(value):
                if f2 == 1:
                    needed.append(v2.decode())
                elif f2 == 2:
                    available.add(v2.decode())
                elif f2 == 4:
                    op = v2.decode()
            if not op:
                raise ValueError("node without op_type")
            ops.append(op)
        elif field == 5:  # initializer TensorProto
            for f2, _, v2 in _walk(value):
                if f2 == 8:
                    available.add(v2.decode())
        elif field in (11, 12):  # graph input / output ValueInfoProto
            for f2, _, v2 in _walk(value):
                if f2 == 1:
                    if field == 11:
                        available.add(v2.decode())
                    else:
                        outputs.append(v2.decode())
    unresolved = [n for n in needed if n not in available]
    if unresolved:
        raise ValueError(f"unresolved node inputs: {unresolved}")
    missing = [o for o in outputs if o not in available]
    if missing:
        raise ValueError(f"graph outputs never produced: {missing}")
    if expected_ops is not None and not set(ops) <= set(expected_ops):
        raise ValueError(f"unexpected ops: {sorted(set(ops) - set(expected_ops))}")
    if not ops:
        raise ValueError("graph has no nodes")
    return {"ir_version": ir_version, "opset": opset, "ops": ops, "outputs": outputs}
