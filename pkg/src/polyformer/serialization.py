"""JSON round trip for FFN and Transformer networks.

Matrices are stored as ``{"rows", "cols", "values"}`` with row-major
values. Floats are written with ``repr``, which is the shortest decimal
that parses back to the identical double, so loading is bit-exact.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .networks import (
    AttentionParams,
    Block,
    FeedForwardParams,
    FfnLayer,
    FfnNetwork,
    TransformerNetwork,
)


def matrix_to_dict(a) -> dict:
    a = np.asarray(a, dtype=np.float64)
    return {"rows": int(a.shape[0]), "cols": int(a.shape[1]), "values": [float(v) for v in a.ravel()]}


def matrix_from_dict(obj) -> np.ndarray:
    rows, cols = int(obj["rows"]), int(obj["cols"])
    values = obj["values"]
    if len(values) != rows * cols:
        raise ValueError(f"matrix declares {rows}x{cols} but holds {len(values)} values")
    return np.array(values, dtype=np.float64).reshape(rows, cols)


def _vector(v) -> list[float]:
    return [float(x) for x in np.asarray(v, dtype=np.float64)]


def network_to_dict(net) -> dict:
    if isinstance(net, FfnNetwork):
        return {
            "kind": "ffn",
            "layers": [
                {"weight": matrix_to_dict(layer.weight), "bias": _vector(layer.bias)}
                for layer in net.layers
            ],
        }
    if isinstance(net, TransformerNetwork):
        blocks = []
        for attn, ff in net.blocks:
            blocks.append({
                "attn": {name: matrix_to_dict(getattr(attn, name)) for name in ("w_o", "w_v", "w_k", "w_q")},
                "ff": {
                    "w1": matrix_to_dict(ff.w1),
                    "b1": _vector(ff.b1),
                    "w2": matrix_to_dict(ff.w2),
                    "b2": _vector(ff.b2),
                },
            })
        return {"kind": "transformer", "state_dim": net.state_dim, "blocks": blocks}
    raise TypeError(f"cannot serialize {type(net).__name__}")


def network_from_dict(obj):
    kind = obj.get("kind")
    if kind == "ffn":
        return FfnNetwork(tuple(
            FfnLayer(matrix_from_dict(layer["weight"]), np.array(layer["bias"], dtype=np.float64))
            for layer in obj["layers"]
        ))
    if kind == "transformer":
        blocks = []
        for blk in obj["blocks"]:
            a, f = blk["attn"], blk["ff"]
            attn = AttentionParams(*(matrix_from_dict(a[name]) for name in ("w_o", "w_v", "w_k", "w_q")))
            ff = FeedForwardParams(
                matrix_from_dict(f["w1"]), np.array(f["b1"], dtype=np.float64),
                matrix_from_dict(f["w2"]), np.array(f["b2"], dtype=np.float64),
            )
            blocks.append(Block(attn, ff))
        return TransformerNetwork(tuple(blocks), int(obj["state_dim"]))
    raise ValueError(f"unknown network kind {kind!r}")


def dumps(obj: dict) -> str:
    # json writes floats with repr, the shortest exact round-trip form
    return json.dumps(obj, sort_keys=False, separators=(",", ":"))


def save_network(net, path, extra: dict | None = None) -> None:
    doc = network_to_dict(net)
    if extra:
        doc.update(extra)
    Path(path).write_text(dumps(doc) + "\n")


def load_network(path):
    return network_from_dict(json.loads(Path(path).read_text()))
