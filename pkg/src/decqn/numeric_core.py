"""Dense-network kernel: residual MLP with layer norm, manual backprop, Huber, Adam.

Parameters are plain ``dict[str, np.ndarray]``. The topology is fixed:

    x -> dense(H) -> relu -> [dense(H) -> relu -> dense(H)] + skip -> layernorm -> dense(out)
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

LN_EPS = 1e-6
PARAM_NAMES = ("w_in", "b_in", "w_r1", "b_r1", "w_r2", "b_r2", "ln_gain", "ln_bias", "w_out", "b_out")


class ConfigurationError(ValueError):
    pass


class NumericError(FloatingPointError):
    pass


Params = dict  # name -> ndarray


@dataclass(frozen=True)
class MlpLayout:
    input_dim: int
    hidden: int
    output_dim: int

    def shapes(self) -> dict[str, tuple[int, ...]]:
        d, h, o = self.input_dim, self.hidden, self.output_dim
        return {
            "w_in": (d, h), "b_in": (h,),
            "w_r1": (h, h), "b_r1": (h,),
            "w_r2": (h, h), "b_r2": (h,),
            "ln_gain": (h,), "ln_bias": (h,),
            "w_out": (h, o), "b_out": (o,),
        }

    def n_params(self) -> int:
        return int(sum(np.prod(s) for s in self.shapes().values()))


def init_mlp(layout: MlpLayout, rng: np.random.Generator, dtype=np.float64,
             out_scale: float = 1e-3) -> Params:
    """He-uniform hidden layers, tiny uniform output layer, zero biases, unit LN gain."""
    params = {}
    for name, shape in layout.shapes().items():
        if name.startswith("b_") or name == "ln_bias":
            params[name] = np.zeros(shape, dtype=dtype)
        elif name == "ln_gain":
            params[name] = np.ones(shape, dtype=dtype)
        elif name == "w_out":
            params[name] = rng.uniform(-out_scale, out_scale, size=shape).astype(dtype)
        else:
            bound = np.sqrt(6.0 / shape[0])
            params[name] = rng.uniform(-bound, bound, size=shape).astype(dtype)
    return params


def layout_of(params: Params) -> MlpLayout:
    d, h = params["w_in"].shape
    return MlpLayout(d, h, params["w_out"].shape[1])


def zeros_like(params: Params) -> Params:
    return {k: np.zeros_like(v) for k, v in params.items()}


def copy_params(params: Params) -> Params:
    return {k: v.copy() for k, v in params.items()}


def mlp_forward(params: Params, x: np.ndarray, keep_cache: bool = False):
    """Batch forward pass. Returns ``out`` or ``(out, cache)`` when ``keep_cache``."""
    x = np.asarray(x, dtype=params["w_in"].dtype)
    if x.ndim != 2 or x.shape[1] != params["w_in"].shape[0]:
        raise ConfigurationError(
            f"state batch shape {x.shape} does not match input width {params['w_in'].shape[0]}")
    a0 = x @ params["w_in"] + params["b_in"]
    h0 = np.maximum(a0, 0.0)
    a1 = h0 @ params["w_r1"] + params["b_r1"]
    u = np.maximum(a1, 0.0)
    z = h0 + u @ params["w_r2"] + params["b_r2"]
    mu = z.mean(axis=1, keepdims=True)
    zc = z - mu
    inv_std = 1.0 / np.sqrt((zc * zc).mean(axis=1, keepdims=True) + LN_EPS)
    xhat = zc * inv_std
    y = xhat * params["ln_gain"] + params["ln_bias"]
    out = y @ params["w_out"] + params["b_out"]
    if not keep_cache:
        return out
    return out, (x, a0, h0, a1, u, xhat, inv_std, y)


def backward(params: Params, cache, grad_out: np.ndarray) -> Params:
    """Reverse-mode gradients of a scalar loss given dL/d(output) for the cached batch."""
    x, a0, h0, a1, u, xhat, inv_std, y = cache
    g = {}
    g["w_out"] = y.T @ grad_out
    g["b_out"] = grad_out.sum(axis=0)
    dy = grad_out @ params["w_out"].T
    g["ln_gain"] = (dy * xhat).sum(axis=0)
    g["ln_bias"] = dy.sum(axis=0)
    dxhat = dy * params["ln_gain"]
    dz = inv_std * (dxhat - dxhat.mean(axis=1, keepdims=True)
                    - xhat * (dxhat * xhat).mean(axis=1, keepdims=True))
    g["w_r2"] = u.T @ dz
    g["b_r2"] = dz.sum(axis=0)
    du = (dz @ params["w_r2"].T) * (a1 > 0)
    g["w_r1"] = h0.T @ du
    g["b_r1"] = du.sum(axis=0)
    dh0 = (dz + du @ params["w_r1"].T) * (a0 > 0)
    g["w_in"] = x.T @ dh0
    g["b_in"] = dh0.sum(axis=0)
    for k, v in g.items():
        if not np.all(np.isfinite(v)):
            raise NumericError(f"non-finite gradient in '{k}'")
    return g


def slice_cache(cache, rows: int):
    """Keep the first ``rows`` samples of a forward cache (every entry is row-wise)."""
    return tuple(c[:rows] for c in cache)


def huber(residual, delta: float = 1.0):
    """Quadratic within ``delta``, linear outside. Works elementwise on arrays."""
    a = np.abs(residual)
    return np.where(a <= delta, 0.5 * a * a, delta * (a - 0.5 * delta))


def huber_grad(residual, delta: float = 1.0):
    return np.clip(residual, -delta, delta)


def global_norm(grads: Params) -> float:
    return float(np.sqrt(sum(float(np.sum(v * v)) for v in grads.values())))


def clip_global_norm(grads: Params, max_norm: float) -> tuple[Params, float]:
    """Scale every gradient by ``max_norm / norm`` if the joint L2 norm exceeds ``max_norm``."""
    if max_norm <= 0:
        raise ConfigurationError("max_norm must be positive")
    norm = global_norm(grads)
    if norm <= max_norm:
        return grads, norm
    scale = max_norm / norm
    return {k: v * scale for k, v in grads.items()}, norm


@dataclass
class AdamState:
    m: Params
    v: Params
    step: int = 0
    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_params(cls, params: Params, lr: float = 1e-4, **kw) -> "AdamState":
        return cls(m=zeros_like(params), v=zeros_like(params), lr=lr, **kw)


def adam_step(state: AdamState, params: Params, grads: Params) -> tuple[Params, AdamState]:
    """One bias-corrected Adam update. Inputs are not mutated."""
    t = state.step + 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1 ** t
    c2 = 1.0 - b2 ** t
    new_p, new_m, new_v = {}, {}, {}
    for k, p in params.items():
        g = grads[k]
        m = b1 * state.m[k] + (1.0 - b1) * g
        v = b2 * state.v[k] + (1.0 - b2) * (g * g)
        new_p[k] = p - state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
        new_m[k], new_v[k] = m, v
    return new_p, AdamState(new_m, new_v, t, state.lr, b1, b2, state.eps)


# --- checkpoints -----------------------------------------------------------
#
# Layout (all integers little-endian):
#   8 bytes   magic b"DECQNCKP"
#   4 bytes   uint32 format version
#   8 bytes   uint64 header length L
#   L bytes   UTF-8 JSON header: {"meta": {...}, "arrays": [{"name", "dtype", "shape", "offset", "nbytes"}]}
#   rest      concatenated raw array buffers (C order, little-endian), offsets relative to this section

CHECKPOINT_MAGIC = b"DECQNCKP"
CHECKPOINT_VERSION = 1


@dataclass
class Checkpoint:
    arrays: dict[str, np.ndarray] = field(default_factory=dict)
    meta: dict = field(default_factory=dict)


def save_checkpoint(path, ckpt: Checkpoint) -> None:
    entries, blobs, offset = [], [], 0
    for name, arr in ckpt.arrays.items():
        arr = np.ascontiguousarray(arr)
        le = arr.astype(arr.dtype.newbyteorder("<"), copy=False)
        raw = le.tobytes()
        entries.append({"name": name, "dtype": le.dtype.str, "shape": list(arr.shape),
                        "offset": offset, "nbytes": len(raw)})
        blobs.append(raw)
        offset += len(raw)
    header = json.dumps({"meta": ckpt.meta, "arrays": entries}, sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<IQ", CHECKPOINT_VERSION, len(header)))
        fh.write(header)
        for raw in blobs:
            fh.write(raw)


def load_checkpoint(path) -> Checkpoint:
    data = Path(path).read_bytes()
    if data[:8] != CHECKPOINT_MAGIC:
        raise ValueError(f"{path}: not a checkpoint (bad magic)")
    version, hlen = struct.unpack("<IQ", data[8:20])
    if version != CHECKPOINT_VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {version}")
    header = json.loads(data[20:20 + hlen])
    body = memoryview(data)[20 + hlen:]
    arrays = {}
    for e in header["arrays"]:
        buf = body[e["offset"]:e["offset"] + e["nbytes"]]
        arrays[e["name"]] = np.frombuffer(buf, dtype=np.dtype(e["dtype"])).reshape(e["shape"]).copy()
    return Checkpoint(arrays, header["meta"])


def flatten_params(prefix: str, params: Params) -> dict[str, np.ndarray]:
    return {f"{prefix}/{k}": v for k, v in params.items()}


def unflatten_params(prefix: str, arrays: dict[str, np.ndarray]) -> Params:
    head = prefix + "/"
    return {k[len(head):]: v for k, v in arrays.items() if k.startswith(head)}
