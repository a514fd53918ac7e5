"""From-scratch policy-value network: conv/dense layers, backprop, Adam, checkpoints.

The architecture is fixed: two 3x3/32 convolutions with ReLU over a 12x12x3
input, a dense 256 ReLU trunk, a 12-logit policy head, and a tanh value head.
Legality masking of the policy happens outside the network, so one network
serves every board size up to 12x12.

All math is plain NumPy. float64 is the default (gradient checks need it);
float32 is supported for training speed.
"""

from __future__ import annotations

import json
import struct
from hashlib import blake2b

import numpy as np

BOARD_SIDE = 12
PLANES = 3
POLICY_SIZE = 12

_CHECKPOINT_MAGIC = b"CXLNET01"
_CHECKPOINT_VERSION = 1


class ShapeMismatchError(ValueError):
    """Input or gradient shapes do not match the architecture."""


class InvalidTargetError(ValueError):
    """Policy target places probability mass on an illegal column."""


class VersionMismatchError(RuntimeError):
    """Checkpoint was written by an incompatible format or architecture version."""


class CorruptFileError(RuntimeError):
    """Checkpoint failed its integrity checks."""


class _Conv2D:
    """3x3 same-padded convolution via im2col."""

    def __init__(self, in_ch: int, out_ch: int, rng: np.random.Generator, dtype):
        k = 3
        scale = np.sqrt(2.0 / (in_ch * k * k))
        self.w = (rng.standard_normal((out_ch, in_ch, k, k)) * scale).astype(dtype)
        self.b = np.zeros(out_ch, dtype=dtype)
        self.k = k
        self._cols = None
        self._x_shape = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        b, c, h, w = x.shape
        xp = np.zeros((b, c, h + 2, w + 2), dtype=x.dtype)
        xp[:, :, 1:1 + h, 1:1 + w] = x
        cols = np.empty((b, c, self.k, self.k, h, w), dtype=x.dtype)
        for i in range(self.k):
            for j in range(self.k):
                cols[:, :, i, j, :, :] = xp[:, :, i:i + h, j:j + w]
        cols = cols.reshape(b, c * self.k * self.k, h * w)
        self._cols = cols
        self._x_shape = x.shape
        out_ch = self.w.shape[0]
        out = np.matmul(self.w.reshape(out_ch, -1), cols)
        out += self.b[:, None]
        return out.reshape(b, out_ch, h, w)

    def backward(self, dout: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        b, c, h, w = self._x_shape
        out_ch = self.w.shape[0]
        dflat = dout.reshape(b, out_ch, h * w)
        dw = np.einsum("boi,bci->oc", dflat, self._cols).reshape(self.w.shape)
        db = dflat.sum(axis=(0, 2))
        dcols = np.matmul(self.w.reshape(out_ch, -1).T, dflat)
        dcols = dcols.reshape(b, c, self.k, self.k, h, w)
        dxp = np.zeros((b, c, h + 2, w + 2), dtype=dout.dtype)
        for i in range(self.k):
            for j in range(self.k):
                dxp[:, :, i:i + h, j:j + w] += dcols[:, :, i, j]
        return dxp[:, :, 1:1 + h, 1:1 + w], dw, db


class _Dense:
    def __init__(self, n_in: int, n_out: int, rng: np.random.Generator, dtype,
                 relu_fan: bool = True):
        scale = np.sqrt((2.0 if relu_fan else 1.0) / n_in)
        self.w = (rng.standard_normal((n_in, n_out)) * scale).astype(dtype)
        self.b = np.zeros(n_out, dtype=dtype)
        self._x = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._x = x
        return x @ self.w + self.b

    def backward(self, dout: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        dw = self._x.T @ dout
        db = dout.sum(axis=0)
        return dout @ self.w.T, dw, db


class _ReLU:
    def __init__(self) -> None:
        self._mask = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._mask = x > 0
        return x * self._mask

    def backward(self, dout: np.ndarray) -> np.ndarray:
        return dout * self._mask


class Network:
    """Policy-value network mapping encoded states to (12 logits, tanh value)."""

    PARAM_NAMES = ("conv1_w", "conv1_b", "conv2_w", "conv2_b", "trunk_w", "trunk_b",
                   "policy_w", "policy_b", "value_w", "value_b")

    def __init__(self, dtype=np.float64, seed: int = 0):
        self.dtype = np.dtype(dtype)
        if self.dtype not in (np.dtype(np.float32), np.dtype(np.float64)):
            raise ValueError("dtype must be float32 or float64")
        rng = np.random.default_rng(seed)
        dt = self.dtype
        self.conv1 = _Conv2D(PLANES, 32, rng, dt)
        self.relu1 = _ReLU()
        self.conv2 = _Conv2D(32, 32, rng, dt)
        self.relu2 = _ReLU()
        flat = 32 * BOARD_SIDE * BOARD_SIDE
        self.trunk = _Dense(flat, 256, rng, dt)
        self.relu3 = _ReLU()
        self.policy_head = _Dense(256, POLICY_SIZE, rng, dt, relu_fan=False)
        self.value_head = _Dense(256, 1, rng, dt, relu_fan=False)
        self._value_out = None
        self._batch = None

    # --- parameter access -------------------------------------------------

    def params(self) -> list[np.ndarray]:
        """Live parameter arrays, in a fixed order shared with grads()."""
        return [self.conv1.w, self.conv1.b, self.conv2.w, self.conv2.b,
                self.trunk.w, self.trunk.b, self.policy_head.w, self.policy_head.b,
                self.value_head.w, self.value_head.b]

    def set_params(self, values: list[np.ndarray]) -> None:
        own = self.params()
        if len(values) != len(own):
            raise ShapeMismatchError(f"expected {len(own)} parameter tensors")
        for dst, src in zip(own, values):
            if dst.shape != src.shape:
                raise ShapeMismatchError(f"parameter shape {src.shape} != {dst.shape}")
            dst[...] = src.astype(self.dtype)

    def copy(self) -> "Network":
        clone = Network(dtype=self.dtype)
        clone.set_params(self.params())
        return clone

    def arch(self) -> dict:
        return {"board": BOARD_SIDE, "planes": PLANES, "filters": 32,
                "trunk": 256, "policy": POLICY_SIZE}

    # --- forward / backward ----------------------------------------------

    def forward(self, states: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Map encoded states (batch, 12, 12, 3) to (logits (batch, 12), values (batch, 1))."""
        states = np.asarray(states, dtype=self.dtype)
        if states.ndim != 4 or states.shape[1:] != (BOARD_SIDE, BOARD_SIDE, PLANES):
            raise ShapeMismatchError(
                f"expected (batch, {BOARD_SIDE}, {BOARD_SIDE}, {PLANES}), got {states.shape}")
        x = states.transpose(0, 3, 1, 2)
        x = self.relu1.forward(self.conv1.forward(x))
        x = self.relu2.forward(self.conv2.forward(x))
        self._batch = x.shape[0]
        flat = x.reshape(self._batch, -1)
        hidden = self.relu3.forward(self.trunk.forward(flat))
        logits = self.policy_head.forward(hidden)
        value = np.tanh(self.value_head.forward(hidden))
        self._value_out = value
        return logits, value

    def backward(self, dlogits: np.ndarray, dvalues: np.ndarray) -> list[np.ndarray]:
        """Gradients of a scalar loss w.r.t. params(), given head output gradients.

        Must follow a forward() call on the same batch.
        """
        if dlogits.shape != (self._batch, POLICY_SIZE) or dvalues.shape != (self._batch, 1):
            raise ShapeMismatchError("head gradient shapes do not match the last forward batch")
        dvalue_pre = dvalues * (1.0 - self._value_out ** 2)
        dh_value, dw_v, db_v = self.value_head.backward(dvalue_pre.astype(self.dtype))
        dh_policy, dw_p, db_p = self.policy_head.backward(dlogits.astype(self.dtype))
        dhidden = self.relu3.backward(dh_value + dh_policy)
        dflat, dw_t, db_t = self.trunk.backward(dhidden)
        dx = dflat.reshape(self._batch, 32, BOARD_SIDE, BOARD_SIDE)
        dx, dw_c2, db_c2 = self.conv2.backward(self.relu2.backward(dx))
        _, dw_c1, db_c1 = self.conv1.backward(self.relu1.backward(dx))
        return [dw_c1, db_c1, dw_c2, db_c2, dw_t, db_t, dw_p, db_p, dw_v, db_v]


# --- loss ------------------------------------------------------------------


def masked_log_softmax(logits: np.ndarray, legal_mask: np.ndarray) -> np.ndarray:
    """Row-wise log-softmax with illegal entries fixed at -inf (zero probability)."""
    masked = np.where(legal_mask, logits, -np.inf)
    shifted = masked - masked.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return shifted - np.log(exp.sum(axis=1, keepdims=True))


def _check_targets(target_pi: np.ndarray, legal_mask: np.ndarray) -> None:
    if np.any(target_pi[~legal_mask] > 1e-12):
        raise InvalidTargetError("policy target has mass on an illegal column")
    sums = target_pi.sum(axis=1)
    if np.any(np.abs(sums - 1.0) > 1e-6):
        raise InvalidTargetError(f"policy target rows must sum to 1, got {sums}")


def loss(logits: np.ndarray, values: np.ndarray, target_pi: np.ndarray,
         target_z: np.ndarray, legal_mask: np.ndarray) -> float:
    """Mean over the batch of squared value error plus policy cross-entropy."""
    total, _, _ = loss_and_grads(logits, values, target_pi, target_z, legal_mask)
    return total


def loss_and_grads(logits: np.ndarray, values: np.ndarray, target_pi: np.ndarray,
                   target_z: np.ndarray, legal_mask: np.ndarray
                   ) -> tuple[float, np.ndarray, np.ndarray]:
    """Loss plus its gradients w.r.t. the raw logits and the value output."""
    target_pi = np.asarray(target_pi)
    legal_mask = np.asarray(legal_mask, dtype=bool)
    target_z = np.asarray(target_z, dtype=values.dtype).reshape(values.shape)
    _check_targets(target_pi, legal_mask)
    batch = logits.shape[0]

    log_probs = masked_log_softmax(logits, legal_mask)
    safe_log = np.where(legal_mask, log_probs, 0.0)  # avoid 0 * -inf at illegal entries
    cross_entropy = -np.sum(target_pi * safe_log) / batch
    mse = float(np.mean((values - target_z) ** 2))
    total = float(mse + cross_entropy)

    probs = np.exp(log_probs)
    dlogits = np.where(legal_mask, probs - target_pi, 0.0) / batch
    dvalues = 2.0 * (values - target_z) / batch
    return total, dlogits.astype(logits.dtype), dvalues.astype(values.dtype)


# --- optimizer ---------------------------------------------------------------


class Adam:
    """Standard Adam with bias correction, updating parameters in place."""

    def __init__(self, params: list[np.ndarray], lr: float = 1e-3, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        if len(params) != len(self.m) or len(grads) != len(params):
            raise ShapeMismatchError("parameter/gradient count mismatch")
        self.t += 1
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            if p.shape != g.shape:
                raise ShapeMismatchError(f"gradient shape {g.shape} != parameter {p.shape}")
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * np.square(g)
            p -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)


# --- checkpoints -------------------------------------------------------------


def save_checkpoint(path, network: Network, adam: Adam | None = None,
                    metadata: dict | None = None) -> None:
    """Write a versioned, checksummed checkpoint with little-endian raw tensors."""
    tensors = [(name, p) for name, p in zip(Network.PARAM_NAMES, network.params())]
    if adam is not None:
        tensors += [(f"adam_m_{i}", m) for i, m in enumerate(adam.m)]
        tensors += [(f"adam_v_{i}", v) for i, v in enumerate(adam.v)]
    header = {
        "arch": network.arch(),
        "dtype": network.dtype.name,
        "metadata": metadata or {},
        "tensors": [{"name": n, "shape": list(t.shape)} for n, t in tensors],
        "adam": None if adam is None else {
            "lr": adam.lr, "beta1": adam.beta1, "beta2": adam.beta2,
            "eps": adam.eps, "t": adam.t,
        },
    }
    header_bytes = json.dumps(header, sort_keys=True).encode()
    blob = bytearray()
    blob += _CHECKPOINT_MAGIC
    blob += struct.pack("<II", _CHECKPOINT_VERSION, len(header_bytes))
    blob += header_bytes
    le_dtype = "<f4" if network.dtype == np.float32 else "<f8"
    for _, tensor in tensors:
        blob += np.ascontiguousarray(tensor, dtype=le_dtype).tobytes()
    blob += blake2b(bytes(blob), digest_size=16).digest()
    with open(path, "wb") as fh:
        fh.write(blob)


def load_checkpoint(path) -> tuple[Network, Adam | None, dict]:
    """Read a checkpoint back into a fresh Network (and Adam state, if saved)."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < len(_CHECKPOINT_MAGIC) + 8 + 16:
        raise CorruptFileError("checkpoint is truncated")
    if blob[:len(_CHECKPOINT_MAGIC)] != _CHECKPOINT_MAGIC:
        raise CorruptFileError("bad magic; not a network checkpoint")
    payload, digest = blob[:-16], blob[-16:]
    if blake2b(payload, digest_size=16).digest() != digest:
        raise CorruptFileError("checksum mismatch")
    offset = len(_CHECKPOINT_MAGIC)
    version, header_len = struct.unpack_from("<II", payload, offset)
    if version != _CHECKPOINT_VERSION:
        raise VersionMismatchError(f"checkpoint version {version}, "
                                   f"expected {_CHECKPOINT_VERSION}")
    offset += 8
    header = json.loads(payload[offset:offset + header_len].decode())
    offset += header_len

    dtype = np.dtype(header["dtype"])
    network = Network(dtype=dtype)
    if header["arch"] != network.arch():
        raise VersionMismatchError(f"architecture {header['arch']} not supported")
    le_dtype = np.dtype("<f4" if dtype == np.float32 else "<f8")
    arrays = []
    for spec in header["tensors"]:
        shape = tuple(spec["shape"])
        nbytes = int(np.prod(shape)) * le_dtype.itemsize
        if offset + nbytes > len(payload):
            raise CorruptFileError("tensor data is truncated")
        arr = np.frombuffer(payload, dtype=le_dtype, count=int(np.prod(shape)),
                            offset=offset).reshape(shape).astype(dtype)
        arrays.append(arr)
        offset += nbytes
    n_params = len(Network.PARAM_NAMES)
    network.set_params(arrays[:n_params])

    adam = None
    if header["adam"] is not None:
        a = header["adam"]
        adam = Adam(network.params(), lr=a["lr"], beta1=a["beta1"],
                    beta2=a["beta2"], eps=a["eps"])
        adam.t = a["t"]
        moments = arrays[n_params:]
        adam.m = [np.array(x) for x in moments[:n_params]]
        adam.v = [np.array(x) for x in moments[n_params:]]
    return network, adam, header["metadata"]
