"""Single-layer Elman RNN with ReLU hidden units and a linear read-out at the
last time step, plus exact backpropagation through time.

Shapes follow the column-vector convention::

    z_t = W_hx x_t + W_hh h_{t-1} + b_h      (H,)
    h_t = relu(z_t),  h_0 = 0
    y   = W_yh h_T + b_y                      (O,)

Every function accepts a single sequence ``[T, D]`` or a batch ``[B, T, D]``.
For a batch the loss is the mean of per-sample losses and the gradients are
the mean of per-sample gradients.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, fields

import numpy as np

from .errors import ConfigurationError, FormatError, NumericalError, ShapeError

PARAM_NAMES = ("W_hx", "W_hh", "b_h", "W_yh", "b_y")


@dataclass(frozen=True)
class RnnDims:
    input_dim: int
    hidden_dim: int
    layer_count: int = 1
    output_dim: int = 1
    seq_len: int = 60

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if int(v) != v or v < 1:
                raise ConfigurationError(f"{f.name} must be a positive integer, got {v!r}")
        if self.layer_count != 1:
            raise ConfigurationError("only a single hidden layer is supported")

    def shapes(self):
        D, H, O = self.input_dim, self.hidden_dim, self.output_dim
        return {"W_hx": (H, D), "W_hh": (H, H), "b_h": (H,), "W_yh": (O, H), "b_y": (O,)}


@dataclass
class RnnParams:
    W_hx: np.ndarray
    W_hh: np.ndarray
    b_h: np.ndarray
    W_yh: np.ndarray
    b_y: np.ndarray

    def arrays(self):
        return tuple(getattr(self, n) for n in PARAM_NAMES)

    def copy(self):
        return type(self)(*(a.copy() for a in self.arrays()))

    @property
    def dims(self):
        H, D = self.W_hx.shape
        return RnnDims(D, H, 1, self.W_yh.shape[0])

    def check(self, dims: RnnDims | None = None):
        dims = dims or self.dims
        for name, shape in dims.shapes().items():
            a = getattr(self, name)
            if a.shape != shape:
                raise ShapeError(f"{name} has shape {a.shape}, expected {shape}")
        return self

    def equal(self, other):
        return all(np.array_equal(a, b) for a, b in zip(self.arrays(), other.arrays()))


class Gradients(RnnParams):
    """Loss gradients, one array per parameter with matching shapes."""


@dataclass
class ForwardTrace:
    inputs: np.ndarray   # [..., T, D]
    preact: np.ndarray   # [..., T, H]
    hidden: np.ndarray   # [..., T, H]
    output: np.ndarray   # [..., O]


def init_params(dims: RnnDims, seed: int) -> RnnParams:
    """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights and zero biases,
    drawn from a PCG64 stream seeded by ``seed``."""
    rng = np.random.Generator(np.random.PCG64(seed))
    D, H, O = dims.input_dim, dims.hidden_dim, dims.output_dim
    a_x, a_h = 1.0 / np.sqrt(D), 1.0 / np.sqrt(H)
    return RnnParams(
        W_hx=rng.uniform(-a_x, a_x, size=(H, D)),
        W_hh=rng.uniform(-a_h, a_h, size=(H, H)),
        b_h=np.zeros(H),
        W_yh=rng.uniform(-a_h, a_h, size=(O, H)),
        b_y=np.zeros(O),
    )


def relu(v):
    return np.maximum(v, 0.0)


def _as_batch(sequence, D):
    x = np.asarray(sequence, dtype=np.float64)
    single = x.ndim == 2
    if single:
        x = x[None]
    if x.ndim != 3 or x.shape[2] != D:
        raise ShapeError(f"expected a [T, {D}] or [B, T, {D}] sequence, got {x.shape}")
    if x.shape[1] < 1:
        raise ShapeError("sequence must contain at least one time step")
    return x, single


def forward(params: RnnParams, sequence) -> ForwardTrace:
    x, single = _as_batch(sequence, params.W_hx.shape[1])
    B, T, _ = x.shape
    H = params.W_hh.shape[0]
    # input projection for every step at once; the recurrence stays sequential
    preact = np.empty((B, T, H))
    hidden = np.empty((B, T, H))
    h = np.zeros((B, H))
    with np.errstate(over="ignore", invalid="ignore"):
        drive = x @ params.W_hx.T + params.b_h
        for t in range(T):
            z = drive[:, t] + h @ params.W_hh.T
            h = np.maximum(z, 0.0)
            preact[:, t] = z
            hidden[:, t] = h
            if not np.isfinite(z).all():
                raise NumericalError(f"non-finite hidden pre-activation at step {t + 1}")
        output = h @ params.W_yh.T + params.b_y
    if not np.isfinite(output).all():
        raise NumericalError("non-finite network output")
    if single:
        return ForwardTrace(x[0], preact[0], hidden[0], output[0])
    return ForwardTrace(x, preact, hidden, output)


def mse(targets, predictions) -> float:
    y = np.asarray(targets, dtype=np.float64)
    p = np.asarray(predictions, dtype=np.float64)
    if y.shape != p.shape:
        raise ShapeError(f"shape mismatch: targets {y.shape} vs predictions {p.shape}")
    if y.size == 0:
        raise ShapeError("mse of an empty vector")
    return float(np.mean((y - p) ** 2))


@np.errstate(over="ignore", invalid="ignore")
def bptt(params: RnnParams, trace: ForwardTrace, target):
    """Loss and exact gradients for squared error on the final output.

    The per-sample loss is ``mean((y_hat - y)**2)`` over the ``O`` outputs.
    The ReLU derivative at exactly zero is taken as 0.
    """
    single = trace.inputs.ndim == 2
    x = trace.inputs[None] if single else trace.inputs
    z = trace.preact[None] if single else trace.preact
    h = trace.hidden[None] if single else trace.hidden
    yhat = trace.output[None] if single else trace.output
    y = np.asarray(target, dtype=np.float64).reshape(yhat.shape)
    B, T, _ = x.shape
    O = yhat.shape[1]

    resid = yhat - y
    loss = float(np.mean(resid ** 2))
    d_out = 2.0 * resid / (O * B)                   # dL/dy_hat, batch mean folded in

    g_W_yh = d_out.T @ h[:, -1]
    g_b_y = d_out.sum(axis=0)
    d_z_all = np.empty_like(z)
    dh = d_out @ params.W_yh
    for t in range(T - 1, -1, -1):
        dz = dh * (z[:, t] > 0.0)
        d_z_all[:, t] = dz
        dh = dz @ params.W_hh
    g_W_hx = np.einsum("bth,btd->hd", d_z_all, x)
    g_W_hh = np.einsum("bth,btk->hk", d_z_all[:, 1:], h[:, :-1]) if T > 1 \
        else np.zeros_like(params.W_hh)
    g_b_h = d_z_all.sum(axis=(0, 1))

    grads = Gradients(g_W_hx, g_W_hh, g_b_h, g_W_yh, g_b_y)
    if not all(np.isfinite(a).all() for a in grads.arrays()):
        raise NumericalError("non-finite gradient")
    return loss, grads


def loss_and_grad(params: RnnParams, sequence, target):
    return bptt(params, forward(params, sequence), target)


def predict_batch(params: RnnParams, inputs, chunk=4096):
    """Final-step outputs for ``[N, T, D]`` inputs, evaluated in chunks."""
    inputs = np.asarray(inputs, dtype=np.float64)
    out = np.empty((len(inputs), params.W_yh.shape[0]))
    for s in range(0, len(inputs), chunk):
        out[s:s + chunk] = forward(params, inputs[s:s + chunk]).output
    return out


# -- checkpoint file -------------------------------------------------------
#
# Layout (all little-endian):
#   bytes 0-3    magic b"SCRN"
#   byte  4      format version (1)
#   bytes 5-24   uint32 input_dim, hidden_dim, layer_count, output_dim, seq_len
#   then         float64 arrays W_hx, W_hh, b_h, W_yh, b_y, each row-major

CHECKPOINT_MAGIC = b"SCRN"
CHECKPOINT_VERSION = 1
_HEADER = struct.Struct("<4sB5I")


def save_checkpoint(path, params: RnnParams, dims: RnnDims):
    params.check(dims)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(CHECKPOINT_MAGIC, CHECKPOINT_VERSION, dims.input_dim,
                              dims.hidden_dim, dims.layer_count, dims.output_dim,
                              dims.seq_len))
        for a in params.arrays():
            fh.write(np.ascontiguousarray(a, dtype="<f8").tobytes())


def load_checkpoint(path):
    """Return ``(params, dims)`` from a checkpoint file."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _HEADER.size:
        raise FormatError("truncated checkpoint header", source=str(path))
    magic, version, *dim_values = _HEADER.unpack_from(blob)
    if magic != CHECKPOINT_MAGIC:
        raise FormatError("not a checkpoint file", source=str(path))
    if version != CHECKPOINT_VERSION:
        raise FormatError(f"unsupported checkpoint version {version}", source=str(path))
    dims = RnnDims(*dim_values)
    offset = _HEADER.size
    arrays = []
    for name in PARAM_NAMES:
        shape = dims.shapes()[name]
        count = int(np.prod(shape))
        if offset + 8 * count > len(blob):
            raise FormatError(f"truncated array {name}", source=str(path))
        arrays.append(np.frombuffer(blob, dtype="<f8", count=count, offset=offset)
                      .reshape(shape).astype(np.float64))
        offset += 8 * count
    if offset != len(blob):
        raise FormatError("trailing bytes after parameter arrays", source=str(path))
    return RnnParams(*arrays), dims
