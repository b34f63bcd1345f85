"""Simplicial neural networks: polynomial-in-Laplacian convolutions.

A layer maps ``X`` (channels x n) to ``psi(sum_c sum_i W[o, c, i] L^i X[c] + b[o])``.
Powers of ``L`` are never formed; every term is a chain of sparse matvecs.
Gradients are written out by hand. Since ``L`` is symmetric, the adjoint of
``x -> L^i x`` is the same map.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Iterator, Optional, Sequence, TextIO

import numpy as np

from .spectral import HodgeLaplacian, SparseOperator

log = logging.getLogger(__name__)


class TrainingDivergedError(FloatingPointError):
    """Loss or parameters became non-finite during training."""


def _matrix(laplacian):
    if isinstance(laplacian, (HodgeLaplacian, SparseOperator)):
        return laplacian.matrix
    return laplacian


@dataclass
class ConvLayer:
    """Weights are indexed ``[out_channel, in_channel, power]``.

    ``slope=None`` means identity nonlinearity, otherwise leaky ReLU.
    """

    weights: np.ndarray
    bias: np.ndarray
    slope: Optional[float] = 0.01

    def __post_init__(self) -> None:
        self.weights = np.asarray(self.weights, dtype=float)
        self.bias = np.asarray(self.bias, dtype=float)
        if self.weights.ndim != 3:
            raise ValueError("weights must have shape (out, in, degree + 1)")
        if self.bias.shape != (self.weights.shape[0],):
            raise ValueError(f"bias of shape {self.bias.shape} does not match {self.out_channels} outputs")
        if self.slope is not None and not 0.0 < self.slope < 1.0:
            raise ValueError(f"leaky ReLU slope must lie in (0, 1), got {self.slope}")
        if not (np.all(np.isfinite(self.weights)) and np.all(np.isfinite(self.bias))):
            raise ValueError("layer parameters must be finite")

    @property
    def out_channels(self) -> int:
        return self.weights.shape[0]

    @property
    def in_channels(self) -> int:
        return self.weights.shape[1]

    @property
    def degree(self) -> int:
        return self.weights.shape[2] - 1

    def copy(self) -> "ConvLayer":
        return ConvLayer(self.weights.copy(), self.bias.copy(), self.slope)


@dataclass
class SnnModel:
    """Stack of convolution layers acting on p-cochains.

    ``shift``/``scale`` implement the optional affine standardization: the
    layers see ``(x - shift) / scale`` and their output is mapped back.
    """

    layers: list[ConvLayer]
    dimension: int = 1
    shift: float = 0.0
    scale: float = 1.0

    def __post_init__(self) -> None:
        if not self.layers:
            raise ValueError("a model needs at least one layer")
        for a, b in zip(self.layers, self.layers[1:]):
            if a.out_channels != b.in_channels:
                raise ValueError(f"channel mismatch: {a.out_channels} -> {b.in_channels}")
        if self.layers[0].in_channels != 1 or self.layers[-1].out_channels != 1:
            raise ValueError("model must map one input cochain to one output cochain")
        if self.layers[-1].slope is not None:
            raise ValueError("final layer must use the identity nonlinearity")
        if not self.scale > 0:
            raise ValueError("scale must be positive")

    @property
    def total_degree(self) -> int:
        return sum(layer.degree for layer in self.layers)

    def parameters(self) -> Iterator[tuple[str, np.ndarray]]:
        for k, layer in enumerate(self.layers):
            yield f"layers[{k}].weights", layer.weights
            yield f"layers[{k}].bias", layer.bias

    def copy(self) -> "SnnModel":
        return replace(self, layers=[layer.copy() for layer in self.layers])


def init_model(
    widths: Sequence[int] = (1, 30, 30, 1),
    degree: int = 5,
    slope: float = 0.01,
    seed: int = 0,
    dimension: int = 1,
) -> SnnModel:
    """Glorot-style uniform init counting each Laplacian power as a feature; zero bias."""
    if len(widths) < 2:
        raise ValueError("need at least input and output widths")
    rng = np.random.default_rng(seed)
    layers = []
    n_layers = len(widths) - 1
    for k, (c_in, c_out) in enumerate(zip(widths, widths[1:])):
        limit = math.sqrt(6.0 / ((c_in + c_out) * (degree + 1)))
        w = rng.uniform(-limit, limit, size=(c_out, c_in, degree + 1))
        layers.append(ConvLayer(w, np.zeros(c_out), None if k == n_layers - 1 else slope))
    return SnnModel(layers, dimension=dimension)


def _powers(lap, x: np.ndarray, degree: int) -> np.ndarray:
    """Stack ``[x, L x, ..., L^degree x]`` for x of shape (channels, n)."""
    out = np.empty((degree + 1,) + x.shape)
    out[0] = x
    cur = x.T
    for i in range(1, degree + 1):
        cur = np.asarray(lap @ cur)
        out[i] = cur.T
    return out


def _activate(z: np.ndarray, slope: Optional[float]) -> np.ndarray:
    if slope is None:
        return z
    return np.where(z > 0, z, slope * z)


def conv_forward(layer: ConvLayer, laplacian, x: np.ndarray) -> np.ndarray:
    """Apply one layer to ``x`` of shape (in_channels, n)."""
    lap = _matrix(laplacian)
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[0] != layer.in_channels:
        raise ValueError(f"layer expects {layer.in_channels} channels, got {x.shape[0]}")
    if x.shape[1] != lap.shape[0]:
        raise ValueError(f"input has {x.shape[1]} simplices, Laplacian is {lap.shape[0]}x{lap.shape[0]}")
    p = _powers(lap, x, layer.degree)
    z = np.einsum("oci,icn->on", layer.weights, p) + layer.bias[:, None]
    return _activate(z, layer.slope)


def _check_input(model: SnnModel, lap, x) -> np.ndarray:
    x = np.asarray(x.values if hasattr(x, "values") else x, dtype=float)
    if x.ndim != 1 or x.shape[0] != lap.shape[0]:
        raise ValueError(f"input of shape {x.shape} does not match Laplacian of size {lap.shape[0]}")
    return x


def model_forward(model: SnnModel, laplacian, x) -> np.ndarray:
    """Run the whole stack on a single cochain and return the output cochain."""
    lap = _matrix(laplacian)
    x = _check_input(model, lap, x)
    h = ((x - model.shift) / model.scale)[None, :]
    for layer in model.layers:
        h = conv_forward(layer, lap, h)
    return h[0] * model.scale + model.shift


def _known(mask, n: int) -> np.ndarray:
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != (n,):
        raise ValueError(f"mask of shape {mask.shape} does not match length {n}")
    if not mask.any():
        raise ValueError("mask selects no known entries")
    return mask


def l1_masked_loss(prediction, target, known_mask) -> float:
    """Mean absolute error over the known entries."""
    prediction = np.asarray(prediction, dtype=float)
    target = np.asarray(target, dtype=float)
    if prediction.shape != target.shape:
        raise ValueError(f"shape mismatch: {prediction.shape} vs {target.shape}")
    mask = _known(known_mask, len(prediction))
    return float(np.mean(np.abs(prediction[mask] - target[mask])))


@dataclass
class Gradients:
    weights: list[np.ndarray]
    bias: list[np.ndarray]
    loss: float

    def items(self) -> Iterator[tuple[str, np.ndarray]]:
        for k, (w, b) in enumerate(zip(self.weights, self.bias)):
            yield f"layers[{k}].weights", w
            yield f"layers[{k}].bias", b


def gradients(model: SnnModel, laplacian, x, target, known_mask) -> Gradients:
    """Loss and its exact gradient with respect to every weight and bias."""
    lap = _matrix(laplacian)
    x = _check_input(model, lap, x)
    target = np.asarray(target, dtype=float)
    mask = _known(known_mask, len(x))

    h = ((x - model.shift) / model.scale)[None, :]
    cache = []
    for layer in model.layers:
        p = _powers(lap, h, layer.degree)
        z = np.einsum("oci,icn->on", layer.weights, p) + layer.bias[:, None]
        cache.append((p, z))
        h = _activate(z, layer.slope)
    pred = h[0] * model.scale + model.shift

    resid = pred - target
    loss = float(np.mean(np.abs(resid[mask])))
    grad_out = np.where(mask, np.sign(resid), 0.0) / mask.sum()
    delta = (grad_out * model.scale)[None, :]

    gw: list[np.ndarray] = [None] * len(model.layers)  # type: ignore[list-item]
    gb: list[np.ndarray] = [None] * len(model.layers)  # type: ignore[list-item]
    for k in range(len(model.layers) - 1, -1, -1):
        layer = model.layers[k]
        p, z = cache[k]
        if layer.slope is not None:
            delta = delta * np.where(z > 0, 1.0, layer.slope)
        gw[k] = np.einsum("on,icn->oci", delta, p)
        gb[k] = delta.sum(axis=1)
        if k == 0:
            break
        # Horner: sum_i L^i g_i with g_i = W[:, :, i]^T delta
        g = np.einsum("oci,on->icn", layer.weights, delta)
        acc = g[-1].T
        for i in range(layer.degree - 1, -1, -1):
            acc = np.asarray(lap @ acc) + g[i].T
        delta = acc.T
    return Gradients(gw, gb, loss)


@dataclass
class AdamState:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)


def adam_step(
    state: AdamState, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]
) -> tuple[dict[str, np.ndarray], AdamState]:
    """One bias-corrected Adam update. Returns new parameter arrays; ``state`` is updated in place."""
    if params.keys() != grads.keys():
        raise ValueError("parameter and gradient names differ")
    for name, g in grads.items():
        if np.shape(g) != np.shape(params[name]):
            raise ValueError(f"gradient for {name} has shape {np.shape(g)}, expected {np.shape(params[name])}")
        if not np.all(np.isfinite(g)):
            raise TrainingDivergedError(f"non-finite gradient for {name}")
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1**state.t
    c2 = 1.0 - b2**state.t
    new = {}
    for name, p in params.items():
        g = np.asarray(grads[name], dtype=float)
        m = b1 * state.m.get(name, np.zeros_like(g)) + (1 - b1) * g
        v = b2 * state.v.get(name, np.zeros_like(g)) + (1 - b2) * g * g
        state.m[name], state.v[name] = m, v
        new[name] = p - state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
    return new, state


@dataclass
class TrainConfig:
    iterations: int = 1000
    lr: float = 1e-3
    seed: int = 0
    widths: tuple[int, ...] = (1, 30, 30, 1)
    degree: int = 5
    slope: float = 0.01
    standardize: bool = False
    normalize_laplacian: bool = False

    def __post_init__(self) -> None:
        self.widths = tuple(int(w) for w in self.widths)
        if self.iterations < 1:
            raise ValueError("iterations must be at least 1")
        if self.lr <= 0:
            raise ValueError("learning rate must be positive")
        if self.degree < 0:
            raise ValueError("degree must be non-negative")


def _set_params(model: SnnModel, params: dict[str, np.ndarray]) -> None:
    for k, layer in enumerate(model.layers):
        layer.weights = params[f"layers[{k}].weights"]
        layer.bias = params[f"layers[{k}].bias"]


def standardization(values, known_mask) -> tuple[float, float]:
    known = np.asarray(values, dtype=float)[np.asarray(known_mask, dtype=bool)]
    shift = float(np.mean(known))
    scale = float(np.std(known))
    return shift, scale if scale > 0 else 1.0


def train(
    model: SnnModel,
    laplacian,
    damaged_input,
    target,
    known_mask,
    config: TrainConfig,
) -> tuple[SnnModel, list[float]]:
    """Full-batch Adam on the masked L1 loss. Returns a trained copy and the loss per iteration."""
    if config.iterations < 1:
        raise ValueError("iterations must be at least 1")
    model = model.copy()
    if config.standardize:
        model.shift, model.scale = standardization(damaged_input, known_mask)
    state = AdamState(lr=config.lr)
    params = dict(model.parameters())
    history: list[float] = []
    for it in range(config.iterations):
        g = gradients(model, laplacian, damaged_input, target, known_mask)
        if not math.isfinite(g.loss):
            raise TrainingDivergedError(f"loss became {g.loss} at iteration {it}")
        history.append(g.loss)
        params, state = adam_step(state, params, dict(g.items()))
        _set_params(model, params)
    log.debug("trained %d iterations, final loss %.6g", config.iterations, history[-1])
    return model, history


# -- model file --------------------------------------------------------------

def write_model(model: SnnModel, stream: TextIO) -> None:
    stream.write("snn v1\n")
    stream.write(f"dimension {model.dimension}\n")
    stream.write(f"affine {model.shift!r} {model.scale!r}\n")
    for layer in model.layers:
        slope = "identity" if layer.slope is None else repr(layer.slope)
        stream.write(f"layer {layer.in_channels} {layer.out_channels} {layer.degree} {slope}\n")
        for w in layer.weights.ravel():
            stream.write(f"{float(w)!r}\n")
        for b in layer.bias:
            stream.write(f"{float(b)!r}\n")


def read_model(stream: TextIO) -> SnnModel:
    lines = [ln.strip() for ln in stream if ln.strip()]
    if not lines or lines[0] != "snn v1":
        raise ValueError("not an snn v1 model file")
    pos = 1
    dimension, shift, scale = 1, 0.0, 1.0
    if lines[pos].startswith("dimension "):
        dimension = int(lines[pos].split()[1])
        pos += 1
    if lines[pos].startswith("affine "):
        _, a, b = lines[pos].split()
        shift, scale = float(a), float(b)
        pos += 1
    layers = []
    while pos < len(lines):
        tag, c_in, c_out, degree, slope = lines[pos].split()
        if tag != "layer":
            raise ValueError(f"expected a layer header, got {lines[pos]!r}")
        c_in, c_out, degree = int(c_in), int(c_out), int(degree)
        pos += 1
        n_w = c_out * c_in * (degree + 1)
        w = np.array([float(v) for v in lines[pos:pos + n_w]]).reshape(c_out, c_in, degree + 1)
        pos += n_w
        b = np.array([float(v) for v in lines[pos:pos + c_out]])
        pos += c_out
        layers.append(ConvLayer(w, b, None if slope == "identity" else float(slope)))
    return SnnModel(layers, dimension=dimension, shift=shift, scale=scale)
