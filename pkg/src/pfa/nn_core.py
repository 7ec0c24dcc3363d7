"""Minimal dense neural-network engine with exact analytic backprop.

Layer menu: affine, layer normalization, dropout, activations (identity,
relu, leaky relu, sigmoid), residual skip, and a feature-wise attention
gate (per-feature sigmoid weights from an affine of the current hidden
state, multiplied onto it).  Everything is float64; batches are row-major
``(n_rows, n_features)`` C-contiguous arrays.

Shape chaining is validated once at construction.  Forward passes record a
tape of cached activations from which :meth:`Network.backward` produces
exact gradients for every parameter block plus the gradient with respect
to the input batch, so networks can be chained (a downstream network's
input gradient feeds an upstream one's backward pass).

RNG is always an explicit ``numpy.random.Generator``; the engine keeps no
global random state.  A network instance is single-owner during training;
distinct instances may train concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from pfa import backend
from pfa.errors import DimensionError, NumericError, StateError

ACTIVATIONS = {"identity": 0, "relu": 1, "leaky_relu": 2, "sigmoid": 3}

LAYER_NORM_EPS = 1e-5


@dataclass
class AdamConfig:
    """Adam hyperparameters: step size, decay rates, stabilizer."""

    eta: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def validate(self):
        if self.eta <= 0:
            raise ValueError("eta must be > 0")
        if not (0 < self.beta1 < 1 and 0 < self.beta2 < 1):
            raise ValueError("decay rates must be in (0, 1)")
        if self.eps <= 0:
            raise ValueError("eps must be > 0")


class Affine:
    """Dense layer: out = x @ W + b, with W of shape (in_dim, out_dim)."""

    kind = "affine"
    param_names = ("W", "b")

    def __init__(self, in_dim, out_dim, activation="identity", slope=0.01):
        if in_dim < 1 or out_dim < 1:
            raise DimensionError("affine dims must be >= 1")
        if activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {activation!r}")
        self.in_dim = int(in_dim)
        self.out_dim = int(out_dim)
        self.activation = activation
        self.slope = float(slope)

    def init_params(self, rng):
        limit = np.sqrt(6.0 / (self.in_dim + self.out_dim))
        w = rng.uniform(-limit, limit, size=(self.in_dim, self.out_dim))
        return {"W": w, "b": np.zeros(self.out_dim)}

    def forward(self, x, params, train_mode, rng):
        z = x @ params["W"]
        z += params["b"]
        act = ACTIVATIONS[self.activation]
        if act == 0:
            return z, {"x": x, "z": z, "a": z}
        a = np.empty_like(z)
        backend.active.act_forward(z.ravel(), a.ravel(), act, self.slope)
        return a, {"x": x, "z": z, "a": a}

    def backward(self, cache, dout, params):
        act = ACTIVATIONS[self.activation]
        if act == 0:
            dz = dout
        else:
            dz = np.empty_like(dout)
            backend.active.act_backward(
                cache["z"].ravel(), cache["a"].ravel(), dout.ravel(), dz.ravel(), act, self.slope
            )
        grads = {"W": cache["x"].T @ dz, "b": dz.sum(axis=0)}
        dx = dz @ params["W"].T
        return dx, grads

    def descriptor(self):
        return {
            "kind": self.kind,
            "in_dim": self.in_dim,
            "out_dim": self.out_dim,
            "activation": self.activation,
            "slope": self.slope,
        }


class LayerNorm:
    """Per-sample normalization over features, learned gain/bias."""

    kind = "layer_norm"
    param_names = ("gain", "bias")

    def __init__(self, dim, eps=LAYER_NORM_EPS):
        self.in_dim = self.out_dim = int(dim)
        self.eps = float(eps)

    def init_params(self, rng):
        return {"gain": np.ones(self.out_dim), "bias": np.zeros(self.out_dim)}

    def forward(self, x, params, train_mode, rng):
        y = np.empty_like(x)
        xhat = np.empty_like(x)
        inv_std = np.empty(x.shape[0])
        backend.active.layer_norm_forward(x, params["gain"], params["bias"], self.eps, y, xhat, inv_std)
        return y, {"xhat": xhat, "inv_std": inv_std}

    def backward(self, cache, dout, params):
        dx = np.empty_like(dout)
        dgain = np.empty(self.out_dim)
        dbias = np.empty(self.out_dim)
        backend.active.layer_norm_backward(
            cache["xhat"], cache["inv_std"], params["gain"], np.ascontiguousarray(dout), dx, dgain, dbias
        )
        return dx, {"gain": dgain, "bias": dbias}

    def descriptor(self):
        return {"kind": self.kind, "dim": self.out_dim, "eps": self.eps}


class Activation:
    """Standalone elementwise activation layer."""

    kind = "activation"
    param_names = ()

    def __init__(self, name, slope=0.01):
        if name not in ACTIVATIONS:
            raise ValueError(f"unknown activation {name!r}")
        self.name = name
        self.slope = float(slope)
        self.in_dim = self.out_dim = None  # width-agnostic

    def init_params(self, rng):
        return {}

    def forward(self, x, params, train_mode, rng):
        a = np.empty_like(x)
        backend.active.act_forward(x.ravel(), a.ravel(), ACTIVATIONS[self.name], self.slope)
        return a, {"z": x, "a": a}

    def backward(self, cache, dout, params):
        dx = np.empty_like(dout)
        backend.active.act_backward(
            cache["z"].ravel(), cache["a"].ravel(), dout.ravel(), dx.ravel(),
            ACTIVATIONS[self.name], self.slope,
        )
        return dx, {}

    def descriptor(self):
        return {"kind": self.kind, "name": self.name, "slope": self.slope}


class Dropout:
    """Inverted dropout: train-time masks scaled by 1/(1-rate), eval is identity."""

    kind = "dropout"
    param_names = ()

    def __init__(self, rate):
        if not 0.0 <= rate < 1.0:
            raise ValueError("dropout rate must be in [0, 1)")
        self.rate = float(rate)
        self.in_dim = self.out_dim = None

    def init_params(self, rng):
        return {}

    def forward(self, x, params, train_mode, rng):
        if not train_mode or self.rate == 0.0:
            return x, {"mask": None}
        if rng is None:
            raise StateError("train-mode forward through dropout requires an rng")
        mask = (rng.random(x.shape) >= self.rate) / (1.0 - self.rate)
        return x * mask, {"mask": mask}

    def backward(self, cache, dout, params):
        if cache["mask"] is None:
            return dout, {}
        return dout * cache["mask"], {}

    def descriptor(self):
        return {"kind": self.kind, "rate": self.rate}


class ResidualAdd:
    """Adds the recorded output of an earlier layer to the current state."""

    kind = "residual_add"
    param_names = ()

    def __init__(self, source):
        self.source = int(source)
        self.in_dim = self.out_dim = None

    def init_params(self, rng):
        return {}

    def descriptor(self):
        return {"kind": self.kind, "source": self.source}


class AttentionGate:
    """Feature-wise gate: out = sigmoid(x @ W + b) * x."""

    kind = "attention_gate"
    param_names = ("W", "b")

    def __init__(self, dim):
        self.in_dim = self.out_dim = int(dim)

    def init_params(self, rng):
        limit = np.sqrt(6.0 / (2 * self.out_dim))
        w = rng.uniform(-limit, limit, size=(self.out_dim, self.out_dim))
        return {"W": w, "b": np.zeros(self.out_dim)}

    def forward(self, x, params, train_mode, rng):
        z = x @ params["W"]
        z += params["b"]
        a = np.empty_like(z)
        backend.active.act_forward(z.ravel(), a.ravel(), ACTIVATIONS["sigmoid"], 0.0)
        return a * x, {"x": x, "a": a}

    def backward(self, cache, dout, params):
        x, a = cache["x"], cache["a"]
        da = dout * x
        dz = np.empty_like(da)
        backend.active.act_backward(
            a.ravel(), a.ravel(), da.ravel(), dz.ravel(), ACTIVATIONS["sigmoid"], 0.0
        )
        grads = {"W": x.T @ dz, "b": dz.sum(axis=0)}
        dx = dout * a + dz @ params["W"].T
        return dx, grads

    def descriptor(self):
        return {"kind": self.kind, "dim": self.out_dim}


_LAYER_KINDS = {
    "affine": Affine,
    "layer_norm": LayerNorm,
    "activation": Activation,
    "dropout": Dropout,
    "residual_add": ResidualAdd,
    "attention_gate": AttentionGate,
}


def layer_from_descriptor(desc):
    kind = desc.get("kind")
    if kind == "affine":
        return Affine(desc["in_dim"], desc["out_dim"], desc.get("activation", "identity"), desc.get("slope", 0.01))
    if kind == "layer_norm":
        return LayerNorm(desc["dim"], desc.get("eps", LAYER_NORM_EPS))
    if kind == "activation":
        return Activation(desc["name"], desc.get("slope", 0.01))
    if kind == "dropout":
        return Dropout(desc["rate"])
    if kind == "residual_add":
        return ResidualAdd(desc["source"])
    if kind == "attention_gate":
        return AttentionGate(desc["dim"])
    raise ValueError(f"unknown layer kind {kind!r}")


class Network:
    """Ordered layer stack with parameters, Adam moments, and a step counter.

    Construction validates that widths chain (including residual sources) and
    initializes parameters from ``rng``, consuming it in layer order.
    """

    def __init__(self, input_dim, layers, rng):
        self.input_dim = int(input_dim)
        self.layers = list(layers)
        self._widths = self._validate()
        self.output_dim = self._widths[-1]
        self.params = [layer.init_params(rng) for layer in self.layers]
        self.adam_m = [{k: np.zeros_like(v) for k, v in p.items()} for p in self.params]
        self.adam_v = [{k: np.zeros_like(v) for k, v in p.items()} for p in self.params]
        self.t = 0

    def _validate(self):
        widths = []
        cur = self.input_dim
        for i, layer in enumerate(self.layers):
            if isinstance(layer, ResidualAdd):
                if not 0 <= layer.source < i:
                    raise DimensionError(f"residual source {layer.source} out of range at layer {i}")
                if widths[layer.source] != cur:
                    raise DimensionError(
                        f"residual width mismatch at layer {i}: "
                        f"{widths[layer.source]} (source) vs {cur} (current)"
                    )
            elif layer.in_dim is not None:
                if layer.in_dim != cur:
                    raise DimensionError(f"layer {i} expects width {layer.in_dim}, got {cur}")
                cur = layer.out_dim
            widths.append(cur)
        return widths

    # -- forward / backward ------------------------------------------------

    def forward(self, x, train_mode=False, rng=None):
        """Run the stack; returns (output, tape) with tape usable by backward."""
        x = np.ascontiguousarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.input_dim:
            raise DimensionError(f"batch has width {x.shape}, expected (n, {self.input_dim})")
        outputs = []
        caches = []
        cur = x
        for layer, params in zip(self.layers, self.params):
            if isinstance(layer, ResidualAdd):
                cur = cur + outputs[layer.source]
                caches.append({"source": layer.source})
            else:
                cur, cache = layer.forward(cur, params, train_mode, rng)
                caches.append(cache)
            outputs.append(cur)
        if not np.isfinite(cur).all():
            raise NumericError("non-finite activation in forward pass")
        tape = {"input": x, "outputs": outputs, "caches": caches, "n": x.shape[0]}
        return cur, tape

    def backward(self, tape, upstream_grad):
        """Exact gradients for the scalar loss whose output gradient is given.

        Returns (param_grads, input_grad); param_grads mirrors the layer/param
        structure of :attr:`params`.
        """
        if tape is None or "outputs" not in tape:
            raise StateError("backward requires the tape of a matching forward call")
        up = np.asarray(upstream_grad, dtype=np.float64)
        if up.shape != tape["outputs"][-1].shape:
            raise DimensionError("upstream gradient shape does not match forward output")
        n_layers = len(self.layers)
        pending = [None] * n_layers  # gradient w.r.t. each layer's output
        pending[n_layers - 1] = up
        grads = [None] * n_layers
        input_grad = None
        for i in range(n_layers - 1, -1, -1):
            g = pending[i]
            layer = self.layers[i]
            if isinstance(layer, ResidualAdd):
                src = tape["caches"][i]["source"]
                pending[src] = g if pending[src] is None else pending[src] + g
                dx, layer_grads = g, {}
            else:
                dx, layer_grads = layer.backward(tape["caches"][i], g, self.params[i])
            grads[i] = layer_grads
            if i == 0:
                input_grad = dx
            elif pending[i - 1] is None:
                pending[i - 1] = dx
            else:
                pending[i - 1] = pending[i - 1] + dx
        return grads, input_grad

    # -- optimization -------------------------------------------------------

    def adam_step(self, param_grads, cfg):
        """One Adam update over every parameter block; advances t once."""
        for layer_grads in param_grads:
            for g in layer_grads.values():
                if not np.isfinite(g).all():
                    raise NumericError("non-finite gradient in adam step")
        self.t += 1
        bc1 = 1.0 - cfg.beta1 ** self.t
        bc2 = 1.0 - cfg.beta2 ** self.t
        for layer, params, m, v, layer_grads in zip(
            self.layers, self.params, self.adam_m, self.adam_v, param_grads
        ):
            for name in layer.param_names:
                backend.active.adam_update(
                    params[name].ravel(), np.ascontiguousarray(layer_grads[name]).ravel(),
                    m[name].ravel(), v[name].ravel(),
                    cfg.eta, cfg.beta1, cfg.beta2, cfg.eps, bc1, bc2,
                )

    # -- introspection / serialization ---------------------------------------

    def parameter_blocks(self):
        """Deterministically ordered (key, array) pairs over all parameters."""
        for i, layer in enumerate(self.layers):
            for name in layer.param_names:
                yield f"{i}.{layer.kind}.{name}", self.params[i][name]

    def parameter_bytes(self):
        """Concatenated little-endian float64 bytes of all parameter blocks."""
        return b"".join(np.ascontiguousarray(a, dtype="<f8").tobytes() for _, a in self.parameter_blocks())

    def load_parameter_bytes(self, blob):
        offset = 0
        for _, arr in self.parameter_blocks():
            nbytes = arr.size * 8
            chunk = np.frombuffer(blob, dtype="<f8", count=arr.size, offset=offset)
            arr[:] = chunk.reshape(arr.shape)
            offset += nbytes
        if offset != len(blob):
            raise StateError(f"parameter blob has {len(blob)} bytes, expected {offset}")

    def describe(self):
        """JSON-ready architecture descriptor (layer kinds, dims, rates)."""
        return {"input_dim": self.input_dim, "layers": [layer.descriptor() for layer in self.layers]}

    @classmethod
    def from_descriptor(cls, desc, rng):
        layers = [layer_from_descriptor(d) for d in desc["layers"]]
        return cls(desc["input_dim"], layers, rng)
