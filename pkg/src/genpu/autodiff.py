"""Dense float64 tensors, a reverse-mode tape, MLPs, and Adam.

Everything downstream (the adversarial game, the PU baselines) is built from
the primitives in this module. All arithmetic is float64 so that training
code can be compared against exact oracles without fighting precision.
"""

from __future__ import annotations

import base64

import numpy as np

__all__ = [
    "ShapeError",
    "ContractError",
    "DivergenceError",
    "Tensor",
    "Node",
    "Tape",
    "MlpNetwork",
    "AdamState",
    "forward",
    "backward",
    "adam_step",
    "stable_sigmoid",
    "stable_softplus",
    "stable_log_sigmoid",
    "encode_array",
    "decode_array",
]

ACTIVATIONS = ("identity", "relu", "leaky_relu", "tanh", "sigmoid")


class ShapeError(ValueError):
    """Operand shapes do not line up."""


class ContractError(ValueError):
    """An operation was called outside its contract (e.g. non-scalar loss)."""


class DivergenceError(RuntimeError):
    """A loss or gradient became non-finite during training."""


def stable_sigmoid(x: np.ndarray) -> np.ndarray:
    """1/(1+exp(-x)) without overflow for large |x|."""
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def stable_softplus(x: np.ndarray) -> np.ndarray:
    """log(1+exp(x)) computed as max(x,0) + log1p(exp(-|x|))."""
    return np.maximum(x, 0.0) + np.log1p(np.exp(-np.abs(x)))


def stable_log_sigmoid(x: np.ndarray) -> np.ndarray:
    """log(sigmoid(x)) = -softplus(-x); never produces -inf for finite x."""
    return np.minimum(x, 0.0) - np.log1p(np.exp(-np.abs(x)))


class Tensor:
    """Immutable dense float64 array.

    Thin wrapper used at module boundaries; it pins dtype, layout and
    finiteness once, after which numerical code works on the underlying
    ndarray (`.data` or `np.asarray(t)`).
    """

    __slots__ = ("data",)

    def __init__(self, data) -> None:
        arr = np.ascontiguousarray(data, dtype=np.float64)
        if not np.all(np.isfinite(arr)):
            raise ContractError("tensor holds non-finite values")
        arr.flags.writeable = False
        self.data = arr

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.data
        return self.data.astype(dtype)

    def __len__(self) -> int:
        return len(self.data)

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape})"


def _as_array(x) -> np.ndarray:
    if isinstance(x, Tensor):
        return x.data
    return np.asarray(x, dtype=np.float64)


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum a broadcast gradient back down to the operand's shape."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


class Node:
    """A value recorded on a tape plus how to push gradients back through it."""

    __slots__ = ("value", "parents", "vjps", "grad")

    def __init__(self, value: np.ndarray, parents=(), vjps=()) -> None:
        self.value = value
        self.parents = parents
        self.vjps = vjps
        self.grad: np.ndarray | None = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.value.shape


class Tape:
    """Ordered record of primitive operations.

    Nodes are appended in execution order, so the list itself is a
    topological order and the backward pass is a single reverse sweep that
    touches each node exactly once.
    """

    def __init__(self) -> None:
        self._nodes: list[Node] = []
        self._params: dict[str, Node] = {}

    def param(self, name: str, value: np.ndarray) -> Node:
        """Register a trainable leaf. Re-registering a name returns the same node."""
        node = self._params.get(name)
        if node is not None:
            if node.value is not value:
                raise ContractError(f"parameter {name!r} re-registered with a different array")
            return node
        node = Node(value)
        self._nodes.append(node)
        self._params[name] = node
        return node

    def constant(self, value) -> Node:
        node = Node(_as_array(value))
        self._nodes.append(node)
        return node

    def _lift(self, x) -> Node:
        return x if isinstance(x, Node) else self.constant(x)

    def _record(self, value, parents, vjps) -> Node:
        node = Node(np.asarray(value, dtype=np.float64), parents, vjps)
        self._nodes.append(node)
        return node

    # -- primitives ------------------------------------------------------

    def add(self, a: Node, b: Node) -> Node:
        a, b = self._lift(a), self._lift(b)
        return self._record(
            a.value + b.value,
            (a, b),
            (lambda g: _unbroadcast(g, a.value.shape), lambda g: _unbroadcast(g, b.value.shape)),
        )

    def sub(self, a: Node, b: Node) -> Node:
        a, b = self._lift(a), self._lift(b)
        return self._record(
            a.value - b.value,
            (a, b),
            (lambda g: _unbroadcast(g, a.value.shape), lambda g: _unbroadcast(-g, b.value.shape)),
        )

    def mul(self, a: Node, b: Node) -> Node:
        a, b = self._lift(a), self._lift(b)
        return self._record(
            a.value * b.value,
            (a, b),
            (
                lambda g: _unbroadcast(g * b.value, a.value.shape),
                lambda g: _unbroadcast(g * a.value, b.value.shape),
            ),
        )

    def scale(self, a: Node, c: float) -> Node:
        """Multiply by a python scalar without creating a constant node."""
        c = float(c)
        return self._record(a.value * c, (a,), (lambda g: g * c,))

    def neg(self, a: Node) -> Node:
        return self._record(-a.value, (a,), (lambda g: -g,))

    def matmul(self, a: Node, b: Node) -> Node:
        if a.value.ndim != 2 or b.value.ndim != 2 or a.value.shape[1] != b.value.shape[0]:
            raise ShapeError(f"matmul shapes {a.value.shape} x {b.value.shape} do not chain")
        return self._record(
            a.value @ b.value,
            (a, b),
            (lambda g: g @ b.value.T, lambda g: a.value.T @ g),
        )

    def relu(self, a: Node) -> Node:
        mask = a.value > 0
        return self._record(np.where(mask, a.value, 0.0), (a,), (lambda g: g * mask,))

    def leaky_relu(self, a: Node, slope: float = 0.2) -> Node:
        factor = np.where(a.value > 0, 1.0, slope)
        return self._record(a.value * factor, (a,), (lambda g: g * factor,))

    def tanh(self, a: Node) -> Node:
        t = np.tanh(a.value)
        return self._record(t, (a,), (lambda g: g * (1.0 - t * t),))

    def sigmoid(self, a: Node) -> Node:
        s = stable_sigmoid(a.value)
        return self._record(s, (a,), (lambda g: g * s * (1.0 - s),))

    def softplus(self, a: Node) -> Node:
        return self._record(
            stable_softplus(a.value),
            (a,),
            (lambda g: g * stable_sigmoid(a.value),),
        )

    def log_sigmoid(self, a: Node) -> Node:
        return self._record(
            stable_log_sigmoid(a.value),
            (a,),
            (lambda g: g * stable_sigmoid(-a.value),),
        )

    def mean(self, a: Node) -> Node:
        n = a.value.size
        return self._record(a.value.mean(), (a,), (lambda g: np.full(a.value.shape, g / n),))

    def sum(self, a: Node) -> Node:
        return self._record(a.value.sum(), (a,), (lambda g: np.full(a.value.shape, g),))

    # -- reverse sweep ---------------------------------------------------

    def backward(self, loss: Node) -> dict[str, np.ndarray]:
        """Gradient of a scalar loss with respect to every registered parameter."""
        if loss.value.shape != ():
            raise ContractError(f"loss must be scalar, got shape {loss.value.shape}")
        if not np.isfinite(loss.value):
            raise DivergenceError("loss is non-finite")
        for node in self._nodes:
            node.grad = None
        loss.grad = np.ones((), dtype=np.float64)
        for node in reversed(self._nodes):
            g = node.grad
            if g is None:
                continue
            for parent, vjp in zip(node.parents, node.vjps):
                contrib = vjp(g)
                parent.grad = contrib if parent.grad is None else parent.grad + contrib
        return {
            name: (node.grad if node.grad is not None else np.zeros_like(node.value))
            for name, node in self._params.items()
        }


class MlpNetwork:
    """Fully connected stack: per layer a weight [in, out], bias [out], activation.

    Weights are owned by the network as plain mutable arrays; the optimizer
    updates them in place. `apply` is a pure forward pass, `on_tape` records
    the same arithmetic for differentiation.
    """

    def __init__(self, name: str, weights, biases, activations, *, leaky_slope: float = 0.2):
        if not (len(weights) == len(biases) == len(activations)):
            raise ContractError("layer lists must have equal length")
        for act in activations:
            if act not in ACTIVATIONS:
                raise ContractError(f"unknown activation {act!r}")
        for i, (w, b) in enumerate(zip(weights, biases)):
            if w.ndim != 2 or b.shape != (w.shape[1],):
                raise ShapeError(f"layer {i}: weight {w.shape} / bias {b.shape} mismatch")
            if i + 1 < len(weights) and w.shape[1] != weights[i + 1].shape[0]:
                raise ShapeError(f"layers {i}->{i + 1}: dimensions do not chain")
        self.name = name
        self.weights = list(weights)
        self.biases = list(biases)
        self.activations = list(activations)
        self.leaky_slope = float(leaky_slope)

    @classmethod
    def create(
        cls,
        name: str,
        sizes: list[int],
        hidden_activation: str,
        output_activation: str,
        rng: np.random.Generator,
        *,
        leaky_slope: float = 0.2,
        init: str = "glorot",
    ) -> "MlpNetwork":
        """Build a network from layer sizes.

        `init="glorot"` draws weights uniform in +-sqrt(6/(fan_in+fan_out));
        `init="zeros"` reproduces an all-zero start (useful for audits: a
        zero-symmetric multilayer net cannot break symmetry during training).
        Biases start at zero either way.
        """
        if len(sizes) < 2:
            raise ContractError("need at least an input and an output size")
        if init not in ("glorot", "zeros"):
            raise ContractError(f"unknown init {init!r}")
        weights, biases, activations = [], [], []
        for i, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:])):
            if init == "zeros":
                w = np.zeros((fan_in, fan_out))
            else:
                limit = np.sqrt(6.0 / (fan_in + fan_out))
                w = rng.uniform(-limit, limit, size=(fan_in, fan_out))
            weights.append(w)
            biases.append(np.zeros(fan_out))
            last = i == len(sizes) - 2
            activations.append(output_activation if last else hidden_activation)
        return cls(name, weights, biases, activations, leaky_slope=leaky_slope)

    @property
    def in_dim(self) -> int:
        return self.weights[0].shape[0]

    @property
    def out_dim(self) -> int:
        return self.weights[-1].shape[1]

    @property
    def param_count(self) -> int:
        return sum(w.size for w in self.weights) + sum(b.size for b in self.biases)

    def parameters(self) -> dict[str, np.ndarray]:
        out: dict[str, np.ndarray] = {}
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            out[f"{self.name}.w{i}"] = w
            out[f"{self.name}.b{i}"] = b
        return out

    def _check_input(self, x: np.ndarray) -> None:
        if x.ndim != 2 or x.shape[1] != self.in_dim:
            raise ShapeError(f"{self.name}: batch shape {x.shape} does not match input dim {self.in_dim}")

    def _activate(self, x: np.ndarray, act: str) -> np.ndarray:
        if act == "identity":
            return x
        if act == "relu":
            return np.maximum(x, 0.0)
        if act == "leaky_relu":
            return np.where(x > 0, x, self.leaky_slope * x)
        if act == "tanh":
            return np.tanh(x)
        return stable_sigmoid(x)

    def apply(self, x) -> np.ndarray:
        """Pure forward pass, no tape."""
        h = _as_array(x)
        self._check_input(h)
        for w, b, act in zip(self.weights, self.biases, self.activations):
            h = self._activate(h @ w + b, act)
        return h

    def apply_logits(self, x) -> np.ndarray:
        """Forward pass that skips the final sigmoid, returning pre-activations."""
        if self.activations[-1] != "sigmoid":
            raise ContractError(f"{self.name}: final activation is not sigmoid")
        h = _as_array(x)
        self._check_input(h)
        for i, (w, b, act) in enumerate(zip(self.weights, self.biases, self.activations)):
            h = h @ w + b
            if i < len(self.weights) - 1:
                h = self._activate(h, act)
        return h

    def on_tape(self, tape: Tape, x, *, logits: bool = False, trainable: bool = True) -> Node:
        """Record the forward pass on a tape.

        With `trainable=False` the weights enter as constants, so gradients
        flow through the network (into whatever produced `x`) but never into
        its own parameters.
        """
        if logits and self.activations[-1] != "sigmoid":
            raise ContractError(f"{self.name}: logits requested but final activation is not sigmoid")
        h = x if isinstance(x, Node) else tape.constant(x)
        self._check_input(h.value)
        for i, (w, b, act) in enumerate(zip(self.weights, self.biases, self.activations)):
            if trainable:
                wn = tape.param(f"{self.name}.w{i}", w)
                bn = tape.param(f"{self.name}.b{i}", b)
            else:
                wn = tape.constant(w)
                bn = tape.constant(b)
            h = tape.add(tape.matmul(h, wn), bn)
            last = i == len(self.weights) - 1
            if last and logits:
                break
            if act == "relu":
                h = tape.relu(h)
            elif act == "leaky_relu":
                h = tape.leaky_relu(h, self.leaky_slope)
            elif act == "tanh":
                h = tape.tanh(h)
            elif act == "sigmoid":
                h = tape.sigmoid(h)
        return h


def forward(net: MlpNetwork, batch, tape: Tape, *, logits: bool = False, trainable: bool = True) -> Node:
    """Run `net` on `batch`, recording every primitive on `tape`."""
    return net.on_tape(tape, batch, logits=logits, trainable=trainable)


def backward(tape: Tape, loss: Node) -> dict[str, np.ndarray]:
    """Gradient map of a scalar loss over the tape's registered parameters."""
    return tape.backward(loss)


class AdamState:
    """First/second moment accumulators for one named parameter set."""

    def __init__(self, params: dict[str, np.ndarray], beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.beta1 = float(beta1)
        self.beta2 = float(beta2)
        self.eps = float(eps)
        self.t = 0
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}


def adam_step(
    params: dict[str, np.ndarray],
    grads: dict[str, np.ndarray],
    state: AdamState,
    lr: float,
) -> dict[str, np.ndarray]:
    """One Adam update with bias correction, applied in place.

    lr=0 leaves every parameter bit-identical (the moments still advance).
    """
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1**state.t
    c2 = 1.0 - b2**state.t
    for name, p in params.items():
        g = grads[name]
        if g.shape != p.shape:
            raise ShapeError(f"gradient shape {g.shape} != parameter shape {p.shape} for {name!r}")
        if not np.all(np.isfinite(g)):
            raise DivergenceError(f"non-finite gradient for parameter {name!r}")
        m = state.m[name]
        v = state.v[name]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        p -= lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
    return params


# -- serialization helpers (checkpoint format building blocks) ------------


def encode_array(arr: np.ndarray) -> dict:
    """JSON-safe, bit-exact encoding of a float64 array."""
    a = np.ascontiguousarray(arr, dtype=np.float64)
    return {"shape": list(a.shape), "data": base64.b64encode(a.tobytes()).decode("ascii")}


def decode_array(blob: dict) -> np.ndarray:
    raw = base64.b64decode(blob["data"])
    return np.frombuffer(raw, dtype=np.float64).reshape(blob["shape"]).copy()


def network_to_dict(net: MlpNetwork) -> dict:
    return {
        "name": net.name,
        "activations": list(net.activations),
        "leaky_slope": net.leaky_slope,
        "weights": [encode_array(w) for w in net.weights],
        "biases": [encode_array(b) for b in net.biases],
    }


def network_from_dict(blob: dict) -> MlpNetwork:
    return MlpNetwork(
        blob["name"],
        [decode_array(w) for w in blob["weights"]],
        [decode_array(b) for b in blob["biases"]],
        blob["activations"],
        leaky_slope=blob["leaky_slope"],
    )


def adam_to_dict(state: AdamState) -> dict:
    return {
        "beta1": state.beta1,
        "beta2": state.beta2,
        "eps": state.eps,
        "t": state.t,
        "m": {k: encode_array(v) for k, v in state.m.items()},
        "v": {k: encode_array(v) for k, v in state.v.items()},
    }


def adam_from_dict(blob: dict) -> AdamState:
    state = AdamState({}, beta1=blob["beta1"], beta2=blob["beta2"], eps=blob["eps"])
    state.t = blob["t"]
    state.m = {k: decode_array(v) for k, v in blob["m"].items()}
    state.v = {k: decode_array(v) for k, v in blob["v"].items()}
    return state
